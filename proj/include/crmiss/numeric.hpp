#pragma once

#include <span>

namespace crmiss {

double expit(double z);
double logit(double p);

// log(expit(z)) and log(1 - expit(z)) without cancellation for large |z|.
double log_expit(double z);
double log1m_expit(double z);

// Throws DomainError on an empty input.
double log_sum_exp(std::span<const double> values);

double normal_cdf(double z);
double normal_quantile(double p);

}  // namespace crmiss

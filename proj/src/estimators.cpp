#include "crmiss/estimators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <vector>

#include "crmiss/errors.hpp"

namespace crmiss {

std::string_view estimator_name(Estimator e) {
  switch (e) {
    case Estimator::cca:
      return "CCA";
    case Estimator::lq2:
      return "LQ2";
    case Estimator::ly:
      return "LY";
    case Estimator::gr:
      return "GR";
  }
  return "?";
}

std::optional<Estimator> parse_estimator(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "cca") return Estimator::cca;
  if (lower == "lq2" || lower == "lq") return Estimator::lq2;
  if (lower == "ly") return Estimator::ly;
  if (lower == "gr") return Estimator::gr;
  return std::nullopt;
}

ParameterVector initial_values(const ParameterLayout& layout, const Dataset& data,
                               const BaselineRatioSpec* alpha) {
  ParameterVector theta(layout);
  if (!alpha || alpha->form() != AlphaForm::power_law || !layout.has(BlockKind::eta))
    return theta;
  std::vector<double> counts(static_cast<std::size_t>(data.causes()) + 1, 0.0);
  for (const auto& r : data.records())
    if (r.subtype_observed) counts[static_cast<std::size_t>(*r.subtype)] += 1.0;
  const auto& eta = layout.at(BlockKind::eta);
  for (int s = 0; s < alpha->strata(); ++s)
    for (int k = 2; k <= alpha->causes(); ++k) {
      const double d1 = counts[1];
      const double dk = counts[static_cast<std::size_t>(k)];
      const double start = d1 > 0.0 && dk > 0.0 ? std::log(dk / d1) : 0.0;
      theta.values()[static_cast<Eigen::Index>(eta.offset + alpha->offset(s, k))] = start;
    }
  return theta;
}

FitResult fit_cca(const Dataset& data, const FitOptions& options, bool drop_rows) {
  const Dataset reduced = drop_rows ? data.without_missing_subtype_events() : data;
  const auto layout = ParameterLayout::standard(reduced.covariate_count(), reduced.causes());
  for (int k = 1; k <= reduced.causes(); ++k) {
    const bool any = std::any_of(reduced.records().begin(), reduced.records().end(),
                                 [&](const auto& r) { return r.subtype == k; });
    if (!any) throw FitError("no usable events for subtype " + std::to_string(k));
  }
  const Objective f = [&](const ParameterVector& theta, Order order) {
    return loglik_cca(reduced, theta, order);
  };
  return maximize(f, ParameterVector(layout), reduced.size(), options);
}

FitResult fit_lstar_q2(const Dataset& data, const BaselineRatioSpec& alpha, const NuModel& nu,
                       const FitOptions& options) {
  const auto layout =
      ParameterLayout::standard(data.covariate_count(), data.causes(), &alpha, &nu);
  const Objective f = [&](const ParameterVector& theta, Order order) {
    return loglik_lstar_q2(data, alpha, nu, theta, order);
  };
  return maximize(f, initial_values(layout, data, &alpha), data.size(), options);
}

FitResult fit_lstar_y(const Dataset& data, const BaselineRatioSpec& alpha,
                      const MissingnessModel& miss, const FitOptions& options) {
  const auto layout =
      ParameterLayout::standard(data.covariate_count(), data.causes(), &alpha, nullptr, &miss);
  const Objective f = [&](const ParameterVector& theta, Order order) {
    return loglik_lstar_y(data, alpha, miss, theta, order);
  };
  return maximize(f, initial_values(layout, data, &alpha), data.size(), options);
}

FitResult fit_gr(const Dataset& data, const BaselineRatioSpec& alpha,
                 const MissingnessModel& miss, const FitOptions& options) {
  const auto layout =
      ParameterLayout::standard(data.covariate_count(), data.causes(), &alpha, nullptr, &miss);
  const SystemFunction f = [&](const ParameterVector& theta, bool jacobian) {
    return gr_system(data, alpha, miss, theta, jacobian);
  };
  return solve_gr(f, initial_values(layout, data, &alpha), data.size(), options);
}

}  // namespace crmiss

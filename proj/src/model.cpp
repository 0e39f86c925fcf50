#include "crmiss/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "crmiss/errors.hpp"
#include "crmiss/numeric.hpp"

namespace crmiss {

void validate_record(const SubjectRecord& r, std::size_t covariate_count) {
  if (!(r.time >= 0.0) || !std::isfinite(r.time)) throw DataError("time must be finite and >= 0");
  if (r.covariates.size() != covariate_count) throw DataError("covariate count mismatch");
  for (double v : r.covariates)
    if (!std::isfinite(v)) throw DataError("non-finite covariate");
  if (r.stratum < 0) throw DataError("negative stratum");
  if (r.subtype_observed && !r.event) throw DataError("subtype observed on a censored record");
  if (r.subtype_observed != r.subtype.has_value())
    throw DataError("subtype must be present exactly when subtype_observed");
  if (!r.event && r.aux.has_value()) throw DataError("aux present on a censored record");
  if (r.subtype && *r.subtype < 1) throw DataError("subtype must be >= 1");
  if (r.aux && *r.aux < 0) throw DataError("aux must be >= 0");
}

// ---------------------------------------------------------------------------

BaselineRatioSpec::BaselineRatioSpec(AlphaForm form, int causes, std::vector<double> cuts,
                                     int strata)
    : form_(form), causes_(causes), cuts_(std::move(cuts)), strata_(strata) {
  if (causes_ < 1) throw ConfigError("need at least one cause");
  if (strata_ < 1) throw ConfigError("need at least one stratum");
  for (std::size_t i = 0; i < cuts_.size(); ++i) {
    if (!std::isfinite(cuts_[i]) || cuts_[i] <= 0.0)
      throw ConfigError("cut points must be finite and positive");
    if (i > 0 && !(cuts_[i] > cuts_[i - 1]))
      throw ConfigError("cut points must be strictly increasing");
  }
}

BaselineRatioSpec BaselineRatioSpec::power_law(int causes, int strata) {
  return BaselineRatioSpec(AlphaForm::power_law, causes, {}, strata);
}

BaselineRatioSpec BaselineRatioSpec::piecewise_constant(int causes, std::vector<double> cuts,
                                                        int strata) {
  return BaselineRatioSpec(AlphaForm::piecewise_constant, causes, std::move(cuts), strata);
}

std::size_t BaselineRatioSpec::basis_size() const {
  return form_ == AlphaForm::power_law ? 2 : cuts_.size() + 1;
}

std::size_t BaselineRatioSpec::parameter_count() const {
  return static_cast<std::size_t>(strata_) * static_cast<std::size_t>(causes_ - 1) *
         basis_size();
}

std::size_t BaselineRatioSpec::offset(int stratum, int cause) const {
  return (static_cast<std::size_t>(stratum) * static_cast<std::size_t>(causes_ - 1) +
          static_cast<std::size_t>(cause - 2)) *
         basis_size();
}

void BaselineRatioSpec::basis(double t, std::span<double> out) const {
  if (form_ == AlphaForm::power_law) {
    out[0] = 1.0;
    out[1] = std::log(t);
    return;
  }
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(basis_size()), 0.0);
  const auto interval = std::upper_bound(cuts_.begin(), cuts_.end(), t) - cuts_.begin();
  out[static_cast<std::size_t>(interval)] = 1.0;
}

void BaselineRatioSpec::check(int cause, double t, int stratum) const {
  if (cause < 1 || cause > causes_) throw DomainError("cause out of range");
  if (stratum < 0 || stratum >= strata_) throw DomainError("unknown stratum");
  if (!(t > 0.0)) throw DomainError("alpha requires t > 0");
}

double BaselineRatioSpec::log_alpha(int cause, double t, std::span<const double> eta,
                                    int stratum) const {
  check(cause, t, stratum);
  if (cause == 1) return 0.0;
  if (eta.size() != parameter_count()) throw DomainError("eta has the wrong length");
  const std::size_t m = basis_size();
  std::vector<double> b(m);
  basis(t, b);
  const std::size_t off = offset(stratum, cause);
  double out = 0.0;
  for (std::size_t j = 0; j < m; ++j) out += eta[off + j] * b[j];
  return out;
}

double alpha_eval(const BaselineRatioSpec& spec, int cause, double t,
                  std::span<const double> eta, int stratum) {
  return std::exp(spec.log_alpha(cause, t, eta, stratum));
}

double relative_hazard(const BaselineRatioSpec& spec, int cause, double t,
                       std::span<const double> x, std::span<const double> beta_k,
                       std::span<const double> eta, int stratum) {
  if (x.size() != beta_k.size()) throw DomainError("x and beta_k differ in length");
  double lp = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) lp += x[j] * beta_k[j];
  return std::exp(spec.log_alpha(cause, t, eta, stratum) + lp);
}

// ---------------------------------------------------------------------------

NuModel::NuModel(int causes, int levels)
    : NuModel(causes, levels, Eigen::MatrixXd::Zero(causes, std::max(levels - 1, 0))) {}

NuModel::NuModel(int causes, int levels, Eigen::MatrixXd psi)
    : causes_(causes), levels_(levels), psi_(std::move(psi)) {
  if (causes_ < 1 || levels_ < 1) throw ConfigError("nu model needs causes >= 1, levels >= 1");
  if (psi_.rows() != causes_ || psi_.cols() != levels_ - 1)
    throw ConfigError("psi must be causes x (levels - 1)");
}

std::size_t NuModel::parameter_count() const {
  return static_cast<std::size_t>(causes_) * static_cast<std::size_t>(levels_ - 1);
}

std::vector<double> NuModel::packed() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (int k = 0; k < causes_; ++k)
    for (int l = 0; l < levels_ - 1; ++l) out.push_back(psi_(k, l));
  return out;
}

std::vector<double> NuModel::probabilities(int cause, std::span<const double> packed) const {
  if (cause < 1 || cause > causes_) throw DomainError("cause out of range");
  const std::size_t width = static_cast<std::size_t>(levels_ - 1);
  std::vector<double> logits(static_cast<std::size_t>(levels_), 0.0);
  for (std::size_t l = 0; l < width; ++l)
    logits[l + 1] = packed[static_cast<std::size_t>(cause - 1) * width + l];
  const double lse = log_sum_exp(logits);
  for (double& v : logits) v = std::exp(v - lse);
  return logits;
}

double NuModel::log_prob(int cause, int q, std::span<const double> packed) const {
  if (cause < 1 || cause > causes_) throw DomainError("cause out of range");
  if (q < 0 || q >= levels_) throw DomainError("auxiliary value out of range");
  if (levels_ == 1) return 0.0;
  const std::size_t width = static_cast<std::size_t>(levels_ - 1);
  std::vector<double> logits(static_cast<std::size_t>(levels_), 0.0);
  for (std::size_t l = 0; l < width; ++l)
    logits[l + 1] = packed[static_cast<std::size_t>(cause - 1) * width + l];
  return logits[static_cast<std::size_t>(q)] - log_sum_exp(logits);
}

double nu_eval(const NuModel& model, int cause, int q, std::span<const double>, double) {
  const auto psi = model.packed();
  return std::exp(model.log_prob(cause, q, psi));
}

// ---------------------------------------------------------------------------

MissingnessModel::MissingnessModel(MissingnessKind kind, std::vector<MissingnessTerm> terms,
                                   Eigen::VectorXd gamma)
    : kind_(kind), terms_(std::move(terms)), gamma_(std::move(gamma)) {
  if (gamma_.size() == 0) gamma_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(terms_.size()));
  if (static_cast<std::size_t>(gamma_.size()) != terms_.size())
    throw ConfigError("gamma length must equal the number of missingness terms");
  for (const auto& term : terms_) {
    using T = MissingnessTerm::Type;
    const bool allowed = [&] {
      switch (kind_) {
        case MissingnessKind::logistic_of_q:
          return term.type == T::intercept || term.type == T::aux;
        case MissingnessKind::logistic_of_txq:
          return term.type != T::subtype;
        case MissingnessKind::logistic_of_txy:
          return term.type != T::aux;
      }
      return false;
    }();
    if (!allowed) throw ConfigError("missingness term not allowed for this model kind");
    if (term.type == T::time_above) {
      if (!std::isfinite(term.threshold)) throw ConfigError("time threshold must be finite");
      thresholds_.push_back(term.threshold);
    }
    if (term.type == T::subtype && term.index < 1) throw ConfigError("subtype term needs k >= 1");
    if ((term.type == T::aux || term.type == T::covariate) && term.index < 0)
      throw ConfigError("negative term index");
  }
  std::sort(thresholds_.begin(), thresholds_.end());
  thresholds_.erase(std::unique(thresholds_.begin(), thresholds_.end()), thresholds_.end());
}

bool MissingnessModel::uses_aux() const {
  return std::any_of(terms_.begin(), terms_.end(),
                     [](const auto& t) { return t.type == MissingnessTerm::Type::aux; });
}

bool MissingnessModel::uses_subtype() const {
  return std::any_of(terms_.begin(), terms_.end(),
                     [](const auto& t) { return t.type == MissingnessTerm::Type::subtype; });
}

std::size_t MissingnessModel::time_pattern(double t) const {
  return static_cast<std::size_t>(std::lower_bound(thresholds_.begin(), thresholds_.end(), t) -
                                  thresholds_.begin());
}

void MissingnessModel::design_at_pattern(std::size_t pattern, std::span<const double> x, int q,
                                         int subtype, std::span<double> out) const {
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto& term = terms_[i];
    switch (term.type) {
      case MissingnessTerm::Type::intercept:
        out[i] = 1.0;
        break;
      case MissingnessTerm::Type::aux:
        out[i] = q == term.index ? 1.0 : 0.0;
        break;
      case MissingnessTerm::Type::covariate:
        if (static_cast<std::size_t>(term.index) >= x.size())
          throw DomainError("missingness covariate index out of range");
        out[i] = x[static_cast<std::size_t>(term.index)];
        break;
      case MissingnessTerm::Type::time_above: {
        const auto rank = static_cast<std::size_t>(
            std::lower_bound(thresholds_.begin(), thresholds_.end(), term.threshold) -
            thresholds_.begin());
        out[i] = rank < pattern ? 1.0 : 0.0;
        break;
      }
      case MissingnessTerm::Type::subtype:
        out[i] = subtype == term.index ? 1.0 : 0.0;
        break;
    }
  }
}

void MissingnessModel::design(double t, std::span<const double> x, int q, int subtype,
                              std::span<double> out) const {
  design_at_pattern(time_pattern(t), x, q, subtype, out);
}

double pi_eval(const MissingnessModel& model, double t, std::span<const double> x, int q,
               int subtype) {
  if (!std::isfinite(t)) throw DomainError("non-finite time");
  for (double v : x)
    if (!std::isfinite(v)) throw DomainError("non-finite covariate");
  std::vector<double> d(model.parameter_count());
  model.design(t, x, q, subtype, d);
  double lp = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) lp += d[i] * model.gamma()[static_cast<Eigen::Index>(i)];
  return expit(lp);
}

}  // namespace crmiss

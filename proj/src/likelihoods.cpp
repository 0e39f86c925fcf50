#include "crmiss/likelihoods.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "crmiss/errors.hpp"
#include "crmiss/numeric.hpp"

namespace crmiss {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index idx(std::size_t i) { return static_cast<Index>(i); }

// Running log(sum_k exp(a_k)) together with its gradient and Hessian, where
// each a_k arrives with its own gradient and Hessian. Shifted by the running
// maximum so nothing overflows.
class LogSumExp {
 public:
  LogSumExp(Index dim, Order order) : order_(order) {
    if (order_ >= Order::gradient) g_ = VectorXd::Zero(dim);
    if (order_ >= Order::hessian) h_ = MatrixXd::Zero(dim, dim);
  }

  void reset() {
    shift_ = -std::numeric_limits<double>::infinity();
    sum_ = 0.0;
    if (order_ >= Order::gradient) g_.setZero();
    if (order_ >= Order::hessian) h_.setZero();
  }

  bool empty() const { return sum_ == 0.0; }

  void add(double a, const VectorXd& grad, const MatrixXd* hess) {
    if (a == -std::numeric_limits<double>::infinity()) return;
    if (a > shift_) {
      const double scale = std::exp(shift_ - a);
      sum_ *= scale;
      if (order_ >= Order::gradient) g_ *= scale;
      if (order_ >= Order::hessian) h_ *= scale;
      shift_ = a;
    }
    const double w = std::exp(a - shift_);
    sum_ += w;
    if (order_ >= Order::gradient) g_.noalias() += w * grad;
    if (order_ >= Order::hessian) {
      h_.noalias() += w * grad * grad.transpose();
      if (hess) h_.noalias() += w * *hess;
    }
  }

  double value() const { return shift_ + std::log(sum_); }

  // gradient = E[g], hessian = E[h + g g'] - E[g] E[g]'.
  void derivatives(VectorXd& grad, MatrixXd& hess) const {
    if (order_ >= Order::gradient) grad = g_ / sum_;
    if (order_ >= Order::hessian) hess = h_ / sum_ - grad * grad.transpose();
  }

 private:
  Order order_;
  double shift_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
  VectorXd g_;
  MatrixXd h_;
};

enum class RiskWeight { none = 0, observed = 1, missing = 2 };

struct Denominator {
  RiskWeight weight = RiskWeight::none;
  bool all_causes = true;  // false: only the event's own cause, alpha cancels
};

// Which partial likelihood the engine assembles.
struct TermSpec {
  Denominator observed;
  std::optional<Denominator> missing;  // nullopt: missing-subtype events dropped
  bool use_nu = false;
  bool use_pi = false;  // numerator carries pi (observed) or 1 - pi (missing)
};

struct Models {
  const BaselineRatioSpec* alpha = nullptr;
  const NuModel* nu = nullptr;
  const MissingnessModel* miss = nullptr;
};

class Engine {
 public:
  Engine(const Dataset& data, const ParameterVector& theta, const TermSpec& spec,
         const Models& models, Order order)
      : data_(data),
        theta_(theta),
        layout_(theta.layout()),
        spec_(spec),
        m_(models),
        order_(order),
        dim_(idx(layout_.size())),
        K_(data.causes()),
        p_(data.covariate_count()) {
    validate();
    beta_.resize(static_cast<std::size_t>(K_));
    for (int k = 1; k <= K_; ++k) {
      const auto& b = layout_.at(BlockKind::beta, k);
      beta_[static_cast<std::size_t>(k - 1)] = b.offset;
      if (b.size != p_) throw ConfigError("beta block length must equal the covariate count");
    }
    if (m_.alpha) eta_ = layout_.at(BlockKind::eta).offset;
    if (spec_.use_nu) psi_ = layout_.at(BlockKind::psi).offset;
    if (m_.miss) gamma_ = layout_.at(BlockKind::gamma).offset;
    if (m_.alpha) basis_.resize(m_.alpha->basis_size());
    if (m_.miss) design_.resize(m_.miss->parameter_count());
    grad_ = VectorXd::Zero(dim_);
    hess_ = MatrixXd::Zero(dim_, dim_);
  }

  ObjectiveEvaluation run() {
    ObjectiveEvaluation out;
    if (order_ >= Order::gradient) {
      out.gradient = VectorXd::Zero(dim_);
      out.per_subject_scores = MatrixXd::Zero(idx(data_.size()), dim_);
    }
    if (order_ >= Order::hessian) out.hessian = MatrixXd::Zero(dim_, dim_);

    // Accumulator index: (weight, cause, pattern).
    const std::size_t patterns = m_.miss ? m_.miss->pattern_count() : 1;
    std::vector<LogSumExp> acc(3 * static_cast<std::size_t>(K_) * patterns,
                               LogSumExp(dim_, order_));
    auto slot = [&](RiskWeight w, int cause, std::size_t pattern) -> LogSumExp& {
      return acc[(static_cast<std::size_t>(w) * static_cast<std::size_t>(K_) +
                  static_cast<std::size_t>(cause - 1)) *
                     patterns +
                 pattern];
    };
    bool need[3] = {false, false, false};
    need[static_cast<int>(spec_.observed.weight)] = true;
    if (spec_.missing) need[static_cast<int>(spec_.missing->weight)] = true;

    LogSumExp numerator(dim_, order_);
    LogSumExp denominator(dim_, order_);
    VectorXd g_num(dim_), g_den(dim_), g_tmp(dim_);
    MatrixXd h_num(dim_, dim_), h_den(dim_, dim_), h_tmp(dim_, dim_);

    std::size_t used_events = 0;
    if (order_ >= Order::gradient) {
      used_.assign(data_.size(), Used{});
      mean_ = MatrixXd::Zero(idx(data_.size()), dim_);
    }
    for (int s = 0; s < data_.strata(); ++s) {
      for (auto& a : acc) a.reset();
      const auto& order = data_.descending(s);
      std::size_t pos = 0;
      while (pos < order.size()) {
        const double t = data_[order[pos]].time;
        std::size_t end = pos;
        for (; end < order.size() && data_[order[end]].time == t; ++end) {
          const std::size_t j = order[end];
          for (int w = 0; w < 3; ++w) {
            if (!need[w]) continue;
            const auto weight = static_cast<RiskWeight>(w);
            const std::size_t np = weight == RiskWeight::none ? 1 : patterns;
            for (int k = 1; k <= K_; ++k)
              for (std::size_t pat = 0; pat < np; ++pat) {
                const double c = risk_member(j, k, weight, pat);
                slot(weight, k, pat).add(c, grad_, order_ >= Order::hessian ? &hess_ : nullptr);
              }
          }
        }
        for (std::size_t e = pos; e < end; ++e) {
          const std::size_t i = order[e];
          const auto& r = data_[i];
          if (!r.event) continue;
          if (!r.subtype_observed && !spec_.missing) continue;
          const Denominator den = r.subtype_observed ? spec_.observed : *spec_.missing;
          ++used_events;

          // Numerator.
          numerator.reset();
          if (r.subtype_observed) {
            event_component(i, *r.subtype, den.all_causes, true);
            numerator.add(value_, grad_, &hess_);
          } else {
            for (int k = 1; k <= K_; ++k) {
              event_component(i, k, den.all_causes, false);
              numerator.add(value_, grad_, &hess_);
            }
          }
          const double num = numerator.value();
          numerator.derivatives(g_num, h_num);

          // Denominator over the risk set {j : time_j >= t_i} within stratum s.
          const std::size_t pat = den.weight == RiskWeight::none ? 0 : m_.miss->time_pattern(t);
          double den_value = 0.0;
          if (!den.all_causes) {
            const auto& a = slot(den.weight, *r.subtype, pat);
            den_value = a.value();
            a.derivatives(g_den, h_den);
          } else {
            denominator.reset();
            for (int k = 1; k <= K_; ++k) {
              const auto& a = slot(den.weight, k, pat);
              a.derivatives(g_tmp, h_tmp);
              double u = a.value();
              if (k >= 2) {
                m_.alpha->basis(t, basis_);
                const std::size_t off = eta_ + m_.alpha->offset(s, k);
                for (std::size_t b = 0; b < basis_.size(); ++b) {
                  u += theta_.values()[idx(off + b)] * basis_[b];
                  if (order_ >= Order::gradient) g_tmp[idx(off + b)] += basis_[b];
                }
              }
              denominator.add(u, g_tmp, &h_tmp);
            }
            den_value = denominator.value();
            denominator.derivatives(g_den, h_den);
          }

          out.value += num - den_value;
          if (order_ >= Order::gradient) {
            out.per_subject_scores.row(idx(i)) = (g_num - g_den).transpose();
            out.gradient += g_num - g_den;
            used_[i] = {true, den, pat, den_value};
            mean_.row(idx(i)) = g_den.transpose();
          }
          if (order_ >= Order::hessian) out.hessian += h_num - h_den;
        }
        pos = end;
      }
    }
    if (used_events == 0) throw FitError("no usable events");
    if (order_ >= Order::gradient) compensate(out.per_subject_scores);
    if (order_ >= Order::hessian) out.hessian = 0.5 * (out.hessian + out.hessian.transpose());
    return out;
  }

 private:
  struct Used {
    bool event = false;
    Denominator den;
    std::size_t pattern = 0;
    double log_den = 0.0;
  };

  // Turns the per-event score rows into martingale-residual rows: subject j
  // also pays sum_i dN_i w_j(t_i) / S_i (d log w_j(t_i) - mean_i) over the
  // events it was at risk for. Rows still sum to the gradient.
  void compensate(MatrixXd& scores) {
    const std::size_t patterns = m_.miss ? m_.miss->pattern_count() : 1;
    const std::size_t groups = 3 * static_cast<std::size_t>(K_) * patterns;
    auto group = [&](RiskWeight w, int cause, std::size_t pattern) {
      return (static_cast<std::size_t>(w) * static_cast<std::size_t>(K_) +
              static_cast<std::size_t>(cause - 1)) *
                 patterns +
             pattern;
    };
    std::vector<double> a(groups);
    MatrixXd v(dim_, idx(groups));
    std::vector<bool> live(groups);
    VectorXd term(dim_);
    for (int s = 0; s < data_.strata(); ++s) {
      std::fill(a.begin(), a.end(), 0.0);
      std::fill(live.begin(), live.end(), false);
      v.setZero();
      const auto& order = data_.descending(s);
      std::size_t pos = order.size();
      while (pos > 0) {
        const double t = data_[order[pos - 1]].time;
        std::size_t begin = pos;
        while (begin > 0 && data_[order[begin - 1]].time == t) --begin;
        for (std::size_t e = begin; e < pos; ++e) {
          const std::size_t i = order[e];
          const Used& u = used_[i];
          if (!u.event) continue;
          const VectorXd mean = mean_.row(idx(i)).transpose();
          if (!u.den.all_causes) {
            const std::size_t g = group(u.den.weight, *data_[i].subtype, u.pattern);
            const double f = std::exp(-u.log_den);
            a[g] += f;
            v.col(idx(g)) -= f * mean;
            live[g] = true;
            continue;
          }
          for (int k = 1; k <= K_; ++k) {
            term = -mean;
            double log_alpha = 0.0;
            if (k >= 2) {
              m_.alpha->basis(t, basis_);
              const std::size_t off = eta_ + m_.alpha->offset(s, k);
              for (std::size_t b = 0; b < basis_.size(); ++b) {
                log_alpha += theta_.values()[idx(off + b)] * basis_[b];
                term[idx(off + b)] += basis_[b];
              }
            }
            const std::size_t g = group(u.den.weight, k, u.pattern);
            const double f = std::exp(log_alpha - u.log_den);
            a[g] += f;
            v.col(idx(g)) += f * term;
            live[g] = true;
          }
        }
        for (std::size_t e = begin; e < pos; ++e) {
          const std::size_t j = order[e];
          for (int w = 0; w < 3; ++w)
            for (int k = 1; k <= K_; ++k)
              for (std::size_t pat = 0; pat < patterns; ++pat) {
                const std::size_t g = group(static_cast<RiskWeight>(w), k, pat);
                if (!live[g]) continue;
                const double r = std::exp(risk_member(j, k, static_cast<RiskWeight>(w), pat));
                scores.row(idx(j)) -= r * (a[g] * grad_ + v.col(idx(g))).transpose();
              }
        }
        pos = begin;
      }
    }
  }

  void validate() const {
    const bool all_causes =
        spec_.observed.all_causes || (spec_.missing && spec_.missing->all_causes);
    if (all_causes) {
      if (!m_.alpha) throw ConfigError("all-cause risk sets need a baseline ratio spec");
      if (m_.alpha->causes() != data_.causes())
        throw ConfigError("baseline ratio spec and data disagree on the number of causes");
      if (m_.alpha->strata() < data_.strata())
        throw ConfigError("data contain more strata than the baseline ratio spec");
    }
    if (spec_.use_nu) {
      if (!m_.nu) throw ConfigError("nu model required");
      if (m_.nu->causes() != data_.causes())
        throw ConfigError("nu model and data disagree on the number of causes");
    }
    const bool weighted = spec_.observed.weight != RiskWeight::none ||
                          (spec_.missing && spec_.missing->weight != RiskWeight::none);
    if ((spec_.use_pi || weighted) && !m_.miss) throw ConfigError("missingness model required");
    if (weighted && (m_.miss->uses_aux() || m_.miss->uses_subtype()))
      throw ConfigError("risk-set weights need a missingness model in (t, x) only");
    const bool needs_aux =
        (spec_.use_nu && m_.nu->levels() > 1) || (spec_.use_pi && m_.miss->uses_aux());
    if (needs_aux)
      for (std::size_t i = 0; i < data_.size(); ++i)
        if (data_[i].event && !data_[i].aux)
          throw DataError("event record " + std::to_string(i) + " lacks the auxiliary value");
  }

  void clear_work() {
    value_ = 0.0;
    if (order_ >= Order::gradient) grad_.setZero();
    if (order_ >= Order::hessian) hess_.setZero();
  }

  double linear_predictor(std::size_t j, int cause) const {
    const std::size_t off = beta_[static_cast<std::size_t>(cause - 1)];
    double lp = 0.0;
    for (std::size_t c = 0; c < p_; ++c)
      lp += theta_.values()[idx(off + c)] * data_.covariates()(idx(j), idx(c));
    return lp;
  }

  void add_beta(std::size_t j, int cause) {
    value_ += linear_predictor(j, cause);
    if (order_ < Order::gradient) return;
    const std::size_t off = beta_[static_cast<std::size_t>(cause - 1)];
    for (std::size_t c = 0; c < p_; ++c) grad_[idx(off + c)] += data_.covariates()(idx(j), idx(c));
  }

  // log pi or log(1 - pi) of the design currently in design_.
  void add_log_pi(bool observed) {
    const std::size_t m = design_.size();
    double lp = 0.0;
    for (std::size_t c = 0; c < m; ++c) lp += theta_.values()[idx(gamma_ + c)] * design_[c];
    const double pi = expit(lp);
    value_ += observed ? log_expit(lp) : log1m_expit(lp);
    if (order_ < Order::gradient) return;
    const double slope = observed ? 1.0 - pi : -pi;
    for (std::size_t c = 0; c < m; ++c) grad_[idx(gamma_ + c)] += slope * design_[c];
    if (order_ < Order::hessian) return;
    const double curv = pi * (1.0 - pi);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b)
        hess_(idx(gamma_ + a), idx(gamma_ + b)) -= curv * design_[a] * design_[b];
  }

  void add_log_nu(int cause, int q) {
    const int levels = m_.nu->levels();
    if (levels == 1) return;
    if (q < 0 || q >= levels) throw DomainError("auxiliary value outside the nu model support");
    const std::size_t width = static_cast<std::size_t>(levels - 1);
    const std::size_t off = psi_ + static_cast<std::size_t>(cause - 1) * width;
    const std::span<const double> packed(theta_.values().data() + psi_, m_.nu->parameter_count());
    const auto prob = m_.nu->probabilities(cause, packed);
    value_ += std::log(prob[static_cast<std::size_t>(q)]);
    if (order_ < Order::gradient) return;
    for (std::size_t l = 0; l < width; ++l)
      grad_[idx(off + l)] += (q == static_cast<int>(l + 1) ? 1.0 : 0.0) - prob[l + 1];
    if (order_ < Order::hessian) return;
    for (std::size_t a = 0; a < width; ++a)
      for (std::size_t b = 0; b < width; ++b)
        hess_(idx(off + a), idx(off + b)) -=
            (a == b ? prob[a + 1] : 0.0) - prob[a + 1] * prob[b + 1];
  }

  // c_jk = beta_k' x_j + log w(t-pattern, x_j), left in value_/grad_/hess_.
  double risk_member(std::size_t j, int cause, RiskWeight weight, std::size_t pattern) {
    clear_work();
    add_beta(j, cause);
    if (weight != RiskWeight::none) {
      const auto& r = data_[j];
      m_.miss->design_at_pattern(pattern, r.covariates, -1, 0, design_);
      add_log_pi(weight == RiskWeight::observed);
    }
    return value_;
  }

  // Numerator component of event i for cause k, left in value_/grad_/hess_.
  void event_component(std::size_t i, int cause, bool with_alpha, bool observed) {
    clear_work();
    const auto& r = data_[i];
    add_beta(i, cause);
    if (with_alpha && !(r.time > 0.0)) throw DomainError("event at time 0 with a baseline ratio");
    if (with_alpha && cause >= 2) {
      m_.alpha->basis(r.time, basis_);
      const std::size_t off = eta_ + m_.alpha->offset(r.stratum, cause);
      for (std::size_t b = 0; b < basis_.size(); ++b) {
        value_ += theta_.values()[idx(off + b)] * basis_[b];
        if (order_ >= Order::gradient) grad_[idx(off + b)] += basis_[b];
      }
    }
    if (spec_.use_nu) add_log_nu(cause, r.aux.value_or(0));
    if (spec_.use_pi) {
      m_.miss->design(r.time, r.covariates, r.aux.value_or(-1), cause, design_);
      add_log_pi(observed);
    }
  }

  const Dataset& data_;
  const ParameterVector& theta_;
  const ParameterLayout& layout_;
  TermSpec spec_;
  Models m_;
  Order order_;
  Index dim_;
  int K_;
  std::size_t p_;
  std::vector<std::size_t> beta_;
  std::size_t eta_ = 0;
  std::size_t psi_ = 0;
  std::size_t gamma_ = 0;
  std::vector<double> basis_;
  std::vector<double> design_;
  double value_ = 0.0;
  VectorXd grad_;
  MatrixXd hess_;
  std::vector<Used> used_;
  MatrixXd mean_;
};

ObjectiveEvaluation run(const Dataset& data, const ParameterVector& theta, const TermSpec& spec,
                        const Models& models, Order order) {
  return Engine(data, theta, spec, models, order).run();
}

const TermSpec kInformative{{RiskWeight::none, true}, Denominator{RiskWeight::none, true}, false,
                            false};

}  // namespace

ObjectiveEvaluation loglik_cca(const Dataset& data, const ParameterVector& theta, Order order) {
  const TermSpec spec{{RiskWeight::none, false}, std::nullopt, false, false};
  if (data.observed_subtype_count() == 0) throw FitError("no usable events");
  return run(data, theta, spec, {}, order);
}

ObjectiveEvaluation loglik_lstar_q2(const Dataset& data, const BaselineRatioSpec& alpha,
                                    const NuModel& nu, const ParameterVector& theta, Order order) {
  TermSpec spec = kInformative;
  spec.use_nu = true;
  return run(data, theta, spec, {&alpha, &nu, nullptr}, order);
}

ObjectiveEvaluation loglik_lstar_q(const Dataset& data, const BaselineRatioSpec& alpha,
                                   const NuModel& nu, const MissingnessModel& miss,
                                   const ParameterVector& theta, Order order) {
  if (miss.uses_subtype()) throw ConfigError("L*_Q needs a missingness model free of the subtype");
  TermSpec spec = kInformative;
  spec.use_nu = true;
  spec.use_pi = true;
  return run(data, theta, spec, {&alpha, &nu, &miss}, order);
}

ObjectiveEvaluation loglik_lstar_y(const Dataset& data, const BaselineRatioSpec& alpha,
                                   const MissingnessModel& miss, const ParameterVector& theta,
                                   Order order) {
  if (miss.uses_aux()) throw ConfigError("L*_Y missingness model must not reference q");
  TermSpec spec = kInformative;
  spec.use_pi = true;
  return run(data, theta, spec, {&alpha, nullptr, &miss}, order);
}

ObjectiveEvaluation loglik_gr(const Dataset& data, const BaselineRatioSpec& alpha,
                              const MissingnessModel& miss, const ParameterVector& theta,
                              Order order) {
  const TermSpec spec{{RiskWeight::observed, false}, Denominator{RiskWeight::missing, true}, false,
                      true};
  return run(data, theta, spec, {&alpha, nullptr, &miss}, order);
}

ObjectiveEvaluation loglik_lstar_q1(const Dataset& data, const MissingnessModel& miss,
                                    const ParameterVector& theta, Order order) {
  if (miss.kind() == MissingnessKind::logistic_of_txy || miss.uses_subtype())
    throw ConfigError("L*_Q1 needs a missingness model free of the subtype");
  const auto& block = theta.layout().at(BlockKind::gamma);
  if (block.size != miss.parameter_count()) throw ConfigError("gamma block length mismatch");
  const Index dim = idx(theta.layout().size());
  ObjectiveEvaluation out;
  if (order >= Order::gradient) {
    out.gradient = VectorXd::Zero(dim);
    out.per_subject_scores = MatrixXd::Zero(idx(data.size()), dim);
  }
  if (order >= Order::hessian) out.hessian = MatrixXd::Zero(dim, dim);
  std::vector<double> d(miss.parameter_count());
  std::size_t events = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data[i];
    if (!r.event) continue;
    if (miss.uses_aux() && !r.aux)
      throw DataError("event record " + std::to_string(i) + " lacks the auxiliary value");
    ++events;
    miss.design(r.time, r.covariates, r.aux.value_or(-1), 0, d);
    double lp = 0.0;
    for (std::size_t c = 0; c < d.size(); ++c) lp += theta.values()[idx(block.offset + c)] * d[c];
    const double pi = expit(lp);
    out.value += r.subtype_observed ? log_expit(lp) : log1m_expit(lp);
    if (order < Order::gradient) continue;
    const double resid = (r.subtype_observed ? 1.0 : 0.0) - pi;
    for (std::size_t c = 0; c < d.size(); ++c) {
      out.per_subject_scores(idx(i), idx(block.offset + c)) = resid * d[c];
      out.gradient[idx(block.offset + c)] += resid * d[c];
    }
    if (order < Order::hessian) continue;
    for (std::size_t a = 0; a < d.size(); ++a)
      for (std::size_t b = 0; b < d.size(); ++b)
        out.hessian(idx(block.offset + a), idx(block.offset + b)) -= pi * (1.0 - pi) * d[a] * d[b];
  }
  if (events == 0) throw FitError("no usable events");
  return out;
}

EstimatingSystem gr_system(const Dataset& data, const BaselineRatioSpec& alpha,
                           const MissingnessModel& miss, const ParameterVector& theta,
                           bool with_jacobian) {
  if (miss.uses_aux() || miss.uses_subtype())
    throw ConfigError("the estimating-equation approach needs pi(t, x) only");
  const Order order = with_jacobian ? Order::hessian : Order::gradient;
  const auto l = loglik_gr(data, alpha, miss, theta, order);
  TermSpec no_q = kInformative;
  const auto lstar = run(data, theta, no_q, {&alpha, nullptr, nullptr}, order);
  const auto bern = loglik_lstar_q1(data, miss, theta, order);

  const auto& layout = theta.layout();
  const Index dim = idx(layout.size());
  EstimatingSystem out;
  out.residual = VectorXd::Zero(dim);
  out.per_subject_scores = MatrixXd::Zero(idx(data.size()), dim);
  if (with_jacobian) out.jacobian = MatrixXd::Zero(dim, dim);
  out.log_likelihood_sum = l.value + lstar.value + bern.value;
  for (const auto& block : layout.blocks()) {
    const ObjectiveEvaluation& src =
        block.kind == BlockKind::beta ? l : block.kind == BlockKind::eta ? lstar : bern;
    if (block.kind == BlockKind::psi) throw ConfigError("psi has no role in the GR system");
    const Index off = idx(block.offset);
    const Index len = idx(block.size);
    out.residual.segment(off, len) = src.gradient.segment(off, len);
    out.per_subject_scores.middleCols(off, len) = src.per_subject_scores.middleCols(off, len);
    if (with_jacobian) out.jacobian.middleRows(off, len) = src.hessian.middleRows(off, len);
  }
  return out;
}

}  // namespace crmiss

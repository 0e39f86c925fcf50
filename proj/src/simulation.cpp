#include "crmiss/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "crmiss/errors.hpp"
#include "crmiss/numeric.hpp"

namespace crmiss {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

bool in_open_unit(double p) { return p > 0.0 && p < 1.0; }

double cause2_rate(const Scenario& s, double t, double x) {
  const double shape = s.eta2 == 0.0 ? 1.0 : std::pow(t, s.eta2);
  return s.baseline_level * s.eta1 * shape * std::exp(s.beta[1] * x);
}

double cause1_rate(const Scenario& s, double x) {
  return s.baseline_level * std::exp(s.beta[0] * x);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

Rng Rng::stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

std::uint64_t Rng::next() { return engine_(); }

double Rng::uniform() {
  return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::exponential(double mean) { return -mean * std::log(uniform()); }

void validate(const Scenario& s) {
  if (s.n < 2) throw ConfigError("n must be at least 2");
  if (s.replications < 1) throw ConfigError("replications must be at least 1");
  if (!in_open_unit(s.covariate_prevalence)) throw ConfigError("covariate_prevalence must lie in (0,1)");
  for (double q : s.q_prob)
    if (!in_open_unit(q)) throw ConfigError("q_prob entries must lie in (0,1)");
  if (!(s.baseline_level > 0.0)) throw ConfigError("baseline_level must be positive");
  if (!(s.eta1 > 0.0) || !(s.eta2 >= 0.0)) throw ConfigError("eta1 must be positive and eta2 >= 0");
  if (s.censoring && (!(s.censoring_mean > 0.0) || !(s.admin_time > 0.0)))
    throw ConfigError("censoring_mean and admin_time must be positive");
  if (s.mechanism.kind == MechanismKind::marq)
    marq_coefficients(s.mechanism.p_obs_q0, s.mechanism.p_obs_q1);
  for (double c : s.alpha_cuts)
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("alpha cut points must be positive");
}

std::array<double, 2> marq_coefficients(double p0, double p1) {
  if (!in_open_unit(p0) || !in_open_unit(p1))
    throw ConfigError("MARQ target probabilities must lie in (0,1)");
  return {logit(p0), logit(p1) - logit(p0)};
}

double observation_probability(const SubjectRecord& record, int true_subtype, int true_aux,
                               const Mechanism& m) {
  const double x = record.covariates.empty() ? 0.0 : record.covariates.front();
  const double late = record.time > m.time_cut ? 1.0 : 0.0;
  switch (m.kind) {
    case MechanismKind::always_observed:
      return 1.0;
    case MechanismKind::marq: {
      const auto g = marq_coefficients(m.p_obs_q0, m.p_obs_q1);
      return expit(g[0] + g[1] * true_aux);
    }
    case MechanismKind::martxq:
      return expit(m.gamma_q * true_aux + m.x_coef * x + m.time_coef * late);
    case MechanismKind::nmar:
      return expit(m.gamma_y * (true_subtype == 2 ? 1.0 : 0.0) + m.time_coef * late +
                   m.x_coef * x);
  }
  return 1.0;
}

bool assign_missingness(const SubjectRecord& record, int true_subtype, int true_aux,
                        const Mechanism& mechanism, Rng& rng) {
  return rng.bernoulli(observation_probability(record, true_subtype, true_aux, mechanism));
}

double cumulative_hazard(const Scenario& s, double t, double x) {
  return cause1_rate(s, x) * t +
         s.baseline_level * s.eta1 * std::exp(s.beta[1] * x) * std::pow(t, s.eta2 + 1.0) /
             (s.eta2 + 1.0);
}

double invert_cumulative_hazard(const Scenario& s, double target, double x) {
  const double a = cause1_rate(s, x);
  const double b = s.baseline_level * s.eta1 * std::exp(s.beta[1] * x);
  if (s.eta2 == 1.0) {
    // a t + (b / 2) t^2 = target, in the cancellation-free form.
    return 2.0 * target / (a + std::sqrt(a * a + 2.0 * b * target));
  }
  if (s.eta2 == 0.0) return target / (a + b);
  double lo = 0.0;
  double hi = 1.0;
  while (cumulative_hazard(s, hi, x) < target) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cumulative_hazard(s, mid, x) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Dataset generate_dataset(const Scenario& s, Rng& rng) {
  std::vector<SubjectRecord> records;
  records.reserve(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    // Six draws per subject in fixed order, used or not.
    const double u_x = rng.uniform();
    const double u_t = rng.uniform();
    const double u_y = rng.uniform();
    const double u_c = rng.uniform();
    const double u_q = rng.uniform();
    const double u_o = rng.uniform();

    const double x = u_x < s.covariate_prevalence ? 1.0 : 0.0;
    const double event_time = invert_cumulative_hazard(s, -std::log(u_t), x);
    const double l1 = cause1_rate(s, x);
    const double l2 = cause2_rate(s, event_time, x);
    const int subtype = u_y < l2 / (l1 + l2) ? 2 : 1;
    const double censor =
        s.censoring ? std::min(-s.censoring_mean * std::log(u_c), s.admin_time)
                    : std::numeric_limits<double>::infinity();

    SubjectRecord r;
    r.covariates = {x};
    r.event = event_time <= censor;
    r.time = r.event ? event_time : censor;
    if (r.event) {
      const int aux = u_q < s.q_prob[static_cast<std::size_t>(subtype - 1)] ? 1 : 0;
      r.aux = aux;
      const double pi = observation_probability(r, subtype, aux, s.mechanism);
      r.subtype_observed = u_o < pi;
      if (r.subtype_observed) r.subtype = subtype;
    }
    records.push_back(std::move(r));
  }
  return Dataset(std::move(records), 2);
}

double expected_censoring_fraction(const Scenario& s) {
  if (!s.censoring) return 0.0;
  const int intervals = 4000;
  const double h = s.admin_time / intervals;
  double event_prob = 0.0;
  for (double x : {0.0, 1.0}) {
    const double px = x == 1.0 ? s.covariate_prevalence : 1.0 - s.covariate_prevalence;
    auto density = [&](double t) {
      const double rate = cause1_rate(s, x) + cause2_rate(s, t, x);
      return rate * std::exp(-cumulative_hazard(s, t, x) - t / s.censoring_mean);
    };
    double acc = density(0.0) + density(s.admin_time);
    for (int i = 1; i < intervals; ++i) acc += (i % 2 ? 4.0 : 2.0) * density(i * h);
    event_prob += px * acc * h / 3.0;
  }
  return 1.0 - event_prob;
}

double calibrate_baseline_level(Scenario s, double target_censoring) {
  if (!in_open_unit(target_censoring)) throw ConfigError("target censoring must lie in (0,1)");
  double lo = std::log(1e-9);
  double hi = std::log(10.0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    s.baseline_level = std::exp(mid);
    // Censoring falls as the hazard level rises.
    (expected_censoring_fraction(s) > target_censoring ? lo : hi) = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

BaselineRatioSpec analysis_alpha(const Scenario& s) {
  if (s.alpha_cuts.empty()) return BaselineRatioSpec::power_law(2);
  return BaselineRatioSpec::piecewise_constant(2, s.alpha_cuts);
}

NuModel analysis_nu() { return NuModel(2, 2); }

MissingnessModel analysis_ly_model(const Scenario& s) {
  using T = MissingnessTerm;
  if (s.mechanism.kind == MechanismKind::martxq || s.mechanism.kind == MechanismKind::nmar)
    return MissingnessModel(MissingnessKind::logistic_of_txy,
                            {T::subtype(2), T::time_above(s.mechanism.time_cut), T::covariate(0)});
  return MissingnessModel(MissingnessKind::logistic_of_txy, {T::intercept(), T::subtype(2)});
}

MissingnessModel analysis_gr_model(const Scenario& s) {
  using T = MissingnessTerm;
  return MissingnessModel(MissingnessKind::logistic_of_txq,
                          {T::intercept(), T::time_above(s.mechanism.time_cut), T::covariate(0)});
}

std::vector<ReplicationRecord> run_replication(const Scenario& s,
                                               const std::vector<Estimator>& estimators,
                                               std::size_t replication) {
  Rng rng = Rng::stream(s.seed, replication);
  const Dataset data = generate_dataset(s, rng);
  const double events = static_cast<double>(data.event_count());
  const double missing_fraction =
      events > 0 ? static_cast<double>(data.missing_subtype_count()) / events : 0.0;
  const double censoring_fraction = 1.0 - events / static_cast<double>(data.size());

  const auto alpha = analysis_alpha(s);
  const auto nu = analysis_nu();
  const auto ly_model = analysis_ly_model(s);
  const auto gr_model = analysis_gr_model(s);

  std::vector<ReplicationRecord> out;
  for (Estimator e : estimators) {
    ReplicationRecord rec;
    rec.replication = replication;
    rec.estimator = e;
    rec.missing_fraction = missing_fraction;
    rec.censoring_fraction = censoring_fraction;
    try {
      FitResult fit;
      switch (e) {
        case Estimator::cca:
          fit = fit_cca(data, {}, s.cca_drop_rows);
          break;
        case Estimator::lq2:
          fit = fit_lstar_q2(data, alpha, nu);
          break;
        case Estimator::ly:
          fit = fit_lstar_y(data, alpha, ly_model);
          break;
        case Estimator::gr:
          fit = fit_gr(data, alpha, gr_model);
          break;
      }
      rec.converged = fit.converged;
      rec.message = fit.message;
      for (int k = 1; k <= data.causes(); ++k) {
        const auto& block = fit.estimate.layout().at(BlockKind::beta, k);
        for (std::size_t c = 0; c < block.size; ++c) {
          const auto at = static_cast<Eigen::Index>(block.offset + c);
          rec.estimates.push_back(fit.estimate.values()[at]);
          rec.standard_errors.push_back(fit.standard_errors[at]);
        }
      }
    } catch (const std::exception& ex) {
      rec.converged = false;
      rec.message = ex.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

SimulationResult run_replications(const Scenario& s, const std::vector<Estimator>& estimators,
                                  unsigned workers) {
  validate(s);
  if (estimators.empty()) throw ConfigError("no estimators requested");
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, s.replications));

  std::vector<std::vector<ReplicationRecord>> per_rep(s.replications);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < s.replications; r = next++)
      per_rep[r] = run_replication(s, estimators, r);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  SimulationResult result;
  for (auto& recs : per_rep)
    for (auto& rec : recs) result.records.push_back(std::move(rec));
  result.summary = summarize(s, estimators, result.records);
  return result;
}

ReplicationSummary summarize(const Scenario& s, const std::vector<Estimator>& estimators,
                             const std::vector<ReplicationRecord>& records) {
  ReplicationSummary out;
  std::size_t reps = 0;
  double missing = 0.0;
  double censored = 0.0;
  for (const auto& rec : records)
    if (rec.estimator == estimators.front()) {
      ++reps;
      missing += rec.missing_fraction;
      censored += rec.censoring_fraction;
    }
  out.replications = reps;
  out.mean_missing_fraction = reps ? missing / static_cast<double>(reps) : 0.0;
  out.mean_censoring_fraction = reps ? censored / static_cast<double>(reps) : 0.0;
  const double z = normal_quantile(0.975);

  for (Estimator e : estimators) {
    for (std::size_t j = 0; j < s.beta.size(); ++j) {
      ParameterSummary row;
      row.estimator = e;
      row.parameter = "beta" + std::to_string(j + 1);
      row.truth = s.beta[j];
      std::vector<double> est;
      double se_sum = 0.0;
      std::size_t covered = 0;
      for (const auto& rec : records) {
        if (rec.estimator != e) continue;
        const bool usable = rec.converged && rec.estimates.size() > j &&
                            std::isfinite(rec.estimates[j]) &&
                            std::isfinite(rec.standard_errors[j]);
        if (!usable) {
          ++row.convergence_failures;
          continue;
        }
        est.push_back(rec.estimates[j]);
        se_sum += rec.standard_errors[j];
        if (std::abs(rec.estimates[j] - row.truth) <= z * rec.standard_errors[j]) ++covered;
      }
      row.used = est.size();
      if (!est.empty()) {
        const double m = static_cast<double>(est.size());
        double mean = 0.0;
        for (double v : est) mean += v;
        mean /= m;
        double ss = 0.0;
        for (double v : est) ss += (v - mean) * (v - mean);
        row.mean_estimate = mean;
        row.relative_bias_percent = row.truth != 0.0
                                        ? 100.0 * (mean - row.truth) / row.truth
                                        : std::numeric_limits<double>::quiet_NaN();
        row.monte_carlo_sd = est.size() > 1 ? std::sqrt(ss / (m - 1.0)) : 0.0;
        row.mean_standard_error = se_sum / m;
        row.ci_coverage_rate = static_cast<double>(covered) / m;
      } else {
        row.mean_estimate = row.relative_bias_percent = row.monte_carlo_sd =
            row.mean_standard_error = row.ci_coverage_rate =
                std::numeric_limits<double>::quiet_NaN();
      }
      out.rows.push_back(row);
    }
  }
  return out;
}

}  // namespace crmiss

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crmiss/dataset.hpp"
#include "crmiss/estimators.hpp"
#include "crmiss/model.hpp"

namespace crmiss {

// mt19937_64 behind a portable open-interval uniform. Streams for different
// replications are derived from (seed, index) by SplitMix64 mixing, so a
// replication's draws never depend on which worker ran it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next();
  double uniform();  // (0, 1)
  bool bernoulli(double p) { return uniform() < p; }
  double exponential(double mean);

 private:
  std::mt19937_64 engine_;
};

enum class MechanismKind { always_observed, marq, martxq, nmar };

struct Mechanism {
  MechanismKind kind = MechanismKind::marq;
  double p_obs_q0 = 0.2;  // marq: P(O = 1 | Q = 0)
  double p_obs_q1 = 0.8;  // marq: P(O = 1 | Q = 1)
  double gamma_q = 0.0;   // martxq coefficient of q
  double gamma_y = 0.0;   // nmar coefficient of I{y = 2}
  double x_coef = 0.5;
  double time_coef = -0.01;
  double time_cut = 50.0;
};

// Calibrated so the default scenario has 70% censoring (see
// calibrate_baseline_level).
inline constexpr double kDefaultBaselineLevel = 0.0036282378;

struct Scenario {
  std::string name = "scenario";
  std::size_t n = 10000;
  std::array<double, 2> beta{0.22314355131420976, 0.91629073187415511};  // log 1.25, log 2.5
  double eta1 = 0.037;
  double eta2 = 1.0;
  double covariate_prevalence = 0.4;
  double baseline_level = kDefaultBaselineLevel;
  bool censoring = true;
  double censoring_mean = 50.0;
  double admin_time = 90.0;
  std::array<double, 2> q_prob{0.25, 0.5};  // P(Q = 1 | Y = k)
  Mechanism mechanism;
  std::size_t replications = 200;
  std::uint64_t seed = 20170503;
  // Analysis: empty cuts = power-law alpha, otherwise piecewise constant.
  std::vector<double> alpha_cuts;
  // Simulation CCA discards missing-subtype cases outright, risk sets included.
  bool cca_drop_rows = true;
};

// Throws ConfigError on out-of-range probabilities, n < 2, replications < 1.
void validate(const Scenario& scenario);

// (gamma_0, gamma_q) reproducing P(O=1|Q=0) = p0 and P(O=1|Q=1) = p1.
std::array<double, 2> marq_coefficients(double p0, double p1);

double observation_probability(const SubjectRecord& record, int true_subtype, int true_aux,
                               const Mechanism& mechanism);
// Record must be an event with its true subtype and aux already drawn.
bool assign_missingness(const SubjectRecord& record, int true_subtype, int true_aux,
                        const Mechanism& mechanism, Rng& rng);

// All-cause cumulative hazard of the two-cause Weibull generator.
double cumulative_hazard(const Scenario& scenario, double t, double x);
// Solves cumulative_hazard(t) = target.
double invert_cumulative_hazard(const Scenario& scenario, double target, double x);

Dataset generate_dataset(const Scenario& scenario, Rng& rng);

// Expected censoring fraction by quadrature.
double expected_censoring_fraction(const Scenario& scenario);
// Bisection on the baseline level for the target censoring fraction.
double calibrate_baseline_level(Scenario scenario, double target_censoring = 0.70);

// Models the estimators are fitted with under a scenario.
BaselineRatioSpec analysis_alpha(const Scenario& scenario);
NuModel analysis_nu();
MissingnessModel analysis_ly_model(const Scenario& scenario);
MissingnessModel analysis_gr_model(const Scenario& scenario);

struct ReplicationRecord {
  std::size_t replication = 0;
  Estimator estimator = Estimator::cca;
  bool converged = false;
  std::string message;
  std::vector<double> estimates;  // beta_{k,c}, cause-major
  std::vector<double> standard_errors;
  double missing_fraction = 0.0;
  double censoring_fraction = 0.0;
};

struct ParameterSummary {
  Estimator estimator = Estimator::cca;
  std::string parameter;  // e.g. "beta1"
  double truth = 0.0;
  double mean_estimate = 0.0;
  double relative_bias_percent = 0.0;
  double monte_carlo_sd = 0.0;
  double mean_standard_error = 0.0;
  double ci_coverage_rate = 0.0;
  std::size_t used = 0;
  std::size_t convergence_failures = 0;
};

struct ReplicationSummary {
  std::vector<ParameterSummary> rows;
  double mean_missing_fraction = 0.0;
  double mean_censoring_fraction = 0.0;
  std::size_t replications = 0;
};

struct SimulationResult {
  ReplicationSummary summary;
  std::vector<ReplicationRecord> records;  // ordered by (replication, estimator)
};

// Fits every estimator on one generated dataset.
std::vector<ReplicationRecord> run_replication(const Scenario& scenario,
                                               const std::vector<Estimator>& estimators,
                                               std::size_t replication);

// workers = 0 uses the available hardware parallelism. Output is identical
// for every worker count.
SimulationResult run_replications(const Scenario& scenario,
                                  const std::vector<Estimator>& estimators,
                                  unsigned workers = 0);

ReplicationSummary summarize(const Scenario& scenario, const std::vector<Estimator>& estimators,
                             const std::vector<ReplicationRecord>& records);

}  // namespace crmiss

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace crmiss {

// One observed subject: (T, delta, X, Y*O, O, Q*delta) plus a stratum label.
// Subtypes are 1-based; auxiliary categories are 0-based.
struct SubjectRecord {
  double time = 0.0;
  bool event = false;
  std::vector<double> covariates;
  bool subtype_observed = false;
  std::optional<int> subtype;
  std::optional<int> aux;
  int stratum = 0;

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

// Throws DataError if the record breaks the event/subtype/aux invariants.
void validate_record(const SubjectRecord& record, std::size_t covariate_count);

enum class AlphaForm { power_law, piecewise_constant };

// Baseline hazard ratio alpha_k(t) = lambda_0k(t) / lambda_01(t).
//
// alpha_1 is identically 1. For every cause k >= 2 and stratum s, log alpha_k
// is linear in its parameters: log alpha_k(t) = sum_j eta[s,k,j] * b_j(t).
//   power law:          b(t) = (1, log t), so eta = (log eta_1, eta_2) and
//                       alpha_k(t) = eta_1 * t^eta_2.
//   piecewise constant: b(t) = one-hot interval indicator over the cut points,
//                       intervals [c_r, c_{r+1}) with c_0 = 0, c_{R+1} = inf;
//                       eta holds the log levels.
class BaselineRatioSpec {
 public:
  static BaselineRatioSpec power_law(int causes, int strata = 1);
  static BaselineRatioSpec piecewise_constant(int causes, std::vector<double> cuts,
                                              int strata = 1);

  AlphaForm form() const { return form_; }
  int causes() const { return causes_; }
  int strata() const { return strata_; }
  const std::vector<double>& cuts() const { return cuts_; }

  std::size_t basis_size() const;
  std::size_t parameter_count() const;
  // Offset of the (stratum, cause) block inside the eta vector; cause >= 2.
  std::size_t offset(int stratum, int cause) const;
  // Fills out[0..basis_size()) with b(t); t > 0.
  void basis(double t, std::span<double> out) const;
  double log_alpha(int cause, double t, std::span<const double> eta, int stratum) const;

 private:
  BaselineRatioSpec(AlphaForm form, int causes, std::vector<double> cuts, int strata);
  void check(int cause, double t, int stratum) const;

  AlphaForm form_;
  int causes_;
  std::vector<double> cuts_;
  int strata_;
};

double alpha_eval(const BaselineRatioSpec& spec, int cause, double t,
                  std::span<const double> eta, int stratum = 0);

// alpha_k(t; eta) * exp(beta_k' x): the cause-specific hazard without lambda_01.
double relative_hazard(const BaselineRatioSpec& spec, int cause, double t,
                       std::span<const double> x, std::span<const double> beta_k,
                       std::span<const double> eta, int stratum = 0);

// Distribution of a categorical auxiliary variable given the subtype,
// nu_k(q) = P(Q = q | Y = k), multinomial logit with category 0 as reference.
// psi is K x (L - 1); L = 1 means no auxiliary information (nu == 1).
class NuModel {
 public:
  NuModel(int causes, int levels);
  NuModel(int causes, int levels, Eigen::MatrixXd psi);

  int causes() const { return causes_; }
  int levels() const { return levels_; }
  std::size_t parameter_count() const;
  const Eigen::MatrixXd& psi() const { return psi_; }

  // Parameters packed row-major by cause: psi[(k - 1) * (L - 1) + (q - 1)].
  std::vector<double> probabilities(int cause, std::span<const double> packed) const;
  double log_prob(int cause, int q, std::span<const double> packed) const;
  std::vector<double> packed() const;

 private:
  int causes_;
  int levels_;
  Eigen::MatrixXd psi_;
};

double nu_eval(const NuModel& model, int cause, int q, std::span<const double> x = {},
               double t = 0.0);

enum class MissingnessKind { logistic_of_q, logistic_of_txq, logistic_of_txy };

struct MissingnessTerm {
  enum class Type { intercept, aux, covariate, time_above, subtype };
  Type type = Type::intercept;
  int index = 0;           // aux level, covariate column, or subtype
  double threshold = 0.0;  // time_above only

  static MissingnessTerm intercept() { return {Type::intercept, 0, 0.0}; }
  static MissingnessTerm aux(int level) { return {Type::aux, level, 0.0}; }
  static MissingnessTerm covariate(int column) { return {Type::covariate, column, 0.0}; }
  static MissingnessTerm time_above(double c) { return {Type::time_above, 0, c}; }
  static MissingnessTerm subtype(int k) { return {Type::subtype, k, 0.0}; }
};

// Logistic model for pi = P(O = 1 | T = t, X = x, Q = q, Y = k).
class MissingnessModel {
 public:
  MissingnessModel(MissingnessKind kind, std::vector<MissingnessTerm> terms,
                   Eigen::VectorXd gamma = {});

  MissingnessKind kind() const { return kind_; }
  const std::vector<MissingnessTerm>& terms() const { return terms_; }
  const Eigen::VectorXd& gamma() const { return gamma_; }
  std::size_t parameter_count() const { return terms_.size(); }

  bool uses_aux() const;
  bool uses_subtype() const;

  // Time enters only through indicators I{t > c}; a "pattern" is the number
  // of sorted distinct thresholds strictly below t.
  std::size_t pattern_count() const { return thresholds_.size() + 1; }
  std::size_t time_pattern(double t) const;

  void design(double t, std::span<const double> x, int q, int subtype,
              std::span<double> out) const;
  void design_at_pattern(std::size_t pattern, std::span<const double> x, int q, int subtype,
                         std::span<double> out) const;

 private:
  MissingnessKind kind_;
  std::vector<MissingnessTerm> terms_;
  Eigen::VectorXd gamma_;
  std::vector<double> thresholds_;
};

double pi_eval(const MissingnessModel& model, double t, std::span<const double> x, int q,
               int subtype);

}  // namespace crmiss

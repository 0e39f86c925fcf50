#pragma once

#include <Eigen/Dense>

#include "crmiss/dataset.hpp"
#include "crmiss/model.hpp"
#include "crmiss/parameters.hpp"

namespace crmiss {

// How many derivatives an objective evaluation should produce.
enum class Order { value = 0, gradient = 1, hessian = 2 };

struct ObjectiveEvaluation {
  double value = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
  // Row i: contribution of subject i to the score (zero for non-contributors).
  Eigen::MatrixXd per_subject_scores;
};

// Complete-case, cause-specific Cox partial likelihood. Events with a missing
// subtype contribute no term but stay in the risk sets (as if censored at their
// event time); call on Dataset::without_missing_subtype_events() to drop them.
// theta needs beta blocks only; alpha cancels and is not estimated.
ObjectiveEvaluation loglik_cca(const Dataset& data, const ParameterVector& theta,
                               Order order = Order::hessian);

// log L*_Q2: informative partial likelihood conditioning on the event but not
// on its subtype, with case-only auxiliary Q through nu. Never reads a
// missingness model. theta: beta, eta, psi.
ObjectiveEvaluation loglik_lstar_q2(const Dataset& data, const BaselineRatioSpec& alpha,
                                    const NuModel& nu, const ParameterVector& theta,
                                    Order order = Order::hessian);

// log L*_Q1: Bernoulli log-likelihood of O among events, pi evaluated at
// (t_i, x_i, q_i). theta: gamma (other blocks ignored).
ObjectiveEvaluation loglik_lstar_q1(const Dataset& data, const MissingnessModel& miss,
                                    const ParameterVector& theta, Order order = Order::hessian);

// log L*_Q computed directly, pi and nu inside each event term.
// theta: beta, eta, psi, gamma.
ObjectiveEvaluation loglik_lstar_q(const Dataset& data, const BaselineRatioSpec& alpha,
                                   const NuModel& nu, const MissingnessModel& miss,
                                   const ParameterVector& theta, Order order = Order::hessian);

// log L*_Y for subtype-dependent (NMAR) missingness, no auxiliary data.
// theta: beta, eta, gamma. Throws ConfigError if the model references q.
ObjectiveEvaluation loglik_lstar_y(const Dataset& data, const BaselineRatioSpec& alpha,
                                   const MissingnessModel& miss, const ParameterVector& theta,
                                   Order order = Order::hessian);

// log L of the estimating-equation approach: observed-subtype terms with
// pi(t_i, x_j)-weighted single-cause risk sets, missing-subtype terms with
// (1 - pi(t_i, x_j))-weighted all-cause risk sets. theta: beta, eta, gamma.
// The model may depend on (t, x) only.
ObjectiveEvaluation loglik_gr(const Dataset& data, const BaselineRatioSpec& alpha,
                              const MissingnessModel& miss, const ParameterVector& theta,
                              Order order = Order::hessian);

struct EstimatingSystem {
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
  Eigen::MatrixXd per_subject_scores;
  // log L + log L* + Bernoulli log-likelihood; a diagnostic only.
  double log_likelihood_sum = 0.0;
};

// Stacked estimating equations: beta rows from d log L / d beta, eta rows from
// d log L* / d eta (L*_Q2 with nu == 1), gamma rows from the Bernoulli score of
// O given (t, x). theta: beta, eta, gamma.
EstimatingSystem gr_system(const Dataset& data, const BaselineRatioSpec& alpha,
                           const MissingnessModel& miss, const ParameterVector& theta,
                           bool with_jacobian = true);

}  // namespace crmiss

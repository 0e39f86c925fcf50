#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "crmiss/likelihoods.hpp"
#include "crmiss/parameters.hpp"

namespace crmiss {

struct FitOptions {
  int max_iterations = 100;
  // Convergence when sup|gradient| / n falls below this.
  double gradient_tolerance = 1e-8;
  int step_halving_max = 30;
  std::optional<ParameterVector> initial_values;
  double ridge_on_singular = 1e-8;
  // Abort when any beta component exceeds this in absolute value.
  double beta_guard = 50.0;
};

struct FitResult {
  ParameterVector estimate;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd standard_errors;
  std::optional<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  std::string message;
  // Objective value at every accepted iterate, starting point first.
  std::vector<double> trace;
};

using Objective = std::function<ObjectiveEvaluation(const ParameterVector&, Order)>;
using SystemFunction = std::function<EstimatingSystem(const ParameterVector&, bool)>;

// Newton-Raphson with step halving. Never throws on non-convergence; throws
// FitError if the objective is not finite at the starting point.
FitResult maximize(const Objective& objective, const ParameterVector& start, std::size_t n,
                   const FitOptions& options = {});

// Damped Newton root finding on a stacked estimating function; the merit
// function is the squared residual norm.
FitResult solve_gr(const SystemFunction& system, const ParameterVector& start, std::size_t n,
                   const FitOptions& options = {});

// A^-1 B A^-T with A = -derivative (Hessian of a log-likelihood or Jacobian of
// an estimating function) and B = sum_i s_i s_i'. Throws FitError when A stays
// singular after adding ridge * I.
Eigen::MatrixXd sandwich_covariance(const Eigen::MatrixXd& derivative,
                                    const Eigen::MatrixXd& per_subject_scores,
                                    double ridge = 1e-8);

std::pair<double, double> wald_interval(double estimate, double standard_error,
                                        double level = 0.95);
double p_value(double estimate, double standard_error);

}  // namespace crmiss

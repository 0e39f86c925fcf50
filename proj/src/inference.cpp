#include "crmiss/inference.hpp"

#include <cmath>
#include <limits>

#include "crmiss/errors.hpp"
#include "crmiss/numeric.hpp"

namespace crmiss {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kFlatStep = 1e-3;
constexpr double kDriftStep = 0.5;

double sup_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

bool beta_out_of_bounds(const ParameterVector& theta, double guard) {
  for (const auto& b : theta.layout().blocks()) {
    if (b.kind != BlockKind::beta) continue;
    for (std::size_t i = 0; i < b.size; ++i)
      if (std::abs(theta.values()[static_cast<Eigen::Index>(b.offset + i)]) > guard) return true;
  }
  return false;
}

double beta_sup_norm(const ParameterLayout& layout, const VectorXd& v) {
  double m = 0.0;
  for (const auto& b : layout.blocks())
    if (b.kind == BlockKind::beta)
      for (std::size_t i = 0; i < b.size; ++i)
        m = std::max(m, std::abs(v[static_cast<Eigen::Index>(b.offset + i)]));
  return m;
}

// Solves (-H) d = g, regularising -H until it is positive definite.
VectorXd ascent_direction(const MatrixXd& hessian, const VectorXd& gradient, double ridge) {
  MatrixXd a = -hessian;
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) {
    VectorXd d = llt.solve(gradient);
    if (d.allFinite()) return d;
  }
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  double lambda = std::max(ridge, 1e-12) * scale;
  for (int attempt = 0; attempt < 60; ++attempt, lambda *= 10.0) {
    MatrixXd shifted = a;
    shifted.diagonal().array() += lambda;
    llt.compute(shifted);
    if (llt.info() != Eigen::Success) continue;
    VectorXd d = llt.solve(gradient);
    if (d.allFinite()) return d;
  }
  return gradient;
}

void attach_covariance(FitResult& result, const MatrixXd& derivative, const MatrixXd& scores,
                       double ridge) {
  const auto dim = derivative.rows();
  try {
    result.covariance = sandwich_covariance(derivative, scores, ridge);
    result.standard_errors = result.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  } catch (const FitError& e) {
    result.covariance = MatrixXd::Constant(dim, dim, std::numeric_limits<double>::quiet_NaN());
    result.standard_errors = VectorXd::Constant(dim, std::numeric_limits<double>::quiet_NaN());
    result.converged = false;
    result.message = e.what();
  }
}

}  // namespace

FitResult maximize(const Objective& objective, const ParameterVector& start, std::size_t n,
                   const FitOptions& options) {
  const double scale = static_cast<double>(std::max<std::size_t>(n, 1));
  ParameterVector theta = options.initial_values ? *options.initial_values : start;
  auto eval = objective(theta, Order::hessian);
  if (!std::isfinite(eval.value) || !eval.gradient.allFinite())
    throw FitError("objective is not finite at the initial point");

  FitResult result;
  result.trace.push_back(eval.value);
  double last_step = 0.0, last_gain = 0.0;
  while (true) {
    result.gradient_norm = sup_norm(eval.gradient);
    const VectorXd step = ascent_direction(eval.hessian, eval.gradient, options.ridge_on_singular);
    // A vanishing gradient while beta still moves by whole units is a
    // likelihood rising towards its supremum at infinity (separation).
    if (result.gradient_norm / scale < options.gradient_tolerance && sup_norm(step) < kFlatStep) {
      if (last_step > kDriftStep && last_gain < options.gradient_tolerance * scale) {
        result.message = "monotone likelihood: estimate drifting while the gradient vanishes";
        break;
      }
      result.converged = true;
      break;
    }
    if (result.iterations >= options.max_iterations) {
      result.message = "iteration limit reached";
      break;
    }
    double factor = 1.0;
    bool accepted = false;
    ParameterVector trial = theta;
    double trial_value = 0.0;
    const double slack = 1e-12 * (1.0 + std::abs(eval.value));
    for (int h = 0; h <= options.step_halving_max; ++h, factor *= 0.5) {
      trial.values() = theta.values() + factor * step;
      trial_value = objective(trial, Order::value).value;
      if (std::isfinite(trial_value) && trial_value >= eval.value - slack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.message = "step halving failed to improve the objective";
      break;
    }
    last_step = factor * beta_sup_norm(theta.layout(), step);
    last_gain = trial_value - eval.value;
    theta = trial;
    ++result.iterations;
    eval = objective(theta, Order::hessian);
    result.trace.push_back(eval.value);
    if (beta_out_of_bounds(theta, options.beta_guard)) {
      result.gradient_norm = sup_norm(eval.gradient);
      result.message = "monotone likelihood: |beta| exceeded the guard";
      break;
    }
  }

  result.estimate = theta;
  result.log_likelihood = eval.value;
  attach_covariance(result, eval.hessian, eval.per_subject_scores, options.ridge_on_singular);
  return result;
}

FitResult solve_gr(const SystemFunction& system, const ParameterVector& start, std::size_t n,
                   const FitOptions& options) {
  const double scale = static_cast<double>(std::max<std::size_t>(n, 1));
  ParameterVector theta = options.initial_values ? *options.initial_values : start;
  auto eval = system(theta, true);
  if (!eval.residual.allFinite()) throw FitError("estimating function is not finite at the initial point");

  FitResult result;
  double merit = 0.5 * eval.residual.squaredNorm();
  result.trace.push_back(merit);
  while (true) {
    result.gradient_norm = sup_norm(eval.residual);
    if (result.gradient_norm / scale < options.gradient_tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= options.max_iterations) {
      result.message = "iteration limit reached";
      break;
    }
    Eigen::PartialPivLU<MatrixXd> lu(eval.jacobian);
    VectorXd step = lu.solve(-eval.residual);
    if (!step.allFinite() || std::abs(lu.determinant()) == 0.0) {
      MatrixXd shifted = eval.jacobian;
      shifted.diagonal().array() -= options.ridge_on_singular *
                                    std::max(1.0, eval.jacobian.diagonal().cwiseAbs().maxCoeff());
      step = shifted.partialPivLu().solve(-eval.residual);
    }
    double factor = 1.0;
    bool accepted = false;
    ParameterVector trial = theta;
    EstimatingSystem trial_eval;
    for (int h = 0; h <= options.step_halving_max; ++h, factor *= 0.5) {
      trial.values() = theta.values() + factor * step;
      trial_eval = system(trial, false);
      const double m = 0.5 * trial_eval.residual.squaredNorm();
      if (std::isfinite(m) && m < merit) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.message = "step halving failed to reduce the residual";
      break;
    }
    theta = trial;
    ++result.iterations;
    eval = system(theta, true);
    merit = 0.5 * eval.residual.squaredNorm();
    result.trace.push_back(merit);
    if (beta_out_of_bounds(theta, options.beta_guard)) {
      result.gradient_norm = sup_norm(eval.residual);
      result.message = "monotone likelihood: |beta| exceeded the guard";
      break;
    }
  }

  result.estimate = theta;
  attach_covariance(result, eval.jacobian, eval.per_subject_scores, options.ridge_on_singular);
  return result;
}

MatrixXd sandwich_covariance(const MatrixXd& derivative, const MatrixXd& per_subject_scores,
                             double ridge) {
  const auto dim = derivative.rows();
  if (derivative.cols() != dim || per_subject_scores.cols() != dim)
    throw DomainError("sandwich: dimension mismatch");
  const MatrixXd a = -derivative;
  const MatrixXd b = per_subject_scores.transpose() * per_subject_scores;
  const MatrixXd identity = MatrixXd::Identity(dim, dim);

  auto invert = [&](const MatrixXd& m) -> std::optional<MatrixXd> {
    Eigen::FullPivLU<MatrixXd> lu(m);
    if (!lu.isInvertible()) return std::nullopt;
    MatrixXd inv = lu.solve(identity);
    if (!inv.allFinite()) return std::nullopt;
    return inv;
  };
  auto inv = invert(a);
  if (!inv) {
    const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
    inv = invert(a + ridge * scale * identity);
  }
  if (!inv) throw FitError("non-identified model");
  MatrixXd cov = *inv * b * inv->transpose();
  return 0.5 * (cov + cov.transpose());
}

std::pair<double, double> wald_interval(double estimate, double standard_error, double level) {
  const double z = normal_quantile(0.5 + 0.5 * level);
  return {estimate - z * standard_error, estimate + z * standard_error};
}

double p_value(double estimate, double standard_error) {
  return 2.0 * normal_cdf(-std::abs(estimate / standard_error));
}

}  // namespace crmiss

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "crmiss/dataset.hpp"
#include "crmiss/parameters.hpp"

namespace testing_support {

using crmiss::Dataset;
using crmiss::ParameterVector;
using crmiss::SubjectRecord;

struct TinySpec {
  std::size_t n_min = 2;
  std::size_t n_max = 8;
  int causes = 2;
  std::size_t p = 2;
  int levels = 3;  // aux support 0..levels-1
  int strata = 1;
  bool ties = true;
  double event_rate = 0.7;
  double observed_rate = 0.6;
  bool binary_first_covariate = true;
};

inline Dataset random_dataset(std::mt19937_64& rng, const TinySpec& spec) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  while (true) {
    const std::size_t n =
        spec.n_min + static_cast<std::size_t>(u(rng) * static_cast<double>(spec.n_max - spec.n_min + 1));
    std::vector<SubjectRecord> records;
    bool usable = false;
    for (std::size_t i = 0; i < std::min(n, spec.n_max); ++i) {
      SubjectRecord r;
      r.time = spec.ties ? 0.5 * (1 + std::floor(u(rng) * 6)) : 0.1 + 5.0 * u(rng);
      r.event = u(rng) < spec.event_rate;
      for (std::size_t c = 0; c < spec.p; ++c)
        r.covariates.push_back(c == 0 && spec.binary_first_covariate ? (u(rng) < 0.5 ? 1.0 : 0.0)
                                                                      : z(rng));
      r.stratum = static_cast<int>(u(rng) * spec.strata);
      if (r.event) {
        r.aux = static_cast<int>(u(rng) * spec.levels);
        if (u(rng) < spec.observed_rate) {
          r.subtype_observed = true;
          r.subtype = 1 + static_cast<int>(u(rng) * spec.causes);
          usable = true;
        }
      }
      records.push_back(std::move(r));
    }
    if (!usable) continue;
    // Every stratum used needs a row in stratum 0.. strata-1 for the alpha spec.
    for (auto& r : records) r.stratum = std::min(r.stratum, spec.strata - 1);
    records.front().stratum = spec.strata - 1;
    return Dataset(std::move(records), spec.causes);
  }
}

inline ParameterVector random_theta(std::mt19937_64& rng, const crmiss::ParameterLayout& layout,
                                    double scale = 0.5) {
  std::normal_distribution<double> z(0.0, scale);
  Eigen::VectorXd v(static_cast<Eigen::Index>(layout.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = z(rng);
  return ParameterVector(layout, v);
}

using ValueFn = std::function<double(const ParameterVector&)>;
using GradientFn = std::function<Eigen::VectorXd(const ParameterVector&)>;

inline double step_for(double v) { return 1e-5 * std::max(1.0, std::abs(v)); }

inline Eigen::VectorXd fd_gradient(const ValueFn& f, const ParameterVector& theta) {
  Eigen::VectorXd g(theta.values().size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double h = step_for(theta.values()[i]);
    ParameterVector up = theta, down = theta;
    up.values()[i] += h;
    down.values()[i] -= h;
    g[i] = (f(up) - f(down)) / (2 * h);
  }
  return g;
}

inline Eigen::MatrixXd fd_jacobian(const GradientFn& g, const ParameterVector& theta) {
  const auto n = theta.values().size();
  Eigen::MatrixXd h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = step_for(theta.values()[i]);
    ParameterVector up = theta, down = theta;
    up.values()[i] += s;
    down.values()[i] -= s;
    h.col(i) = (g(up) - g(down)) / (2 * s);
  }
  return h;
}

// max |a - b| / max(1, max |b|)
inline double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

}  // namespace testing_support

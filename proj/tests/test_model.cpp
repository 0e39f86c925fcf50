#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "crmiss/dataset.hpp"
#include "crmiss/errors.hpp"
#include "crmiss/model.hpp"
#include "crmiss/numeric.hpp"
#include "crmiss/parameters.hpp"

using namespace crmiss;
using T = MissingnessTerm;

TEST_CASE("scalar primitives") {
  CHECK(expit(0.0) == 0.5);
  CHECK(log_sum_exp(std::vector<double>{1000, 1000}) == doctest::Approx(1000 + std::log(2.0)));
  CHECK(log_sum_exp(std::vector<double>{-700, -700}) == doctest::Approx(-700 + std::log(2.0)));
  CHECK(log_sum_exp(std::vector<double>{3.25}) == 3.25);
  CHECK_THROWS_AS(log_sum_exp(std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(logit(1.0), DomainError);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-40, 40);
  double prev = -1;
  for (double z = -40; z <= 40; z += 0.5) {
    CHECK(expit(z) >= prev);
    prev = expit(z);
  }
  for (int i = 0; i < 1000; ++i) {
    const double z = u(rng);
    CHECK(std::abs(expit(-z) - (1 - expit(z))) < 1e-15);
    CHECK(log_expit(z) == doctest::Approx(std::log(expit(z))));
  }
  CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-12));
}

TEST_CASE("alpha_eval examples") {
  const auto power = BaselineRatioSpec::power_law(2);
  const std::vector<double> eta{std::log(0.037), 1.0};
  CHECK(alpha_eval(power, 2, 10.0, eta) == doctest::Approx(0.37).epsilon(1e-14));
  CHECK(alpha_eval(power, 1, 10.0, eta) == 1.0);

  const auto pw = BaselineRatioSpec::piecewise_constant(2, {50.0});
  const std::vector<double> levels{std::log(0.5), std::log(2.0)};
  CHECK(alpha_eval(pw, 2, 49.9, levels) == doctest::Approx(0.5));
  CHECK(alpha_eval(pw, 2, 50.0, levels) == doctest::Approx(2.0));
  CHECK(alpha_eval(pw, 2, 50.0 + 1e-9, levels) == doctest::Approx(2.0));
}

TEST_CASE("alpha_eval errors") {
  const auto power = BaselineRatioSpec::power_law(2, 2);
  const std::vector<double> eta(4, 0.0);
  CHECK_THROWS_AS(alpha_eval(power, 3, 1.0, eta), DomainError);
  CHECK_THROWS_AS(alpha_eval(power, 0, 1.0, eta), DomainError);
  CHECK_THROWS_AS(alpha_eval(power, 2, 0.0, eta), DomainError);
  CHECK_THROWS_AS(alpha_eval(power, 2, -1.0, eta), DomainError);
  CHECK_THROWS_AS(alpha_eval(power, 2, 1.0, eta, 2), DomainError);
  CHECK_THROWS_AS(BaselineRatioSpec::piecewise_constant(2, {2.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(BaselineRatioSpec::piecewise_constant(2, {0.0}), ConfigError);
}

TEST_CASE("alpha_1 is exactly one everywhere") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> t(1e-6, 500.0);
  std::normal_distribution<double> z;
  const auto power = BaselineRatioSpec::power_law(3, 2);
  const auto pw = BaselineRatioSpec::piecewise_constant(3, {1, 5, 20}, 2);
  std::vector<double> e1(power.parameter_count()), e2(pw.parameter_count());
  for (auto& v : e1) v = z(rng);
  for (auto& v : e2) v = z(rng);
  for (int i = 0; i < 1000; ++i) {
    CHECK(alpha_eval(power, 1, t(rng), e1, i % 2) == 1.0);
    CHECK(alpha_eval(pw, 1, t(rng), e2, i % 2) == 1.0);
  }
}

TEST_CASE("stratum copies are independent") {
  const auto spec = BaselineRatioSpec::power_law(2, 2);
  const std::vector<double> eta{std::log(2.0), 0.0, std::log(3.0), 0.0};
  CHECK(alpha_eval(spec, 2, 4.0, eta, 0) == doctest::Approx(2.0));
  CHECK(alpha_eval(spec, 2, 4.0, eta, 1) == doctest::Approx(3.0));
}

TEST_CASE("relative_hazard") {
  const auto power = BaselineRatioSpec::power_law(2);
  const std::vector<double> eta{std::log(0.037), 1.0};
  CHECK(relative_hazard(power, 1, 3.0, std::vector<double>{2.0}, std::vector<double>{0.0}, eta) == 1.0);
  CHECK(relative_hazard(power, 2, 10.0, std::vector<double>{1.0}, std::vector<double>{0.916}, eta) ==
        doctest::Approx(0.37 * std::exp(0.916)));
  CHECK(relative_hazard(power, 2, 10.0, std::vector<double>{1.0}, std::vector<double>{0.916}, eta) ==
        doctest::Approx(0.9247).epsilon(1e-4));
  CHECK(relative_hazard(power, 2, 7.0, std::vector<double>{0.0}, std::vector<double>{0.916}, eta) ==
        doctest::Approx(alpha_eval(power, 2, 7.0, eta)));
  CHECK_THROWS_AS(relative_hazard(power, 2, 1.0, std::vector<double>{1.0, 2.0}, std::vector<double>{0.5}, eta),
                  DomainError);
}

TEST_CASE("nu_eval examples and normalisation") {
  CHECK(nu_eval(NuModel(2, 2), 1, 1) == doctest::Approx(0.5));
  Eigen::MatrixXd psi(2, 1);
  psi << logit(0.25), logit(0.5);
  const NuModel nu(2, 2, psi);
  CHECK(nu_eval(nu, 1, 1) == doctest::Approx(0.25));
  CHECK(nu_eval(nu, 2, 1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(nu_eval(nu, 1, 2), DomainError);
  CHECK_THROWS_AS(nu_eval(nu, 1, -1), DomainError);
  CHECK_THROWS_AS(nu_eval(nu, 3, 0), DomainError);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0, 2);
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::MatrixXd p(3, 4);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = z(rng);
    const NuModel m(3, 5, p);
    for (int k = 1; k <= 3; ++k) {
      double sum = 0;
      for (int q = 0; q < 5; ++q) {
        const double v = nu_eval(m, k, q);
        CHECK(v > 0);
        CHECK(v < 1);
        sum += v;
      }
      CHECK(std::abs(sum - 1) < 1e-12);
    }
  }
}

TEST_CASE("pi_eval examples") {
  const double gq = 1.3;
  const MissingnessModel q_model(MissingnessKind::logistic_of_q, {T::intercept(), T::aux(1)},
                                 Eigen::Vector2d(0.0, gq));
  CHECK(pi_eval(q_model, 1.0, {}, 0, 0) == doctest::Approx(0.5));

  const MissingnessModel txq(MissingnessKind::logistic_of_txq,
                             {T::aux(1), T::covariate(0), T::time_above(50)},
                             Eigen::Vector3d(gq, 0.5, -0.01));
  CHECK(pi_eval(txq, 60.0, std::vector<double>{0.0}, 1, 0) == doctest::Approx(expit(gq - 0.01)));

  const double gy = 0.8;
  const MissingnessModel txy(MissingnessKind::logistic_of_txy,
                             {T::subtype(2), T::time_above(50), T::covariate(0)},
                             Eigen::Vector3d(gy, -0.01, 0.5));
  CHECK(pi_eval(txy, 60.0, std::vector<double>{1.0}, 0, 2) == doctest::Approx(expit(gy - 0.01 + 0.5)));
  CHECK(pi_eval(txy, 40.0, std::vector<double>{1.0}, 0, 1) == doctest::Approx(expit(0.5)));
}

TEST_CASE("missingness models reject terms outside their kind") {
  CHECK_THROWS_AS(MissingnessModel(MissingnessKind::logistic_of_q, {T::covariate(0)}), ConfigError);
  CHECK_THROWS_AS(MissingnessModel(MissingnessKind::logistic_of_txq, {T::subtype(2)}), ConfigError);
  CHECK_THROWS_AS(MissingnessModel(MissingnessKind::logistic_of_txy, {T::aux(1)}), ConfigError);
}

TEST_CASE("pi is a probability and monotone in each coefficient direction") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z(0, 1.5);
  const std::vector<T> terms{T::intercept(), T::aux(1), T::covariate(0), T::time_above(10)};
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::Vector4d g(z(rng), z(rng), z(rng), z(rng));
    const std::vector<double> x{std::abs(z(rng)) + 0.1};
    const MissingnessModel m(MissingnessKind::logistic_of_txq, terms, g);
    const double base = pi_eval(m, 20.0, x, 1, 0);
    CHECK(base > 0);
    CHECK(base < 1);
    for (int c = 0; c < 4; ++c) {
      Eigen::Vector4d up = g;
      up[c] += 0.5;
      // Every design entry is positive at (t = 20, x > 0, q = 1).
      CHECK(pi_eval(MissingnessModel(MissingnessKind::logistic_of_txq, terms, up), 20.0, x, 1, 0) >= base);
    }
  }
}

TEST_CASE("time patterns count thresholds strictly below t") {
  const MissingnessModel m(MissingnessKind::logistic_of_txq,
                           {T::time_above(50), T::time_above(10), T::time_above(50)});
  CHECK(m.pattern_count() == 3);
  CHECK(m.time_pattern(5) == 0);
  CHECK(m.time_pattern(10) == 0);
  CHECK(m.time_pattern(10.5) == 1);
  CHECK(m.time_pattern(51) == 2);
}

TEST_CASE("parameter layout and packing") {
  const auto alpha = BaselineRatioSpec::piecewise_constant(3, {1, 2}, 2);
  const NuModel nu(3, 3);
  const MissingnessModel miss(MissingnessKind::logistic_of_txq, {T::intercept(), T::aux(1)});
  const auto layout = ParameterLayout::standard(2, 3, &alpha, &nu, &miss);
  CHECK(layout.size() == 3 * 2 + alpha.parameter_count() + nu.parameter_count() + 2);

  std::size_t next = 0;
  for (const auto& b : layout.blocks()) {
    CHECK(b.offset == next);
    next += b.size;
  }
  CHECK(next == layout.size());
  CHECK(layout.labels().size() == layout.size());
  CHECK_THROWS_AS(ParameterLayout().add(BlockKind::eta, 2).add(BlockKind::eta, 1), ConfigError);
  CHECK_THROWS_AS(ParameterLayout::standard(1, 2).at(BlockKind::gamma), ConfigError);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(layout.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = z(rng);
    const ParameterVector th(layout, v);
    const auto round = ParameterVector::pack(layout, th.unpack());
    CHECK(round.values() == v);
    CHECK(round.layout() == layout);
  }
}

TEST_CASE("record invariants") {
  SubjectRecord r;
  r.time = 1;
  r.covariates = {0.0};
  CHECK_NOTHROW(validate_record(r, 1));
  r.subtype = 1;
  r.subtype_observed = true;
  CHECK_THROWS_AS(validate_record(r, 1), DataError);  // subtype on a censored record
  r.event = true;
  CHECK_NOTHROW(validate_record(r, 1));
  r.subtype_observed = false;
  CHECK_THROWS_AS(validate_record(r, 1), DataError);
  r.subtype.reset();
  r.aux = 0;
  CHECK_NOTHROW(validate_record(r, 1));
  r.event = false;
  CHECK_THROWS_AS(validate_record(r, 1), DataError);  // aux on a censored record
  r.aux.reset();
  r.time = -1;
  CHECK_THROWS_AS(validate_record(r, 1), DataError);
  r.time = 1;
  CHECK_THROWS_AS(validate_record(r, 2), DataError);
}

TEST_CASE("dataset counts and ordering") {
  std::vector<SubjectRecord> recs(5);
  const double times[] = {3, 1, 4, 1, 5};
  for (int i = 0; i < 5; ++i) {
    recs[i].time = times[i];
    recs[i].covariates = {double(i)};
  }
  recs[0].event = true;
  recs[0].subtype_observed = true;
  recs[0].subtype = 2;
  recs[0].aux = 1;
  recs[2].event = true;
  recs[3].event = true;
  recs[3].aux = 0;
  const Dataset d(recs);
  CHECK(d.causes() == 2);
  CHECK(d.event_count() == 3);
  CHECK(d.observed_subtype_count() == 1);
  CHECK(d.missing_subtype_count() == 2);
  CHECK(d.missing_aux_event_count() == 1);
  CHECK(d.aux_levels() == 2);
  const auto& order = d.descending(0);
  CHECK(order == std::vector<std::size_t>{4, 2, 0, 1, 3});
  CHECK(d.without_missing_subtype_events().size() == 3);
}

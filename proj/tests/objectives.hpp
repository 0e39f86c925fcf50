#pragma once

// The objective catalogue shared by the likelihood tests and the acceptance
// runner: each objective with its models, parameter layout and oracle.

#include "crmiss/likelihoods.hpp"
#include "oracle.hpp"

namespace objectives {

using namespace crmiss;
using T = MissingnessTerm;

// Bundles one objective with the models it needs.
struct Setup {
  BaselineRatioSpec alpha;
  NuModel nu;
  MissingnessModel q_model;   // logistic of (t, x, q)
  MissingnessModel y_model;   // logistic of (t, x, y)
  MissingnessModel tx_model;  // logistic of (t, x)
  oracle::AlphaDef alpha_def;
};

inline Setup make_setup(const Dataset& d, bool power) {
  const int K = d.causes();
  const std::vector<double> cuts{1.0, 2.25};
  Setup s{power ? BaselineRatioSpec::power_law(K, d.strata())
                : BaselineRatioSpec::piecewise_constant(K, cuts, d.strata()),
          NuModel(K, 3),
          MissingnessModel(MissingnessKind::logistic_of_txq,
                           {T::intercept(), T::aux(1), T::aux(2), T::covariate(0), T::time_above(1.5)}),
          MissingnessModel(MissingnessKind::logistic_of_txy,
                           {T::intercept(), T::subtype(2), T::covariate(1), T::time_above(1.25)}),
          MissingnessModel(MissingnessKind::logistic_of_txq,
                           {T::intercept(), T::covariate(0), T::time_above(1.5)}),
          {power, power ? std::vector<double>{} : cuts, K, d.strata()}};
  return s;
}

enum class Obj { cca, lq2, lq1, lq, ly, gr };
inline constexpr Obj kAll[] = {Obj::cca, Obj::lq2, Obj::lq1, Obj::lq, Obj::ly, Obj::gr};

inline const char* name(Obj o) {
  switch (o) {
    case Obj::cca: return "cca";
    case Obj::lq2: return "lq2";
    case Obj::lq1: return "lq1";
    case Obj::lq: return "lq";
    case Obj::ly: return "ly";
    case Obj::gr: return "gr";
  }
  return "?";
}

inline ParameterLayout layout_for(Obj o, const Dataset& d, const Setup& s) {
  const auto p = d.covariate_count();
  const int K = d.causes();
  switch (o) {
    case Obj::cca: return ParameterLayout::standard(p, K);
    case Obj::lq2: return ParameterLayout::standard(p, K, &s.alpha, &s.nu);
    case Obj::lq1: return ParameterLayout::standard(p, K, nullptr, nullptr, &s.q_model);
    case Obj::lq: return ParameterLayout::standard(p, K, &s.alpha, &s.nu, &s.q_model);
    case Obj::ly: return ParameterLayout::standard(p, K, &s.alpha, nullptr, &s.y_model);
    case Obj::gr: return ParameterLayout::standard(p, K, &s.alpha, nullptr, &s.tx_model);
  }
  return {};
}

inline ObjectiveEvaluation evaluate(Obj o, const Dataset& d, const Setup& s, const ParameterVector& th,
                             Order order) {
  switch (o) {
    case Obj::cca: return loglik_cca(d, th, order);
    case Obj::lq2: return loglik_lstar_q2(d, s.alpha, s.nu, th, order);
    case Obj::lq1: return loglik_lstar_q1(d, s.q_model, th, order);
    case Obj::lq: return loglik_lstar_q(d, s.alpha, s.nu, s.q_model, th, order);
    case Obj::ly: return loglik_lstar_y(d, s.alpha, s.y_model, th, order);
    case Obj::gr: return loglik_gr(d, s.alpha, s.tx_model, th, order);
  }
  return {};
}

inline long double reference(Obj o, const Dataset& d, const Setup& s, const ParameterVector& th) {
  const auto P = oracle::unpack(th, d.causes(), d.covariate_count(),
                                o == Obj::lq2 || o == Obj::lq ? 3 : 1);
  switch (o) {
    case Obj::cca: return oracle::cca(d, P);
    case Obj::lq2: return oracle::lq2(d, s.alpha_def, P);
    case Obj::lq1: return oracle::lq1(d, s.q_model.terms(), P);
    case Obj::lq: return oracle::lq(d, s.alpha_def, s.q_model.terms(), P);
    case Obj::ly: return oracle::ly(d, s.alpha_def, s.y_model.terms(), P);
    case Obj::gr: return oracle::gr_l(d, s.alpha_def, s.tx_model.terms(), P);
  }
  return 0;
}

}  // namespace objectives

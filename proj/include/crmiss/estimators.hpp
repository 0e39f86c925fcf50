#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "crmiss/dataset.hpp"
#include "crmiss/inference.hpp"
#include "crmiss/model.hpp"

namespace crmiss {

enum class Estimator { cca, lq2, ly, gr };

std::string_view estimator_name(Estimator e);
// Accepts "cca", "lq2", "ly", "gr" (case-insensitive); nullopt otherwise.
std::optional<Estimator> parse_estimator(std::string_view name);

// Neutral starting point: beta = 0, psi = 0, gamma = 0, piecewise log-levels
// = 0; power-law alpha_k starts constant at the crude observed-subtype event
// ratio (log eta_1 = log(d_k / d_1), eta_2 = 0).
ParameterVector initial_values(const ParameterLayout& layout, const Dataset& data,
                               const BaselineRatioSpec* alpha);

FitResult fit_cca(const Dataset& data, const FitOptions& options = {}, bool drop_rows = false);
FitResult fit_lstar_q2(const Dataset& data, const BaselineRatioSpec& alpha, const NuModel& nu,
                       const FitOptions& options = {});
FitResult fit_lstar_y(const Dataset& data, const BaselineRatioSpec& alpha,
                      const MissingnessModel& miss, const FitOptions& options = {});
FitResult fit_gr(const Dataset& data, const BaselineRatioSpec& alpha,
                 const MissingnessModel& miss, const FitOptions& options = {});

}  // namespace crmiss

#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "crmiss/dataset.hpp"
#include "crmiss/estimators.hpp"
#include "crmiss/io.hpp"
#include "crmiss/simulation.hpp"

namespace crmiss {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFindings = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

// Entry point of the `crmiss` tool: subcommands simulate, fit, validate.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Simulation reports. All numbers are printed with fixed precision so that
// identical results give identical bytes.
std::string summary_csv(const ReplicationSummary& summary);
std::string replications_csv(const std::vector<ReplicationRecord>& records);
std::string simulation_table(const ScenarioFile& scenario, const ReplicationSummary& summary);
// Estimators whose excluded replications exceed 20%.
std::vector<std::string> failure_warnings(const ReplicationSummary& summary);

// Missingness model terms, comma separated: intercept, aux:<level>,
// cov:<name or 1-based index>, time:<threshold>, subtype:<k>.
std::vector<MissingnessTerm> parse_miss_terms(std::string_view text,
                                              const std::vector<std::string>& covariate_names);

struct FittedEstimator {
  Estimator estimator;
  FitResult fit;
};

// "0.200(1.221)" style estimate, "<0.001" style p-values.
std::string format_estimate(double beta);
std::string format_p_value(double p);

// Coefficient table per subtype and covariate, one column group per estimator.
std::string coefficient_table(const std::vector<FittedEstimator>& fits, int causes,
                              const std::vector<std::string>& covariate_names);
std::string coefficient_json(const std::vector<FittedEstimator>& fits, int causes,
                             const std::vector<std::string>& covariate_names);

}  // namespace crmiss

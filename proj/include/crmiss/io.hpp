#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "crmiss/dataset.hpp"
#include "crmiss/estimators.hpp"
#include "crmiss/simulation.hpp"

namespace crmiss {

// Scenario files are "key = value" lines; '#' starts a comment. Unknown keys,
// malformed numbers and out-of-range values raise ConfigError with the
// source name, line number and key in the message.
//
//   name, n, replications, seed
//   beta = b1, b2              eta = eta1, eta2
//   covariate_prevalence       baseline_level = <c> | calibrate
//   censoring = on | off       censoring_mean, admin_time
//   q_prob = p1, p2            P(Q = 1 | Y = k)
//   mechanism = always | marq | martxq | nmar
//   p_obs = p0, p1             marq targets P(O = 1 | Q = 0), P(O = 1 | Q = 1)
//   exp_gamma_q, exp_gamma_y   martxq / nmar coefficients on the odds scale
//   x_coef, time_coef, time_cut
//   alpha = power | piecewise:c1,c2,...
//   cca = drop | retain        missing-subtype events removed or kept at risk
//   estimators = cca,lq2,ly,gr
struct ScenarioFile {
  Scenario scenario;
  std::vector<Estimator> estimators{Estimator::cca, Estimator::lq2, Estimator::ly, Estimator::gr};
};

ScenarioFile parse_scenario(std::istream& in, std::string_view source = "<scenario>");
ScenarioFile load_scenario(const std::filesystem::path& path);
std::string format_scenario(const ScenarioFile& file);

// "cca,lq2" -> {cca, lq2}; throws ConfigError on unknown or repeated names.
std::vector<Estimator> parse_estimator_list(std::string_view text);
// "power" -> {}, "piecewise:10,20" -> {10, 20}.
std::vector<double> parse_alpha_option(std::string_view text);

// Column bindings for data files. Empty names are unbound. With no
// covariates listed, every unbound column is a covariate, in file order.
struct CsvSchema {
  std::string time = "time";
  std::string event = "event";
  std::string subtype = "subtype";
  std::string subtype_observed;
  std::string aux = "aux";
  std::string stratum;
  std::vector<std::string> covariates;
  std::string missing_token;
};

// Same "key = value" format; keys are the field names above, covariates
// comma separated.
CsvSchema parse_schema(std::istream& in, std::string_view source = "<schema>");
CsvSchema load_schema(const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// RFC 4180 reader: quoted fields, doubled quotes, embedded newlines, CRLF.
// Throws DataError on unterminated quotes, an empty input or ragged rows.
CsvTable read_csv(std::istream& in);
std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

struct Finding {
  std::size_t row = 0;  // 1-based data row, 0 for file-level findings
  std::string column;
  std::string message;
};

struct Ingested {
  std::vector<SubjectRecord> records;
  std::vector<std::string> covariate_names;
  std::vector<Finding> errors;    // records with errors are not kept
  std::vector<Finding> warnings;  // e.g. blank aux on an event row
};

// Never throws on row content; every problem becomes a finding.
Ingested ingest(const CsvTable& table, const CsvSchema& schema);

// Throws DataError listing the first findings if any row is invalid.
Dataset read_dataset(std::istream& in, const CsvSchema& schema,
                     std::vector<std::string>* covariate_names = nullptr);
Dataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema,
                     std::vector<std::string>* covariate_names = nullptr);

// Writes the columns bound in the schema; covariates are named from the
// schema, or x1..xp when it lists none. Doubles use shortest round-trip form.
void write_dataset(std::ostream& out, const Dataset& data, const CsvSchema& schema);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// Writes to a temporary sibling, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace crmiss

#include "crmiss/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include "crmiss/errors.hpp"

namespace crmiss {
namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "NA";
  std::string s = fmt::format("{:.{}f}", v, digits);
  // Avoid "-0.000".
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string beta_label(std::size_t cause, std::size_t covariate, std::size_t p) {
  return p == 1 ? fmt::format("beta{}", cause) : fmt::format("beta{}[{}]", cause, covariate);
}

std::size_t excluded_max(const ReplicationSummary& summary, Estimator e) {
  std::size_t worst = 0;
  for (const auto& row : summary.rows)
    if (row.estimator == e) worst = std::max(worst, row.convergence_failures);
  return worst;
}

std::vector<Estimator> estimators_in(const ReplicationSummary& summary) {
  std::vector<Estimator> out;
  for (const auto& row : summary.rows)
    if (std::find(out.begin(), out.end(), row.estimator) == out.end()) out.push_back(row.estimator);
  return out;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::string estimators;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  std::string alpha;
  bool cca_drop_rows = false;
  std::string dataset_out;
};

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  ScenarioFile file;
  try {
    file = load_scenario(args.scenario);
    if (!args.estimators.empty()) file.estimators = parse_estimator_list(args.estimators);
    if (args.reps) file.scenario.replications = *args.reps;
    if (args.seed) file.scenario.seed = *args.seed;
    if (!args.alpha.empty()) file.scenario.alpha_cuts = parse_alpha_option(args.alpha);
    if (args.cca_drop_rows) file.scenario.cca_drop_rows = true;
    validate(file.scenario);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const fs::path dir(args.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    err << "error: cannot create output directory '" << dir.string() << "': " << ec.message() << "\n";
    return kExitUsage;
  }

  if (!args.dataset_out.empty()) {
    Rng rng = Rng::stream(file.scenario.seed, 0);
    const Dataset data = generate_dataset(file.scenario, rng);
    std::ostringstream csv;
    write_dataset(csv, data, CsvSchema{});
    write_file_atomic(args.dataset_out, csv.str());
  }

  const SimulationResult result = run_replications(file.scenario, file.estimators, args.workers);
  const std::string table = simulation_table(file, result.summary);
  write_file_atomic(dir / "summary.csv", summary_csv(result.summary));
  write_file_atomic(dir / "replications.csv", replications_csv(result.records));
  write_file_atomic(dir / "table.txt", table);
  out << table;
  for (const auto& w : failure_warnings(result.summary)) err << w << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct FitArgs {
  std::string data;
  std::string schema;
  std::string estimators = "lq2";
  std::string alpha = "power";
  std::string strata_col;
  bool cca_drop_rows = false;
  std::string ly_terms;
  std::string gr_terms;
  std::string out;
  int max_iterations = 100;
};

CsvSchema schema_for(const std::string& path, const std::string& strata_col) {
  CsvSchema schema = path.empty() ? CsvSchema{} : load_schema(path);
  if (!strata_col.empty()) schema.stratum = strata_col;
  return schema;
}

int cmd_fit(const FitArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<Estimator> estimators;
  CsvSchema schema;
  std::vector<double> cuts;
  try {
    estimators = parse_estimator_list(args.estimators);
    schema = schema_for(args.schema, args.strata_col);
    cuts = parse_alpha_option(args.alpha);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  std::vector<std::string> names;
  std::optional<Dataset> loaded;
  try {
    loaded.emplace(load_dataset(args.data, schema, &names));
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  const Dataset& data = *loaded;
  const int K = data.causes();

  const bool wants_lq2 = std::find(estimators.begin(), estimators.end(), Estimator::lq2) != estimators.end();
  if (wants_lq2) {
    const std::size_t lacking = data.missing_aux_event_count();
    if (schema.aux.empty() || lacking > 0) {
      err << "error: estimator requires auxiliary column";
      if (lacking > 0) err << " (" << lacking << " event rows have no aux value)";
      err << "\n";
      return kExitUsage;
    }
  }

  std::vector<FittedEstimator> fits;
  std::vector<std::string> failures;
  try {
    const BaselineRatioSpec alpha = cuts.empty()
                                        ? BaselineRatioSpec::power_law(K, data.strata())
                                        : BaselineRatioSpec::piecewise_constant(K, cuts, data.strata());
    std::vector<MissingnessTerm> ly_terms;
    if (args.ly_terms.empty()) {
      ly_terms.push_back(MissingnessTerm::intercept());
      for (int k = 2; k <= K; ++k) ly_terms.push_back(MissingnessTerm::subtype(k));
    } else {
      ly_terms = parse_miss_terms(args.ly_terms, names);
    }
    std::vector<MissingnessTerm> gr_terms;
    if (args.gr_terms.empty()) {
      gr_terms.push_back(MissingnessTerm::intercept());
      for (std::size_t c = 0; c < data.covariate_count(); ++c)
        gr_terms.push_back(MissingnessTerm::covariate(static_cast<int>(c)));
    } else {
      gr_terms = parse_miss_terms(args.gr_terms, names);
    }
    for (const auto& t : gr_terms)
      if (t.type == MissingnessTerm::Type::aux || t.type == MissingnessTerm::Type::subtype)
        throw ConfigError("GR missingness model may depend on time and covariates only");

    FitOptions options;
    options.max_iterations = args.max_iterations;
    for (Estimator e : estimators) {
      try {
        FitResult fit;
        switch (e) {
          case Estimator::cca:
            fit = fit_cca(data, options, args.cca_drop_rows);
            break;
          case Estimator::lq2:
            fit = fit_lstar_q2(data, alpha, NuModel(K, data.aux_levels()), options);
            break;
          case Estimator::ly:
            fit = fit_lstar_y(data, alpha, MissingnessModel(MissingnessKind::logistic_of_txy, ly_terms),
                              options);
            break;
          case Estimator::gr:
            fit = fit_gr(data, alpha, MissingnessModel(MissingnessKind::logistic_of_txq, gr_terms),
                         options);
            break;
        }
        if (!fit.converged)
          failures.push_back(fmt::format("{}: {} after {} iterations (sup|score| = {:.3g})",
                                         estimator_name(e), fit.message, fit.iterations,
                                         fit.gradient_norm));
        fits.push_back({e, std::move(fit)});
      } catch (const FitError& ex) {
        failures.push_back(fmt::format("{}: {}", estimator_name(e), ex.what()));
      }
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  const std::string table = coefficient_table(fits, K, names);
  out << table;
  if (!args.out.empty()) {
    const fs::path dir(args.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
      err << "error: cannot create output directory '" << dir.string() << "'\n";
      return kExitUsage;
    }
    write_file_atomic(dir / "fit.txt", table);
    write_file_atomic(dir / "fit.json", coefficient_json(fits, K, names));
  }
  if (!failures.empty()) {
    for (const auto& f : failures) err << "fit failed: " << f << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& data_path, const std::string& schema_path,
                 const std::string& strata_col, std::ostream& out, std::ostream& err) {
  CsvSchema schema;
  CsvTable table;
  try {
    schema = schema_for(schema_path, strata_col);
    std::ifstream in(data_path, std::ios::binary);
    if (!in) throw DataError("cannot open data file '" + data_path + "'");
    table = read_csv(in);
  } catch (const std::runtime_error& e) {
    out << "file: " << e.what() << "\n";
    err << "error: " << e.what() << "\n";
    return kExitFindings;
  }
  const Ingested ing = ingest(table, schema);

  std::size_t events = 0, observed = 0;
  for (const auto& r : ing.records) {
    events += r.event;
    observed += r.subtype_observed;
  }
  out << fmt::format("rows: {}\n", table.rows.size());
  out << fmt::format("valid rows: {}\n", ing.records.size());
  out << fmt::format("covariates: {}\n", fmt::join(ing.covariate_names, ", "));
  out << fmt::format("events: {}\n", events);
  out << fmt::format("observed subtypes: {}\n", observed);
  out << fmt::format("missing-subtype fraction among events: {}\n",
                     events ? fixed(1.0 - static_cast<double>(observed) / events, 4) : "NA");

  std::map<std::string, std::size_t> per_column;
  for (const auto& f : ing.errors) ++per_column[f.column.empty() ? "(record)" : f.column];
  for (const auto& [column, count] : per_column)
    out << fmt::format("parse failures in {}: {}\n", column, count);
  for (const auto& f : ing.errors)
    out << fmt::format("error: {}{}{}\n", f.row ? fmt::format("row {}: ", f.row) : "",
                       f.column.empty() ? "" : fmt::format("column '{}': ", f.column), f.message);
  for (const auto& f : ing.warnings)
    out << fmt::format("warning: row {}: column '{}': {}\n", f.row, f.column, f.message);
  return ing.errors.empty() ? kExitOk : kExitFindings;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string summary_csv(const ReplicationSummary& summary) {
  std::ostringstream out;
  write_csv_row(out, {"estimator", "parameter", "truth", "mean_estimate", "relative_bias_percent",
                      "monte_carlo_sd", "mean_standard_error", "ci_coverage_rate", "used",
                      "convergence_failures", "mean_missing_fraction", "mean_censoring_fraction"});
  for (const auto& r : summary.rows)
    write_csv_row(out, {std::string(estimator_name(r.estimator)), r.parameter, fixed(r.truth, 6),
                        fixed(r.mean_estimate, 6), fixed(r.relative_bias_percent, 4),
                        fixed(r.monte_carlo_sd, 6), fixed(r.mean_standard_error, 6),
                        fixed(r.ci_coverage_rate, 4), std::to_string(r.used),
                        std::to_string(r.convergence_failures), fixed(summary.mean_missing_fraction, 6),
                        fixed(summary.mean_censoring_fraction, 6)});
  return out.str();
}

std::string replications_csv(const std::vector<ReplicationRecord>& records) {
  std::size_t width = 0;
  for (const auto& r : records) width = std::max(width, r.estimates.size());
  std::vector<std::string> header{"replication", "estimator", "converged"};
  const std::size_t p = width / 2 ? width / 2 : 1;
  for (std::size_t j = 0; j < width; ++j) {
    header.push_back(beta_label(j / p + 1, j % p + 1, p));
    header.push_back("se_" + beta_label(j / p + 1, j % p + 1, p));
  }
  header.insert(header.end(), {"missing_fraction", "censoring_fraction", "message"});

  std::ostringstream out;
  write_csv_row(out, header);
  for (const auto& r : records) {
    std::vector<std::string> row{std::to_string(r.replication), std::string(estimator_name(r.estimator)),
                                 r.converged ? "1" : "0"};
    for (std::size_t j = 0; j < width; ++j) {
      row.push_back(j < r.estimates.size() ? format_double(r.estimates[j]) : "");
      row.push_back(j < r.standard_errors.size() ? format_double(r.standard_errors[j]) : "");
    }
    row.push_back(format_double(r.missing_fraction));
    row.push_back(format_double(r.censoring_fraction));
    row.push_back(r.message);
    write_csv_row(out, row);
  }
  return out.str();
}

std::vector<std::string> failure_warnings(const ReplicationSummary& summary) {
  std::vector<std::string> out;
  for (Estimator e : estimators_in(summary)) {
    const std::size_t failed = excluded_max(summary, e);
    if (summary.replications && 5 * failed > summary.replications)
      out.push_back(fmt::format("WARNING: {} failed on {} of {} replications; its rows are unreliable",
                                estimator_name(e), failed, summary.replications));
  }
  return out;
}

std::string simulation_table(const ScenarioFile& file, const ReplicationSummary& summary) {
  const Scenario& s = file.scenario;
  const auto estimators = estimators_in(summary);
  std::string out;
  out += fmt::format("{}: n = {}, replications = {}, seed = {}\n", s.name, s.n, summary.replications,
                     s.seed);
  out += fmt::format("%Missing subtype = {:.1f}%, censoring = {:.1f}%\n\n",
                     100.0 * summary.mean_missing_fraction, 100.0 * summary.mean_censoring_fraction);
  out += fmt::format("{:<24}", "");
  for (Estimator e : estimators) out += fmt::format("{:>10}", estimator_name(e));
  out += "\n";

  std::vector<std::string> parameters;
  for (const auto& row : summary.rows)
    if (std::find(parameters.begin(), parameters.end(), row.parameter) == parameters.end())
      parameters.push_back(row.parameter);
  for (const auto& param : parameters) {
    auto find = [&](Estimator e) -> const ParameterSummary* {
      for (const auto& row : summary.rows)
        if (row.estimator == e && row.parameter == param) return &row;
      return nullptr;
    };
    const auto* first = find(estimators.front());
    out += fmt::format("{} (true {})\n", param, fixed(first ? first->truth : NAN, 3));
    auto line = [&](const char* label, auto value) {
      out += fmt::format("  {:<22}", label);
      for (Estimator e : estimators) {
        const auto* row = find(e);
        out += fmt::format("{:>10}", row ? value(*row) : std::string("NA"));
      }
      out += "\n";
    };
    line("Bias(%)", [](const ParameterSummary& r) { return fixed(r.relative_bias_percent, 2); });
    line("SD", [](const ParameterSummary& r) { return fixed(r.monte_carlo_sd, 3); });
    line("mean SE", [](const ParameterSummary& r) { return fixed(r.mean_standard_error, 3); });
    line("CI-R", [](const ParameterSummary& r) { return fixed(r.ci_coverage_rate, 2); });
    line("excluded", [](const ParameterSummary& r) { return std::to_string(r.convergence_failures); });
  }
  for (const auto& w : failure_warnings(summary)) out += "\n" + w;
  if (!failure_warnings(summary).empty()) out += "\n";
  return out;
}

std::vector<MissingnessTerm> parse_miss_terms(std::string_view text,
                                              const std::vector<std::string>& covariate_names) {
  std::vector<MissingnessTerm> terms;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(' '));
    item.erase(item.find_last_not_of(' ') + 1);
    if (item == "intercept") {
      terms.push_back(MissingnessTerm::intercept());
      continue;
    }
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("bad missingness term '" + item + "'");
    const std::string kind = item.substr(0, colon);
    const std::string arg = item.substr(colon + 1);
    try {
      if (kind == "aux") {
        terms.push_back(MissingnessTerm::aux(std::stoi(arg)));
      } else if (kind == "subtype") {
        terms.push_back(MissingnessTerm::subtype(std::stoi(arg)));
      } else if (kind == "time") {
        terms.push_back(MissingnessTerm::time_above(std::stod(arg)));
      } else if (kind == "cov") {
        const auto it = std::find(covariate_names.begin(), covariate_names.end(), arg);
        int column = -1;
        if (it != covariate_names.end())
          column = static_cast<int>(it - covariate_names.begin());
        else
          column = std::stoi(arg) - 1;
        if (column < 0 || column >= static_cast<int>(covariate_names.size()))
          throw ConfigError("unknown covariate '" + arg + "'");
        terms.push_back(MissingnessTerm::covariate(column));
      } else {
        throw ConfigError("bad missingness term '" + item + "'");
      }
    } catch (const std::logic_error&) {
      throw ConfigError("bad missingness term '" + item + "'");
    }
  }
  if (terms.empty()) throw ConfigError("empty missingness model");
  return terms;
}

std::string format_estimate(double beta) {
  return fmt::format("{}({})", fixed(beta, 3), fixed(std::exp(beta), 3));
}

std::string format_p_value(double p) {
  if (!std::isfinite(p)) return "NA";
  if (p < 0.001) return "<0.001";
  return fixed(p, 3);
}

std::string coefficient_table(const std::vector<FittedEstimator>& fits, int causes,
                              const std::vector<std::string>& names) {
  std::string out = fmt::format("{:<8}{:<14}", "", "");
  for (const auto& f : fits) out += fmt::format("| {:<53}", estimator_name(f.estimator));
  out += "\n";
  out += fmt::format("{:<8}{:<14}", "Subtype", "Covariate");
  for (std::size_t i = 0; i < fits.size(); ++i)
    out += fmt::format("| {:<16}{:>8}  {:<18}{:>8} ", "beta(exp)", "SE", "95% CI", "p");
  out += "\n";
  for (int k = 1; k <= causes; ++k) {
    for (std::size_t c = 0; c < names.size(); ++c) {
      out += fmt::format("{:<8}{:<14}", c == 0 ? std::to_string(k) : "", names[c]);
      for (const auto& f : fits) {
        const auto& block = f.fit.estimate.layout().at(BlockKind::beta, k);
        const auto at = static_cast<Eigen::Index>(block.offset + c);
        const double b = f.fit.estimate.values()[at];
        const double se = f.fit.standard_errors[at];
        const auto [lo, hi] = wald_interval(b, se);
        out += fmt::format("| {:<16}{:>8}  {:<18}{:>8} ", format_estimate(b), fixed(se, 3),
                           fmt::format("[{}, {}]", fixed(lo, 3), fixed(hi, 3)),
                           format_p_value(p_value(b, se)));
      }
      out += "\n";
    }
  }
  for (const auto& f : fits)
    out += fmt::format("{}: {} in {} iterations{}\n", estimator_name(f.estimator),
                       f.fit.converged ? "converged" : "NOT converged", f.fit.iterations,
                       f.fit.message.empty() ? "" : " (" + f.fit.message + ")");
  return out;
}

std::string coefficient_json(const std::vector<FittedEstimator>& fits, int causes,
                             const std::vector<std::string>& names) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json doc;
  doc["estimators"] = json::array();
  for (const auto& f : fits) {
    json e;
    e["name"] = estimator_name(f.estimator);
    e["converged"] = f.fit.converged;
    e["iterations"] = f.fit.iterations;
    e["message"] = f.fit.message;
    e["log_likelihood"] = f.fit.log_likelihood ? num(*f.fit.log_likelihood) : json(nullptr);
    e["coefficients"] = json::array();
    for (int k = 1; k <= causes; ++k) {
      const auto& block = f.fit.estimate.layout().at(BlockKind::beta, k);
      for (std::size_t c = 0; c < names.size(); ++c) {
        const auto at = static_cast<Eigen::Index>(block.offset + c);
        const double b = f.fit.estimate.values()[at];
        const double se = f.fit.standard_errors[at];
        const auto [lo, hi] = wald_interval(b, se);
        e["coefficients"].push_back({{"subtype", k},
                                     {"covariate", names[c]},
                                     {"estimate", num(b)},
                                     {"exp_estimate", num(std::exp(b))},
                                     {"se", num(se)},
                                     {"ci_lower", num(lo)},
                                     {"ci_upper", num(hi)},
                                     {"p_value", num(p_value(b, se))}});
      }
    }
    e["parameters"] = json::object();
    const auto labels = f.fit.estimate.layout().labels();
    for (std::size_t i = 0; i < labels.size(); ++i)
      e["parameters"][labels[i]] = num(f.fit.estimate.values()[static_cast<Eigen::Index>(i)]);
    doc["estimators"].push_back(std::move(e));
  }
  return doc.dump(2) + "\n";
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Competing-risks regression with missing cause of failure"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo scenario");
  simulate->add_option("--scenario", sim.scenario, "Scenario file")->required();
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--estimators", sim.estimators, "Comma-separated: cca,lq2,ly,gr");
  simulate->add_option("--reps", sim.reps, "Override the replication count");
  simulate->add_option("--seed", sim.seed, "Override the seed");
  simulate->add_option("--workers", sim.workers, "Worker threads (0 = all cores)");
  simulate->add_option("--alpha", sim.alpha, "power | piecewise:c1,c2,...");
  simulate->add_flag("--cca-drop-rows", sim.cca_drop_rows, "Drop missing-subtype cases entirely in CCA");
  simulate->add_option("--dataset-out", sim.dataset_out, "Also write replication 0's data as CSV");

  FitArgs fit;
  auto* fitcmd = app.add_subcommand("fit", "Fit estimators to a CSV dataset");
  fitcmd->add_option("data", fit.data, "Data CSV")->required();
  fitcmd->add_option("--schema", fit.schema, "Schema file (default column names otherwise)");
  fitcmd->add_option("--estimators", fit.estimators, "Comma-separated: cca,lq2,ly,gr");
  fitcmd->add_option("--alpha", fit.alpha, "power | piecewise:c1,c2,...");
  fitcmd->add_option("--strata-col", fit.strata_col, "Stratum column for the baseline ratio");
  fitcmd->add_flag("--cca-drop-rows", fit.cca_drop_rows, "Drop missing-subtype cases entirely in CCA");
  fitcmd->add_option("--ly-terms", fit.ly_terms, "LY missingness terms, e.g. intercept,subtype:2,time:50");
  fitcmd->add_option("--gr-terms", fit.gr_terms, "GR missingness terms, e.g. intercept,cov:x1");
  fitcmd->add_option("--max-iterations", fit.max_iterations, "Newton iteration limit");
  fitcmd->add_option("--out", fit.out, "Directory for fit.txt and fit.json");

  std::string data_path, schema_path, strata_col;
  auto* validatecmd = app.add_subcommand("validate", "Check a CSV dataset");
  validatecmd->add_option("data", data_path, "Data CSV")->required();
  validatecmd->add_option("--schema", schema_path, "Schema file");
  validatecmd->add_option("--strata-col", strata_col, "Stratum column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out, err);
    if (*fitcmd) return cmd_fit(fit, out, err);
    return cmd_validate(data_path, schema_path, strata_col, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FitError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace crmiss

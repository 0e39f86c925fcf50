#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <unistd.h>
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "crmiss/errors.hpp"
#include "crmiss/io.hpp"
#include "helpers.hpp"

using namespace crmiss;
namespace fs = std::filesystem;

namespace {

CsvTable csv(const std::string& text) {
  std::istringstream in(text);
  return read_csv(in);
}

ScenarioFile scenario(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in, "test.scn");
}

std::string config_error(const std::string& text) {
  try {
    scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("csv reader handles quoting and line endings") {
  const auto t = csv("a,b,c\r\n1,\"x,y\",\"say \"\"hi\"\"\"\r\n\r\n2,\"two\nlines\",\n");
  REQUIRE(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0] == std::vector<std::string>{"1", "x,y", "say \"hi\""});
  CHECK(t.rows[1] == std::vector<std::string>{"2", "two\nlines", ""});
  CHECK(csv("a\n1").rows.size() == 1);  // no trailing newline

  CHECK_THROWS_AS(csv(""), DataError);
  CHECK_THROWS_AS(csv("a,b\n1\n"), DataError);
  CHECK_THROWS_AS(csv("a,b\n1,\"open\n"), DataError);
}

TEST_CASE("csv writer round trips arbitrary fields") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("q\"q") == "\"q\"\"q\"");
  std::mt19937_64 rng(21);
  const std::string alphabet = "ab,\"\n\r x1";
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::string> header{"h1", "h2", "h3"}, row;
    for (int c = 0; c < 3; ++c) {
      std::string f;
      const auto len = rng() % 6;
      for (std::size_t i = 0; i < len; ++i) f += alphabet[rng() % alphabet.size()];
      row.push_back(f);
    }
    // A lone empty field would read back as a blank line.
    if (row[0].empty() && row[1].empty() && row[2].empty()) row[0] = "z";
    std::ostringstream out;
    write_csv_row(out, header);
    write_csv_row(out, row);
    const auto t = csv(out.str());
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0] == row);
  }
}

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(3.0) == "3");
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("dataset csv round trip is field-by-field identical") {
  std::mt19937_64 rng(23);
  testing_support::TinySpec spec;
  spec.n_min = 5;
  spec.n_max = 40;
  spec.strata = 3;
  spec.ties = false;
  spec.p = 3;
  for (const bool with_flag : {false, true}) {
    CsvSchema schema;
    schema.stratum = "stratum";
    if (with_flag) {
      schema.subtype_observed = "observed";
      schema.missing_token = "NA";
    }
    for (int rep = 0; rep < 30; ++rep) {
      const auto d = testing_support::random_dataset(rng, spec);
      std::ostringstream out;
      write_dataset(out, d, schema);
      std::istringstream in(out.str());
      std::vector<std::string> names;
      const auto back = read_dataset(in, schema, &names);
      CHECK(names == std::vector<std::string>{"x1", "x2", "x3"});
      REQUIRE(back.size() == d.size());
      for (std::size_t i = 0; i < d.size(); ++i) CHECK(back[i] == d[i]);
    }
  }
}

TEST_CASE("ingestion reports findings by row and column") {
  const auto t = csv(
      "time,event,subtype,aux,x\n"
      "1.5,1,2,1,0\n"    // fine
      "2.0,0,1,,1\n"     // subtype on a censored row
      "abc,1,1,0,0\n"    // bad time
      "3.0,1,,,1\n"      // blank aux on an event: warning only
      "4.0,2,,,1\n");    // bad event flag
  const auto ing = ingest(t, CsvSchema{});
  CHECK(ing.records.size() == 2);
  CHECK(ing.covariate_names == std::vector<std::string>{"x"});
  REQUIRE(ing.errors.size() == 3);
  CHECK(ing.errors[0].row == 2);
  CHECK(ing.errors[1].row == 3);
  CHECK(ing.errors[1].column == "time");
  CHECK(ing.errors[2].row == 5);
  CHECK(ing.errors[2].column == "event");
  REQUIRE(ing.warnings.size() == 1);
  CHECK(ing.warnings[0].row == 4);
  CHECK(ing.warnings[0].column == "aux");

  std::istringstream in(
      "time,event,subtype,aux,x\n"
      "2.0,0,1,,1\n");
  CHECK_THROWS_AS(read_dataset(in, CsvSchema{}), DataError);

  CsvSchema missing_col;
  missing_col.covariates = {"x", "nope"};
  const auto bad = ingest(t, missing_col);
  REQUIRE_FALSE(bad.errors.empty());
  CHECK(bad.errors[0].row == 0);
  CHECK(bad.errors[0].column == "nope");
}

TEST_CASE("explicit subtype_observed column is checked against the subtype") {
  CsvSchema s;
  s.subtype_observed = "obs";
  const auto ing = ingest(csv("time,event,subtype,obs,aux,x\n"
                              "1,1,1,1,0,0\n"
                              "1,1,,1,0,0\n"
                              "1,1,2,0,0,0\n"
                              "1,1,,0,0,1\n"),
                          s);
  CHECK(ing.records.size() == 2);
  CHECK(ing.errors.size() == 2);
}

TEST_CASE("schema parsing") {
  std::istringstream in("# bindings\ntime = t\nevent = d\ncovariates = a, b\nmissing_token = NA\n");
  const auto s = parse_schema(in);
  CHECK(s.time == "t");
  CHECK(s.event == "d");
  CHECK(s.covariates == std::vector<std::string>{"a", "b"});
  CHECK(s.missing_token == "NA");
  CHECK(s.subtype == "subtype");
  std::istringstream bad("tme = t\n");
  CHECK_THROWS_AS(parse_schema(bad), ConfigError);
  std::istringstream unbound("time =\n");
  CHECK_THROWS_AS(parse_schema(unbound), ConfigError);
}

TEST_CASE("scenario files parse every key") {
  const auto f = scenario(
      "# a comment\n"
      "name = nmar five\n"
      "n = 500\n"
      "replications = 7\n"
      "seed = 99\n"
      "beta = 0.1, 0.2\n"
      "eta = 0.05, 1\n"
      "covariate_prevalence = 0.3\n"
      "baseline_level = 0.004\n"
      "censoring = off\n"
      "censoring_mean = 40\n"
      "admin_time = 80\n"
      "q_prob = 0.3, 0.6\n"
      "mechanism = nmar\n"
      "exp_gamma_y = 5\n"
      "x_coef = 0.4\n"
      "time_coef = -0.02\n"
      "time_cut = 45\n"
      "alpha = piecewise:10,30\n"
      "cca = retain\n"
      "estimators = lq2, gr   # trailing comment\n");
  const auto& s = f.scenario;
  CHECK(s.name == "nmar five");
  CHECK(s.n == 500);
  CHECK(s.replications == 7);
  CHECK(s.seed == 99);
  CHECK(s.beta == std::array<double, 2>{0.1, 0.2});
  CHECK(s.eta1 == 0.05);
  CHECK(s.eta2 == 1.0);
  CHECK(s.covariate_prevalence == 0.3);
  CHECK(s.baseline_level == 0.004);
  CHECK_FALSE(s.censoring);
  CHECK(s.censoring_mean == 40);
  CHECK(s.admin_time == 80);
  CHECK(s.q_prob == std::array<double, 2>{0.3, 0.6});
  CHECK(s.mechanism.kind == MechanismKind::nmar);
  CHECK(s.mechanism.gamma_y == doctest::Approx(std::log(5.0)));
  CHECK(s.mechanism.x_coef == 0.4);
  CHECK(s.mechanism.time_coef == -0.02);
  CHECK(s.mechanism.time_cut == 45);
  CHECK(s.alpha_cuts == std::vector<double>{10, 30});
  CHECK_FALSE(s.cca_drop_rows);
  CHECK(f.estimators == std::vector<Estimator>{Estimator::lq2, Estimator::gr});

  const auto again = scenario(format_scenario(f));
  CHECK(format_scenario(again) == format_scenario(f));
  CHECK(again.scenario.mechanism.gamma_y == doctest::Approx(s.mechanism.gamma_y).epsilon(1e-15));
}

TEST_CASE("scenario errors name the line and the field") {
  CHECK(config_error("n = 10\nbogus = 1\n").find("test.scn:2: field 'bogus'") != std::string::npos);
  CHECK(config_error("n = ten\n").find("test.scn:1: field 'n'") != std::string::npos);
  CHECK(config_error("\n\np_obs = 0.2, 1.2\n").find(":3: field 'p_obs'") != std::string::npos);
  CHECK(config_error("n = 1\n").find("field 'n'") != std::string::npos);
  CHECK(config_error("n = 10\nn = 20\n").find(":2: field 'n'") != std::string::npos);
  CHECK(config_error("just text\n").find(":1:") != std::string::npos);
  CHECK(config_error("mechanism = mcar\n").find("field 'mechanism'") != std::string::npos);
  CHECK(config_error("estimators = cca,cca\n").find("field 'estimators'") != std::string::npos);
  CHECK(config_error("alpha = piecewise:5,2\n").find("field 'alpha'") != std::string::npos);
  CHECK(config_error("beta = 1\n").find("field 'beta'") != std::string::npos);
}

TEST_CASE("option parsers") {
  CHECK(parse_estimator_list("cca,LQ2, ly ,gr") ==
        std::vector<Estimator>{Estimator::cca, Estimator::lq2, Estimator::ly, Estimator::gr});
  CHECK_THROWS_AS(parse_estimator_list("cox"), ConfigError);
  CHECK_THROWS_AS(parse_estimator_list(""), ConfigError);
  CHECK(parse_alpha_option("power").empty());
  CHECK(parse_alpha_option("piecewise:10,20.5") == std::vector<double>{10, 20.5});
  CHECK_THROWS_AS(parse_alpha_option("piecewise:"), ConfigError);
  CHECK_THROWS_AS(parse_alpha_option("weibull"), ConfigError);
}

TEST_CASE("atomic writes leave no temporary behind") {
  const auto dir = fs::temp_directory_path() / ("crmiss_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const auto target = dir / "out.txt";
  write_file_atomic(target, "first");
  write_file_atomic(target, "second");
  std::ifstream in(target);
  std::string text((std::istreambuf_iterator<char>(in)), {});
  CHECK(text == "second");
  CHECK_FALSE(fs::exists(dir / "out.txt.tmp"));
  fs::remove_all(dir);
}

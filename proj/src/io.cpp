#include "crmiss/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "crmiss/errors.hpp"

namespace crmiss {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

template <class Int>
std::optional<Int> to_integer(std::string_view s) {
  Int v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return v;
}

struct KeyValue {
  std::size_t line;
  std::string key;
  std::string value;
};

std::vector<KeyValue> read_key_values(std::istream& in, std::string_view source) {
  std::vector<KeyValue> out;
  std::set<std::string> seen;
  std::string text;
  for (std::size_t line = 1; std::getline(in, text); ++line) {
    const auto hash = text.find('#');
    const std::string body = trim(std::string_view(text).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(std::string(source) + ":" + std::to_string(line) +
                        ": expected 'key = value'");
    KeyValue kv{line, trim(std::string_view(body).substr(0, eq)),
                trim(std::string_view(body).substr(eq + 1))};
    if (kv.key.empty())
      throw ConfigError(std::string(source) + ":" + std::to_string(line) + ": empty key");
    if (!seen.insert(kv.key).second)
      throw ConfigError(std::string(source) + ":" + std::to_string(line) + ": field '" + kv.key +
                        "': given more than once");
    out.push_back(std::move(kv));
  }
  return out;
}

class FieldReader {
 public:
  FieldReader(std::string_view source, const KeyValue& kv) : source_(source), kv_(kv) {}

  [[noreturn]] void fail(const std::string& message) const {
    throw ConfigError(std::string(source_) + ":" + std::to_string(kv_.line) + ": field '" +
                      kv_.key + "': " + message);
  }

  double number() const {
    const auto v = to_double(kv_.value);
    if (!v || !std::isfinite(*v)) fail("expected a number, got '" + kv_.value + "'");
    return *v;
  }

  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("must be positive");
    return v;
  }

  double probability() const {
    const double v = number();
    if (!(v > 0.0 && v < 1.0)) fail("must lie in (0,1)");
    return v;
  }

  std::array<double, 2> pair(bool probabilities = false) const {
    const auto parts = split(kv_.value, ',');
    if (parts.size() != 2) fail("expected two comma-separated numbers");
    std::array<double, 2> out{};
    for (std::size_t i = 0; i < 2; ++i) {
      const auto v = to_double(parts[i]);
      if (!v || !std::isfinite(*v)) fail("expected a number, got '" + parts[i] + "'");
      if (probabilities && !(*v > 0.0 && *v < 1.0)) fail("entries must lie in (0,1)");
      out[i] = *v;
    }
    return out;
  }

  template <class Int>
  Int integer(Int minimum) const {
    const auto v = to_integer<Int>(kv_.value);
    if (!v) fail("expected a non-negative integer, got '" + kv_.value + "'");
    if (*v < minimum) fail("must be at least " + std::to_string(minimum));
    return *v;
  }

  const std::string& text() const { return kv_.value; }

 private:
  std::string_view source_;
  const KeyValue& kv_;
};

}  // namespace

std::vector<Estimator> parse_estimator_list(std::string_view text) {
  std::vector<Estimator> out;
  for (const auto& name : split(text, ',')) {
    const auto e = parse_estimator(name);
    if (!e) throw ConfigError("unknown estimator '" + name + "' (expected cca, lq2, ly, gr)");
    if (std::find(out.begin(), out.end(), *e) != out.end())
      throw ConfigError("estimator '" + name + "' listed twice");
    out.push_back(*e);
  }
  return out;
}

std::vector<double> parse_alpha_option(std::string_view text) {
  const std::string t = trim(text);
  if (t == "power") return {};
  const std::string prefix = "piecewise:";
  if (t.rfind(prefix, 0) != 0)
    throw ConfigError("alpha must be 'power' or 'piecewise:c1,c2,...', got '" + t + "'");
  std::vector<double> cuts;
  for (const auto& part : split(std::string_view(t).substr(prefix.size()), ',')) {
    const auto v = to_double(part);
    if (!v || !(*v > 0.0) || !std::isfinite(*v))
      throw ConfigError("alpha cut point '" + part + "' is not a positive number");
    if (!cuts.empty() && *v <= cuts.back())
      throw ConfigError("alpha cut points must be strictly increasing");
    cuts.push_back(*v);
  }
  return cuts;
}

ScenarioFile parse_scenario(std::istream& in, std::string_view source) {
  ScenarioFile file;
  Scenario& s = file.scenario;
  bool calibrate = false;
  for (const auto& kv : read_key_values(in, source)) {
    const FieldReader f(source, kv);
    const std::string& k = kv.key;
    if (k == "name") {
      s.name = kv.value;
    } else if (k == "n") {
      s.n = f.integer<std::size_t>(2);
    } else if (k == "replications") {
      s.replications = f.integer<std::size_t>(1);
    } else if (k == "seed") {
      s.seed = f.integer<std::uint64_t>(0);
    } else if (k == "beta") {
      s.beta = f.pair();
    } else if (k == "eta") {
      const auto e = f.pair();
      if (!(e[0] > 0.0) || e[1] < 0.0) f.fail("eta1 must be positive and eta2 non-negative");
      s.eta1 = e[0];
      s.eta2 = e[1];
    } else if (k == "covariate_prevalence") {
      s.covariate_prevalence = f.probability();
    } else if (k == "baseline_level") {
      if (kv.value == "calibrate")
        calibrate = true;
      else
        s.baseline_level = f.positive();
    } else if (k == "censoring") {
      if (kv.value != "on" && kv.value != "off") f.fail("expected 'on' or 'off'");
      s.censoring = kv.value == "on";
    } else if (k == "censoring_mean") {
      s.censoring_mean = f.positive();
    } else if (k == "admin_time") {
      s.admin_time = f.positive();
    } else if (k == "q_prob") {
      s.q_prob = f.pair(true);
    } else if (k == "mechanism") {
      const std::string& m = kv.value;
      if (m == "always")
        s.mechanism.kind = MechanismKind::always_observed;
      else if (m == "marq")
        s.mechanism.kind = MechanismKind::marq;
      else if (m == "martxq")
        s.mechanism.kind = MechanismKind::martxq;
      else if (m == "nmar")
        s.mechanism.kind = MechanismKind::nmar;
      else
        f.fail("expected always, marq, martxq or nmar, got '" + m + "'");
    } else if (k == "p_obs") {
      const auto p = f.pair(true);
      s.mechanism.p_obs_q0 = p[0];
      s.mechanism.p_obs_q1 = p[1];
    } else if (k == "exp_gamma_q") {
      s.mechanism.gamma_q = std::log(f.positive());
    } else if (k == "exp_gamma_y") {
      s.mechanism.gamma_y = std::log(f.positive());
    } else if (k == "x_coef") {
      s.mechanism.x_coef = f.number();
    } else if (k == "time_coef") {
      s.mechanism.time_coef = f.number();
    } else if (k == "time_cut") {
      s.mechanism.time_cut = f.positive();
    } else if (k == "alpha") {
      try {
        s.alpha_cuts = parse_alpha_option(kv.value);
      } catch (const ConfigError& e) {
        f.fail(e.what());
      }
    } else if (k == "cca") {
      if (kv.value != "drop" && kv.value != "retain") f.fail("expected 'drop' or 'retain'");
      s.cca_drop_rows = kv.value == "drop";
    } else if (k == "estimators") {
      try {
        file.estimators = parse_estimator_list(kv.value);
      } catch (const ConfigError& e) {
        f.fail(e.what());
      }
    } else {
      f.fail("unknown key");
    }
  }
  if (calibrate) s.baseline_level = calibrate_baseline_level(s);
  validate(s);
  return file;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path.string() + "'");
  return parse_scenario(in, path.string());
}

std::string format_scenario(const ScenarioFile& file) {
  const Scenario& s = file.scenario;
  std::ostringstream out;
  auto pair = [](std::array<double, 2> v) { return format_double(v[0]) + ", " + format_double(v[1]); };
  out << "name = " << s.name << "\n"
      << "n = " << s.n << "\n"
      << "replications = " << s.replications << "\n"
      << "seed = " << s.seed << "\n"
      << "beta = " << pair(s.beta) << "\n"
      << "eta = " << format_double(s.eta1) << ", " << format_double(s.eta2) << "\n"
      << "covariate_prevalence = " << format_double(s.covariate_prevalence) << "\n"
      << "baseline_level = " << format_double(s.baseline_level) << "\n"
      << "censoring = " << (s.censoring ? "on" : "off") << "\n"
      << "censoring_mean = " << format_double(s.censoring_mean) << "\n"
      << "admin_time = " << format_double(s.admin_time) << "\n"
      << "q_prob = " << pair(s.q_prob) << "\n";
  const Mechanism& m = s.mechanism;
  switch (m.kind) {
    case MechanismKind::always_observed:
      out << "mechanism = always\n";
      break;
    case MechanismKind::marq:
      out << "mechanism = marq\np_obs = " << format_double(m.p_obs_q0) << ", "
          << format_double(m.p_obs_q1) << "\n";
      break;
    case MechanismKind::martxq:
      out << "mechanism = martxq\nexp_gamma_q = " << format_double(std::exp(m.gamma_q)) << "\n";
      break;
    case MechanismKind::nmar:
      out << "mechanism = nmar\nexp_gamma_y = " << format_double(std::exp(m.gamma_y)) << "\n";
      break;
  }
  out << "x_coef = " << format_double(m.x_coef) << "\n"
      << "time_coef = " << format_double(m.time_coef) << "\n"
      << "time_cut = " << format_double(m.time_cut) << "\n";
  if (s.alpha_cuts.empty()) {
    out << "alpha = power\n";
  } else {
    out << "alpha = piecewise:";
    for (std::size_t i = 0; i < s.alpha_cuts.size(); ++i)
      out << (i ? "," : "") << format_double(s.alpha_cuts[i]);
    out << "\n";
  }
  out << "cca = " << (s.cca_drop_rows ? "drop" : "retain") << "\n";
  out << "estimators = ";
  for (std::size_t i = 0; i < file.estimators.size(); ++i) {
    std::string name(estimator_name(file.estimators[i]));
    std::transform(name.begin(), name.end(), name.begin(), ::tolower);
    out << (i ? "," : "") << name;
  }
  out << "\n";
  return out.str();
}

CsvSchema parse_schema(std::istream& in, std::string_view source) {
  CsvSchema schema;
  for (const auto& kv : read_key_values(in, source)) {
    const FieldReader f(source, kv);
    if (kv.key == "time")
      schema.time = kv.value;
    else if (kv.key == "event")
      schema.event = kv.value;
    else if (kv.key == "subtype")
      schema.subtype = kv.value;
    else if (kv.key == "subtype_observed")
      schema.subtype_observed = kv.value;
    else if (kv.key == "aux")
      schema.aux = kv.value;
    else if (kv.key == "stratum")
      schema.stratum = kv.value;
    else if (kv.key == "missing_token")
      schema.missing_token = kv.value;
    else if (kv.key == "covariates")
      schema.covariates = kv.value.empty() ? std::vector<std::string>{} : split(kv.value, ',');
    else
      f.fail("unknown key");
  }
  if (schema.time.empty() || schema.event.empty())
    throw ConfigError(std::string(source) + ": time and event columns must be bound");
  return schema;
}

CsvSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file '" + path.string() + "'");
  return parse_schema(in, path.string());
}

CsvTable read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  bool any = false;
  std::size_t line = 1;
  char c = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    // Skip blank lines.
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (in.peek() == '\n') continue;
      end_row();
      ++line;
    } else if (c == '\n') {
      end_row();
      ++line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted field at line " + std::to_string(line));
  if (any && (field_started || !row.empty())) end_row();
  if (rows.empty()) throw DataError("empty CSV input: a header row is required");

  CsvTable table;
  table.header = std::move(rows.front());
  for (auto& h : table.header) h = trim(h);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != table.header.size())
      throw DataError("data row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                      " fields, header has " + std::to_string(table.header.size()));
    table.rows.push_back(std::move(rows[r]));
  }
  return table;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_escape(fields[i]);
  out << "\n";
}

Ingested ingest(const CsvTable& table, const CsvSchema& schema) {
  Ingested out;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (!index.emplace(table.header[i], i).second)
      out.errors.push_back({0, table.header[i], "duplicate column name"});

  auto bind = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    if (name.empty()) return std::nullopt;
    const auto it = index.find(name);
    if (it == index.end()) {
      if (required) out.errors.push_back({0, name, "column not found"});
      return std::nullopt;
    }
    return it->second;
  };
  const auto time_col = bind(schema.time, true);
  const auto event_col = bind(schema.event, true);
  const auto subtype_col = bind(schema.subtype, !schema.subtype_observed.empty());
  const auto observed_col = bind(schema.subtype_observed, true);
  const auto aux_col = bind(schema.aux, false);
  const auto stratum_col = bind(schema.stratum, true);

  std::vector<std::size_t> cov_cols;
  if (schema.covariates.empty()) {
    const std::set<std::string> bound{schema.time,    schema.event,   schema.subtype,
                                      schema.subtype_observed, schema.aux, schema.stratum};
    for (std::size_t i = 0; i < table.header.size(); ++i)
      if (!bound.count(table.header[i])) {
        cov_cols.push_back(i);
        out.covariate_names.push_back(table.header[i]);
      }
  } else {
    for (const auto& name : schema.covariates)
      if (const auto c = bind(name, true)) {
        cov_cols.push_back(*c);
        out.covariate_names.push_back(name);
      }
  }
  if (!out.errors.empty()) return out;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t row_no = r + 1;
    const std::size_t before = out.errors.size();
    auto blank = [&](std::size_t col) {
      const std::string v = trim(row[col]);
      return v.empty() || v == schema.missing_token;
    };
    auto error = [&](std::size_t col, const std::string& message) {
      out.errors.push_back({row_no, table.header[col], message});
    };
    auto number = [&](std::size_t col) -> std::optional<double> {
      if (blank(col)) {
        error(col, "missing value");
        return std::nullopt;
      }
      const auto v = to_double(trim(row[col]));
      if (!v || !std::isfinite(*v)) error(col, "not a finite number: '" + row[col] + "'");
      return v;
    };
    auto integer = [&](std::size_t col) -> std::optional<int> {
      const auto v = to_integer<int>(trim(row[col]));
      if (!v) error(col, "not an integer: '" + row[col] + "'");
      return v;
    };
    auto flag = [&](std::size_t col) -> std::optional<bool> {
      const std::string v = trim(row[col]);
      if (v == "1" || v == "true" || v == "TRUE") return true;
      if (v == "0" || v == "false" || v == "FALSE") return false;
      error(col, "expected 0/1, got '" + row[col] + "'");
      return std::nullopt;
    };

    SubjectRecord rec;
    if (const auto t = number(*time_col)) rec.time = *t;
    if (blank(*event_col))
      error(*event_col, "missing value");
    else if (const auto e = flag(*event_col))
      rec.event = *e;

    std::optional<int> subtype;
    if (subtype_col && !blank(*subtype_col)) subtype = integer(*subtype_col);
    if (observed_col) {
      if (blank(*observed_col)) {
        rec.subtype_observed = false;
      } else if (const auto o = flag(*observed_col)) {
        rec.subtype_observed = *o;
      }
      if (rec.subtype_observed && !subtype && out.errors.size() == before)
        error(*observed_col, "subtype_observed is 1 but the subtype is blank");
      if (!rec.subtype_observed && subtype)
        error(*subtype_col, "subtype given where subtype_observed is 0");
    } else {
      rec.subtype_observed = subtype.has_value();
    }
    if (rec.subtype_observed) rec.subtype = subtype;

    if (aux_col && !blank(*aux_col)) rec.aux = integer(*aux_col);
    if (stratum_col) {
      if (blank(*stratum_col))
        error(*stratum_col, "missing value");
      else if (const auto s = integer(*stratum_col))
        rec.stratum = *s;
    }
    for (std::size_t c : cov_cols) {
      const auto v = number(c);
      rec.covariates.push_back(v.value_or(0.0));
    }
    if (out.errors.size() != before) continue;

    try {
      validate_record(rec, cov_cols.size());
    } catch (const DataError& e) {
      out.errors.push_back({row_no, "", e.what()});
      continue;
    }
    if (rec.event && aux_col && !rec.aux)
      out.warnings.push_back({row_no, table.header[*aux_col], "aux is blank on an event row"});
    out.records.push_back(std::move(rec));
  }
  return out;
}

Dataset read_dataset(std::istream& in, const CsvSchema& schema,
                     std::vector<std::string>* covariate_names) {
  const CsvTable table = read_csv(in);
  Ingested ing = ingest(table, schema);
  if (!ing.errors.empty()) {
    std::string message = std::to_string(ing.errors.size()) + " invalid field(s)";
    for (std::size_t i = 0; i < std::min<std::size_t>(ing.errors.size(), 5); ++i) {
      const auto& f = ing.errors[i];
      message += "; ";
      if (f.row) message += "row " + std::to_string(f.row) + " ";
      if (!f.column.empty()) message += "column '" + f.column + "' ";
      message += f.message;
    }
    throw DataError(message);
  }
  if (ing.records.empty()) throw DataError("no data rows");
  if (covariate_names) *covariate_names = ing.covariate_names;
  return Dataset(std::move(ing.records));
}

Dataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema,
                     std::vector<std::string>* covariate_names) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file '" + path.string() + "'");
  return read_dataset(in, schema, covariate_names);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_dataset(std::ostream& out, const Dataset& data, const CsvSchema& schema) {
  std::vector<std::string> cov = schema.covariates;
  if (cov.empty())
    for (std::size_t c = 0; c < data.covariate_count(); ++c) cov.push_back("x" + std::to_string(c + 1));
  if (cov.size() != data.covariate_count())
    throw ConfigError("schema lists " + std::to_string(cov.size()) + " covariates, data has " +
                      std::to_string(data.covariate_count()));
  const std::string& missing = schema.missing_token;

  std::vector<std::string> header{schema.time, schema.event};
  if (!schema.subtype.empty()) header.push_back(schema.subtype);
  if (!schema.subtype_observed.empty()) header.push_back(schema.subtype_observed);
  if (!schema.aux.empty()) header.push_back(schema.aux);
  if (!schema.stratum.empty()) header.push_back(schema.stratum);
  header.insert(header.end(), cov.begin(), cov.end());
  write_csv_row(out, header);

  for (const auto& r : data.records()) {
    std::vector<std::string> row{format_double(r.time), r.event ? "1" : "0"};
    if (!schema.subtype.empty()) row.push_back(r.subtype ? std::to_string(*r.subtype) : missing);
    if (!schema.subtype_observed.empty()) row.push_back(r.subtype_observed ? "1" : "0");
    if (!schema.aux.empty()) row.push_back(r.aux ? std::to_string(*r.aux) : missing);
    if (!schema.stratum.empty()) row.push_back(std::to_string(r.stratum));
    for (double x : r.covariates) row.push_back(format_double(x));
    write_csv_row(out, row);
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ConfigError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace crmiss

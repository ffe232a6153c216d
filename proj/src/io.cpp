#include "msso/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace msso {
namespace {

using nlohmann::json;

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw Error("field '" + field + "': " + what);
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) field_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) field_error(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

Index count_field(const json& obj, const std::string& key) {
  const json& v = member(obj, key, "");
  if (!v.is_number_integer() || v.get<long long>() < 1) field_error(key, "expected a positive integer");
  return static_cast<Index>(v.get<long long>());
}

Complex complex_entry(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    field_error(path, "expected [re, im]");
  }
  const Complex z(v[0].get<double>(), v[1].get<double>());
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) field_error(path, "not finite");
  return z;
}

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "... at line L, column C: ..."
    throw Error(std::string("malformed JSON: ") + e.what());
  }
}

void check_format(const json& doc, const std::string& format) {
  const json& f = member(doc, "format", "");
  if (!f.is_string() || f.get<std::string>() != format) field_error("format", "expected \"" + format + "\"");
  const json& v = member(doc, "version", "");
  if (!v.is_number_integer() || v.get<int>() != 1) field_error("version", "expected 1");
}

std::string opt_double(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw Error("");
    return v;
  } catch (...) {
    throw Error(where + ": expected a number, got '" + s + "'");
  }
}

Index parse_index(const std::string& s, const std::string& where) {
  const double v = parse_number(s, where);
  if (v != std::floor(v) || v < 0) throw Error(where + ": expected a count, got '" + s + "'");
  return static_cast<Index>(v);
}

}  // namespace

MssoProblem problem_from_json(const std::string& text) {
  const json doc = parse_json(text);
  check_format(doc, "msso-problem");
  const Index m = count_field(doc, "M");
  const Index n = count_field(doc, "N");
  const Index p = count_field(doc, "P");

  const json& d_json = member(doc, "d", "");
  if (!d_json.is_array() || static_cast<Index>(d_json.size()) != m) {
    field_error("d", "expected an array of M = " + std::to_string(m) + " entries");
  }
  DenseVector d(m);
  for (Index i = 0; i < m; ++i) {
    d(i) = complex_entry(d_json[static_cast<std::size_t>(i)], "d[" + std::to_string(i) + "]");
  }

  const json& s_json = member(doc, "systems", "");
  if (!s_json.is_array() || static_cast<Index>(s_json.size()) != p) {
    field_error("systems", "expected an array of P = " + std::to_string(p) + " matrices");
  }
  std::vector<DenseMatrix> systems;
  for (Index k = 0; k < p; ++k) {
    const json& f = s_json[static_cast<std::size_t>(k)];
    const std::string path = "systems[" + std::to_string(k) + "]";
    if (!f.is_array() || static_cast<Index>(f.size()) != m) field_error(path, "expected M rows");
    DenseMatrix mat(m, n);
    for (Index i = 0; i < m; ++i) {
      const json& row = f[static_cast<std::size_t>(i)];
      const std::string rpath = path + "[" + std::to_string(i) + "]";
      if (!row.is_array() || static_cast<Index>(row.size()) != n) field_error(rpath, "expected N entries");
      for (Index j = 0; j < n; ++j) {
        mat(i, j) = complex_entry(row[static_cast<std::size_t>(j)], rpath + "[" + std::to_string(j) + "]");
      }
    }
    systems.push_back(std::move(mat));
  }
  return MssoProblem(std::move(d), std::move(systems));
}

std::string problem_to_json(const MssoProblem& p) {
  json doc;
  doc["format"] = "msso-problem";
  doc["version"] = 1;
  doc["M"] = p.M();
  doc["N"] = p.N();
  doc["P"] = p.P();
  json d = json::array();
  for (Index i = 0; i < p.M(); ++i) d.push_back(complex_json(p.observation()(i)));
  doc["d"] = std::move(d);
  json systems = json::array();
  for (const auto& f : p.systems()) {
    json rows = json::array();
    for (Index i = 0; i < f.rows(); ++i) {
      json row = json::array();
      for (Index j = 0; j < f.cols(); ++j) row.push_back(complex_json(f(i, j)));
      rows.push_back(std::move(row));
    }
    systems.push_back(std::move(rows));
  }
  doc["systems"] = std::move(systems);
  return doc.dump() + "\n";
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

MssoProblem read_problem(const std::filesystem::path& path) {
  try {
    return problem_from_json(read_text(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename onto " + path.string() + ": " + ec.message());
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string library_version() { return MSSO_VERSION; }

std::string solution_to_csv(const SolutionG& g) {
  std::string out = "n";
  for (Index p = 1; p <= g.cols(); ++p) {
    out += ",re_" + std::to_string(p) + ",im_" + std::to_string(p);
  }
  out += "\n";
  for (Index n = 0; n < g.rows(); ++n) {
    out += std::to_string(n + 1);
    for (Index p = 0; p < g.cols(); ++p) {
      out += "," + format_double(g(n, p).real()) + "," + format_double(g(n, p).imag());
    }
    out += "\n";
  }
  return out;
}

SolutionG solution_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error("solution CSV: empty");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "n" || header.size() % 2 != 1) throw Error("solution CSV line 1: bad header");
  const auto p = static_cast<Index>((header.size() - 1) / 2);
  std::vector<std::vector<Complex>> rows;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    const std::string where = "solution CSV line " + std::to_string(line_no);
    if (cells.size() != header.size()) throw Error(where + ": wrong column count");
    if (parse_index(cells[0], where) != static_cast<Index>(rows.size()) + 1) throw Error(where + ": rows out of order");
    std::vector<Complex> row;
    for (Index j = 0; j < p; ++j) {
      row.emplace_back(parse_number(cells[static_cast<std::size_t>(1 + 2 * j)], where),
                       parse_number(cells[static_cast<std::size_t>(2 + 2 * j)], where));
    }
    rows.push_back(std::move(row));
  }
  SolutionG g(static_cast<Index>(rows.size()), p);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    for (Index j = 0; j < p; ++j) g(static_cast<Index>(n), j) = rows[n][static_cast<std::size_t>(j)];
  }
  return g;
}

std::string report_to_json(const SolveReport& report, const std::map<std::string, double>& extras) {
  json doc;
  doc["format"] = "msso-report";
  doc["version"] = 1;
  doc["algorithm"] = report.algorithm;
  doc["initial_objective"] = report.initial_objective;
  doc["objective_trace"] = report.objective_trace;
  doc["iterations"] = report.iterations;
  doc["inner_iterations"] = report.inner_iterations;
  doc["converged"] = report.converged;
  doc["wall_time_seconds"] = report.wall_time_seconds;
  json selected = json::array();
  for (const Index n : report.selected.indices()) selected.push_back(n + 1);
  doc["selected"] = std::move(selected);
  json order = json::array();
  for (const Index n : report.selection_order) order.push_back(n + 1);
  doc["selection_order"] = std::move(order);
  for (const auto& [key, value] : extras) doc[key] = value;
  return doc.dump(2) + "\n";
}

std::string profile_to_text(const SparsityProfile& profile) {
  std::string out;
  for (const Index n : profile.indices()) out += std::to_string(n + 1) + "\n";
  return out;
}

std::string results_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = kResultsHeader;
  out += "\n";
  for (const auto& r : rows) {
    out += r.experiment + "," + r.algorithm + "," + std::to_string(r.M) + "," + std::to_string(r.N) + "," +
           std::to_string(r.P) + "," + std::to_string(r.K) + "," + opt_double(r.snr_db) + "," +
           opt_double(r.lambda) + "," + (r.trial ? std::to_string(*r.trial) : std::string("mean")) + "," +
           r.metric_name + "," + format_double(r.metric_value) + "\n";
  }
  return out;
}

std::string results_to_json(const std::vector<ResultRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json o;
    o["experiment"] = r.experiment;
    o["algorithm"] = r.algorithm;
    o["M"] = r.M;
    o["N"] = r.N;
    o["P"] = r.P;
    o["K"] = r.K;
    o["snr_db"] = r.snr_db ? json(*r.snr_db) : json(nullptr);
    o["lambda"] = r.lambda ? json(*r.lambda) : json(nullptr);
    o["trial"] = r.trial ? json(*r.trial) : json("mean");
    o["metric_name"] = r.metric_name;
    o["metric_value"] = r.metric_value;
    arr.push_back(std::move(o));
  }
  return arr.dump(1) + "\n";
}

std::vector<ResultRow> results_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw Error("results CSV line 1: bad header");
  std::vector<ResultRow> rows;
  Index line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = "results CSV line " + std::to_string(line_no);
    const auto c = split_csv(line);
    if (c.size() != 11) throw Error(where + ": expected 11 columns");
    ResultRow r;
    r.experiment = c[0];
    r.algorithm = c[1];
    if (r.experiment.empty() || r.algorithm.empty() || c[9].empty()) throw Error(where + ": empty name");
    r.M = parse_index(c[2], where);
    r.N = parse_index(c[3], where);
    r.P = parse_index(c[4], where);
    r.K = parse_index(c[5], where);
    if (!c[6].empty()) r.snr_db = parse_number(c[6], where);
    if (!c[7].empty()) r.lambda = parse_number(c[7], where);
    if (c[8] != "mean") r.trial = parse_index(c[8], where);
    r.metric_name = c[9];
    r.metric_value = parse_number(c[10], where);
    rows.push_back(std::move(r));
  }
  return rows;
}

double NoisyLambdaTable::lookup(double snr_db, Index k) const {
  for (const auto& e : entries) {
    if (e.snr_db == snr_db && e.K == k) return e.lambda;
  }
  throw Error("no tuned lambda for SNR " + format_double(snr_db) + " dB, K " + std::to_string(k));
}

NoisyLambdaTable noisy_lambdas_from_json(const std::string& text) {
  const json doc = parse_json(text);
  check_format(doc, "msso-noisy-lambdas");
  NoisyLambdaTable t;
  t.N = count_field(doc, "N");
  t.M = count_field(doc, "M");
  t.P = count_field(doc, "P");
  const json& entries = member(doc, "entries", "");
  if (!entries.is_array()) field_error("entries", "expected an array");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string path = "entries[" + std::to_string(i) + "]";
    const json& e = entries[i];
    LambdaTuning lt;
    const json& snr = member(e, "snr_db", path);
    const json& k = member(e, "K", path);
    const json& lambda = member(e, "lambda", path);
    if (!snr.is_number()) field_error(path + ".snr_db", "expected a number");
    if (!k.is_number_integer() || k.get<long long>() < 1) field_error(path + ".K", "expected a positive integer");
    if (!lambda.is_number() || lambda.get<double>() < 0) field_error(path + ".lambda", "expected a number >= 0");
    lt.snr_db = snr.get<double>();
    lt.K = static_cast<Index>(k.get<long long>());
    lt.lambda = lambda.get<double>();
    if (auto s = e.find("score"); s != e.end() && s->is_number()) lt.score = s->get<double>();
    t.entries.push_back(lt);
  }
  return t;
}

std::string noisy_lambdas_to_json(const NoisyLambdaTable& table) {
  json doc;
  doc["format"] = "msso-noisy-lambdas";
  doc["version"] = 1;
  doc["N"] = table.N;
  doc["M"] = table.M;
  doc["P"] = table.P;
  json entries = json::array();
  for (const auto& e : table.entries) {
    entries.push_back({{"snr_db", e.snr_db}, {"K", e.K}, {"lambda", e.lambda}, {"score", e.score}});
  }
  doc["entries"] = std::move(entries);
  return doc.dump(2) + "\n";
}

}  // namespace msso

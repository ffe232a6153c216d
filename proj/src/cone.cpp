#include "msso/cone.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace msso {
namespace {

using nlohmann::json;

Index row_offset(const ConeProgram& prog, Index n) { return 2 * prog.M + 3 + n * (2 * prog.P + 1); }

std::string quote_arg(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    if (ch == '\'') {
      out += "'\\''";
    } else {
      out += ch;
    }
  }
  return out + "'";
}

const char* kind_name(ConeKind kind) { return kind == ConeKind::orthant ? "orthant" : "soc"; }

}  // namespace

const VariableSlice& ConeProgram::slice(const std::string& name) const {
  for (const VariableSlice& s : variable_map) {
    if (s.name == name) return s;
  }
  throw Error("unknown variable slice: " + name);
}

ConeProgram build_socp(const MssoProblem& p, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error("lambda must be finite and >= 0");
  ConeProgram prog;
  prog.M = p.M();
  prog.N = p.N();
  prog.P = p.P();
  const Index m = p.M();
  const Index width = 2 * p.P() + 1;
  const Index n_vars = 2 * m + 3 + p.N() * width;
  const Index s_at = 0;
  const Index z_at = 1;
  const Index u_at = 2 * m + 1;
  const Index v_at = 2 * m + 2;

  prog.objective = RealVector::Zero(n_vars);
  prog.objective(s_at) = 0.5;
  prog.eq_matrix = RealMatrix::Zero(2 * m + 2, n_vars);
  prog.eq_rhs = RealVector::Zero(2 * m + 2);

  prog.variable_map.push_back({"s", s_at, 1});
  prog.variable_map.push_back({"z", z_at, 2 * m});
  prog.variable_map.push_back({"u", u_at, 1});
  prog.variable_map.push_back({"v", v_at, 1});
  prog.cones.push_back({ConeKind::orthant, s_at, 1, "s"});
  prog.cones.push_back({ConeKind::second_order, z_at, 2 * m + 2, "residual"});

  // z + F~ g~ = d~: real parts in rows 0..M-1, imaginary parts in rows M..2M-1.
  prog.eq_matrix.block(0, z_at, 2 * m, 2 * m).setIdentity();
  prog.eq_rhs.head(m) = p.observation().real();
  prog.eq_rhs.segment(m, m) = p.observation().imag();
  for (Index n = 0; n < p.N(); ++n) {
    const Index base = row_offset(prog, n);
    const std::string tag = std::to_string(n + 1);
    prog.variable_map.push_back({"g" + tag, base, 2 * p.P()});
    prog.variable_map.push_back({"t" + tag, base + 2 * p.P(), 1});
    prog.cones.push_back({ConeKind::second_order, base, width, "row " + tag});
    prog.objective(base + 2 * p.P()) = lambda;
    for (Index q = 0; q < p.P(); ++q) {
      const auto col = p.system(q).col(n);
      const Index re = base + 2 * q;
      prog.eq_matrix.block(0, re, m, 1) = col.real();
      prog.eq_matrix.block(0, re + 1, m, 1) = -col.imag();
      prog.eq_matrix.block(m, re, m, 1) = col.imag();
      prog.eq_matrix.block(m, re + 1, m, 1) = col.real();
    }
  }
  // u - s/2 = -1/2 and v - s/2 = 1/2 make v^2 - u^2 = s.
  prog.eq_matrix(2 * m, u_at) = 1.0;
  prog.eq_matrix(2 * m, s_at) = -0.5;
  prog.eq_rhs(2 * m) = -0.5;
  prog.eq_matrix(2 * m + 1, v_at) = 1.0;
  prog.eq_matrix(2 * m + 1, s_at) = -0.5;
  prog.eq_rhs(2 * m + 1) = 0.5;
  return prog;
}

RealVector embed_point(const MssoProblem& p, const SolutionG& g) {
  const DenseVector r = residual(p, g);
  const Index m = p.M();
  const Index width = 2 * p.P() + 1;
  RealVector x = RealVector::Zero(2 * m + 3 + p.N() * width);
  const double s = r.squaredNorm();
  x(0) = s;
  x.segment(1, m) = r.real();
  x.segment(1 + m, m) = r.imag();
  x(2 * m + 1) = 0.5 * (s - 1.0);
  x(2 * m + 2) = 0.5 * (s + 1.0);
  for (Index n = 0; n < p.N(); ++n) {
    const Index base = 2 * m + 3 + n * width;
    for (Index q = 0; q < p.P(); ++q) {
      x(base + 2 * q) = g(n, q).real();
      x(base + 2 * q + 1) = g(n, q).imag();
    }
    x(base + 2 * p.P()) = g.row(n).norm();
  }
  return x;
}

SolutionG extract_solution(const ConeProgram& prog, const RealVector& x) {
  if (x.size() != prog.n_vars()) {
    throw Error("extract_solution: length mismatch (expected " + std::to_string(prog.n_vars()) +
                ", got " + std::to_string(x.size()) + ")");
  }
  SolutionG g(prog.N, prog.P);
  for (Index n = 0; n < prog.N; ++n) {
    const Index base = row_offset(prog, n);
    for (Index q = 0; q < prog.P; ++q) g(n, q) = Complex(x(base + 2 * q), x(base + 2 * q + 1));
  }
  return g;
}

FeasibilityReport check_feasible(const ConeProgram& prog, const RealVector& x, double tol) {
  if (x.size() != prog.n_vars()) throw Error("check_feasible: length mismatch");
  FeasibilityReport rep;
  rep.max_eq_violation =
      prog.n_eq() > 0 ? (prog.eq_matrix * x - prog.eq_rhs).cwiseAbs().maxCoeff() : 0.0;
  rep.worst_cone_margin = -std::numeric_limits<double>::infinity();
  for (const ConeBlock& cone : prog.cones) {
    double margin;
    if (cone.kind == ConeKind::orthant) {
      margin = -x.segment(cone.offset, cone.size).minCoeff();
    } else {
      margin = x.segment(cone.offset, cone.size - 1).norm() - x(cone.offset + cone.size - 1);
    }
    if (margin > rep.worst_cone_margin) {
      rep.worst_cone_margin = margin;
      rep.worst_cone = cone.label;
    }
  }
  if (rep.worst_cone_margin > tol) rep.violated_cone = rep.worst_cone;
  rep.passed = rep.max_eq_violation <= tol && rep.worst_cone_margin <= tol;
  return rep;
}

std::string cone_program_to_json(const ConeProgram& prog) {
  json j;
  j["format"] = "msso-cone-program";
  j["version"] = 1;
  j["dims"] = {{"M", prog.M}, {"N", prog.N}, {"P", prog.P}};
  j["n_vars"] = prog.n_vars();
  j["objective"] = std::vector<double>(prog.objective.data(), prog.objective.data() + prog.n_vars());
  json triplets = json::array();
  for (Index c = 0; c < prog.eq_matrix.cols(); ++c) {
    for (Index r = 0; r < prog.eq_matrix.rows(); ++r) {
      if (prog.eq_matrix(r, c) != 0.0) triplets.push_back({r, c, prog.eq_matrix(r, c)});
    }
  }
  j["eq_matrix"] = {{"rows", prog.n_eq()}, {"cols", prog.n_vars()}, {"triplets", triplets}};
  j["eq_rhs"] = std::vector<double>(prog.eq_rhs.data(), prog.eq_rhs.data() + prog.n_eq());
  json cones = json::array();
  for (const ConeBlock& c : prog.cones) {
    cones.push_back({{"kind", kind_name(c.kind)}, {"offset", c.offset}, {"size", c.size},
                     {"label", c.label}});
  }
  j["cones"] = cones;
  json vars = json::array();
  for (const VariableSlice& s : prog.variable_map) {
    vars.push_back({{"name", s.name}, {"offset", s.offset}, {"size", s.size}});
  }
  j["variable_map"] = vars;
  return j.dump();
}

ConeProgram cone_program_from_json(const std::string& text) {
  ConeProgram prog;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "msso-cone-program") throw Error("cone program: unexpected format");
    prog.M = j.at("dims").at("M").get<Index>();
    prog.N = j.at("dims").at("N").get<Index>();
    prog.P = j.at("dims").at("P").get<Index>();
    const auto obj = j.at("objective").get<std::vector<double>>();
    prog.objective = Eigen::Map<const RealVector>(obj.data(), static_cast<Index>(obj.size()));
    const auto rhs = j.at("eq_rhs").get<std::vector<double>>();
    prog.eq_rhs = Eigen::Map<const RealVector>(rhs.data(), static_cast<Index>(rhs.size()));
    const auto& eq = j.at("eq_matrix");
    prog.eq_matrix = RealMatrix::Zero(eq.at("rows").get<Index>(), eq.at("cols").get<Index>());
    for (const auto& t : eq.at("triplets")) {
      prog.eq_matrix(t.at(0).get<Index>(), t.at(1).get<Index>()) = t.at(2).get<double>();
    }
    for (const auto& c : j.at("cones")) {
      const std::string kind = c.at("kind");
      if (kind != "orthant" && kind != "soc") throw Error("cone program: unknown cone kind " + kind);
      prog.cones.push_back({kind == "orthant" ? ConeKind::orthant : ConeKind::second_order,
                            c.at("offset").get<Index>(), c.at("size").get<Index>(),
                            c.at("label").get<std::string>()});
    }
    for (const auto& s : j.at("variable_map")) {
      prog.variable_map.push_back(
          {s.at("name").get<std::string>(), s.at("offset").get<Index>(), s.at("size").get<Index>()});
    }
  } catch (const json::exception& e) {
    throw Error(std::string("cone program: ") + e.what());
  }
  return prog;
}

ConeSolveOutcome ExternalConeSolver::solve(const ConeProgram& prog) const {
  namespace fs = std::filesystem;
  std::random_device rd;
  const fs::path dir = fs::temp_directory_path() /
                       ("msso-cone-" + std::to_string(rd()) + "-" + std::to_string(rd()));
  fs::create_directories(dir);
  const fs::path in = dir / "program.json";
  const fs::path out_path = dir / "solution.json";
  {
    std::ofstream f(in);
    f << cone_program_to_json(prog);
  }
  const std::string cmd = quote_arg(executable_) + " " + quote_arg(in.string()) + " " +
                          quote_arg(out_path.string()) + " > /dev/null 2>&1";
  const int code = std::system(cmd.c_str());
  ConeSolveOutcome outcome;
  outcome.status = "adapter_failed";
  if (code == 0 && fs::exists(out_path)) {
    std::ifstream f(out_path);
    std::stringstream buf;
    buf << f.rdbuf();
    try {
      const json j = json::parse(buf.str());
      outcome.status = j.at("status").get<std::string>();
      const auto x = j.at("x").get<std::vector<double>>();
      outcome.x = Eigen::Map<const RealVector>(x.data(), static_cast<Index>(x.size()));
      if (j.contains("iterations")) outcome.iterations = j.at("iterations").get<Index>();
      outcome.ok = (outcome.status == "optimal" || outcome.status == "optimal_inaccurate") &&
                   outcome.x.size() == prog.n_vars();
    } catch (const json::exception&) {
      outcome.status = "adapter_bad_output";
    }
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  return outcome;
}

std::unique_ptr<ConeSolverAdapter> adapter_from_environment() {
  const char* value = std::getenv(kConeSolverEnv);
  if (!value || std::string(value).empty()) return nullptr;
  if (std::string(value) == "native") return std::make_unique<NativeConeSolver>();
  return std::make_unique<ExternalConeSolver>(value);
}

SolveResult run_socp(const MssoProblem& p, double lambda, const ConeSolverAdapter& adapter) {
  Stopwatch clock;
  const ConeProgram prog = build_socp(p, lambda);
  const ConeSolveOutcome outcome = adapter.solve(prog);
  if (!outcome.ok) throw Error("cone solver " + adapter.name() + " failed: " + outcome.status);
  const double scale = 1.0 + prog.eq_rhs.cwiseAbs().maxCoeff();
  const FeasibilityReport feas = check_feasible(prog, outcome.x, 1e-6 * scale);
  if (!feas.passed) {
    throw Error("cone solver " + adapter.name() + " returned an infeasible point (cone " +
                feas.worst_cone + ")");
  }
  SolveResult res;
  res.g = extract_solution(prog, outcome.x);
  res.report.algorithm = "socp";
  res.report.initial_objective = 0.5 * p.observation().squaredNorm();
  res.report.objective_trace.push_back(objective(p, res.g, lambda));
  res.report.iterations = 1;
  res.report.inner_iterations = outcome.iterations;
  res.report.converged = true;
  res.report.selected = profile_of(res.g, p.N());
  res.report.wall_time_seconds = clock.seconds();
  return res;
}

}  // namespace msso

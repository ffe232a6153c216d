#pragma once

#include <memory>
#include <string>
#include <vector>

#include "msso/model.hpp"
#include "msso/report.hpp"

// Second-order cone form of the relaxed objective.
//
// Variable layout:
//   [ s | z (2M: real parts then imaginary parts) | u | v |
//     row 1: Re g_1[1], Im g_1[1], ..., Re g_P[1], Im g_P[1], t_1 | ... | row N ]
// Cones, in order: the orthant {s >= 0}; the residual cone |[z; u]| <= v; one
// cone |[Re g_1[n], Im g_1[n], ..., Im g_P[n]]| <= t_n per row. Second-order cone
// blocks list the head entries first and the bounding entry last.
// Equalities: z + F~ g~ = d~, u - s/2 = -1/2, v - s/2 = 1/2. Objective: s/2 + lambda sum t_n.

namespace msso {

enum class ConeKind { orthant, second_order };

struct ConeBlock {
  ConeKind kind = ConeKind::orthant;
  Index offset = 0;
  Index size = 0;
  std::string label;
};

struct VariableSlice {
  std::string name;
  Index offset = 0;
  Index size = 0;
};

struct ConeProgram {
  RealVector objective;
  RealMatrix eq_matrix;
  RealVector eq_rhs;
  std::vector<ConeBlock> cones;
  std::vector<VariableSlice> variable_map;
  Index M = 0;
  Index N = 0;
  Index P = 0;

  Index n_vars() const { return objective.size(); }
  Index n_eq() const { return eq_rhs.size(); }
  /// Throws if the name is unknown.
  const VariableSlice& slice(const std::string& name) const;
  double objective_value(const RealVector& x) const { return objective.dot(x); }
};

ConeProgram build_socp(const MssoProblem& p, double lambda);

/// Feasible point carrying G: z is the residual, s = |z|^2, u = (s-1)/2,
/// v = (s+1)/2, t_n the row norms.
RealVector embed_point(const MssoProblem& p, const SolutionG& g);

SolutionG extract_solution(const ConeProgram& prog, const RealVector& x);

struct FeasibilityReport {
  double max_eq_violation = 0.0;
  // Largest |head| - tail over second-order cones and -x over orthant entries.
  double worst_cone_margin = 0.0;
  std::string worst_cone;
  bool passed = false;
  // Label of the cone exceeding tol, empty if none.
  std::string violated_cone;
};

FeasibilityReport check_feasible(const ConeProgram& prog, const RealVector& x, double tol);

/// Structured-text form: objective, triplet equality matrix, rhs, cones, variable map.
std::string cone_program_to_json(const ConeProgram& prog);
ConeProgram cone_program_from_json(const std::string& text);

struct ConeSolveOutcome {
  bool ok = false;
  std::string status;
  RealVector x;
  Index iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

class ConeSolverAdapter {
 public:
  virtual ~ConeSolverAdapter() = default;
  virtual std::string name() const = 0;
  virtual ConeSolveOutcome solve(const ConeProgram& prog) const = 0;
};

struct InteriorPointOptions {
  double tol = 1e-9;
  Index max_iter = 100;
};

/// Dense primal-dual interior-point method with Nesterov-Todd scaling and
/// Mehrotra predictor-corrector steps.
class NativeConeSolver : public ConeSolverAdapter {
 public:
  explicit NativeConeSolver(InteriorPointOptions opts = {}) : opts_(opts) {}
  std::string name() const override { return "native"; }
  ConeSolveOutcome solve(const ConeProgram& prog) const override;

 private:
  InteriorPointOptions opts_;
};

/// Runs `<executable> <program.json> <solution.json>`; the solution file holds
/// {"status": ..., "x": [...]}. Status "optimal" counts as success.
class ExternalConeSolver : public ConeSolverAdapter {
 public:
  explicit ExternalConeSolver(std::string executable) : executable_(std::move(executable)) {}
  std::string name() const override { return executable_; }
  ConeSolveOutcome solve(const ConeProgram& prog) const override;

 private:
  std::string executable_;
};

inline constexpr const char* kConeSolverEnv = "MSSO_CONE_SOLVER";

/// Adapter named by MSSO_CONE_SOLVER: "native" or an executable path. Null when unset.
std::unique_ptr<ConeSolverAdapter> adapter_from_environment();

/// Builds the program, solves it, checks feasibility and maps the result back to G.
SolveResult run_socp(const MssoProblem& p, double lambda, const ConeSolverAdapter& adapter);

}  // namespace msso

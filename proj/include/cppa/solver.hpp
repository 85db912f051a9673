// Bounded-variable primal revised simplex with dual extraction, and a
// best-bound branch-and-bound for models with binary variables.
//
// The simplex works on the model as stated (maximization). Every row i gets
// a logical variable s_i with a_i x + s_i = rhs_i, bounded by the row sense.
// The basis inverse is kept dense and refactorized periodically, which
// suits the desk-scale cases this engine targets.
//
// Dual convention: duals[i] is d(objective)/d(rhs_i) at the terminal basis.
// For a maximization model a binding <= row has a nonnegative dual.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cppa/model.hpp"

namespace cppa {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a basis cannot be factorized; `row` is the row left without a
// usable pivot.
class SingularBasisError : public SolverError {
 public:
  SingularBasisError(const std::string& what, int row) : SolverError(what), row(row) {}
  int row;
};

class NodeLimitError : public SolverError {
 public:
  using SolverError::SolverError;
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };
const char* to_string(LpStatus status);

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper, Free };

// Status per structural variable and per row logical. Used as a warm-start
// hint; rows beyond the hint's length start with a basic logical.
struct Basis {
  std::vector<VarStatus> columns;
  std::vector<VarStatus> rows;

  bool empty() const { return columns.empty() && rows.empty(); }
};

struct LpOptions {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-7;
  double pivot_tol = 1e-9;
  // 0 means 50 * (rows + columns).
  long iteration_limit = 0;
  int refactor_interval = 64;
  // Consecutive degenerate pivots before switching to Bland's rule.
  int bland_after = 40;
  bool allow_bland = true;
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> primal;
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  double objective = 0.0;
  Basis basis;
  long iterations = 0;
  bool used_bland = false;
};

LpSolution solve_lp(const ModelIR& model, const Basis* hint = nullptr, const LpOptions& options = {});

// Largest violations of the optimality conditions of an LP solution, with
// dual quantities measured relative to the largest objective coefficient.
struct KktReport {
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
};
KktReport check_kkt(const ModelIR& model, const LpSolution& solution);

enum class MilpStatus { Optimal, Infeasible, GapLimit };
const char* to_string(MilpStatus status);

struct MilpOptions {
  double gap_tol = 1e-6;
  long node_limit = 1'000'000;
  double integrality_tol = 1e-6;
  LpOptions lp;
};

struct MilpSolution {
  MilpStatus status = MilpStatus::Infeasible;
  std::vector<double> primal;
  double objective = 0.0;
  double bound = 0.0;
  long nodes = 0;
};

// Branches on the most fractional binary (ties: lowest variable id), up
// branch first, and explores open nodes best bound first (ties: oldest).
// Reaching the node limit without an incumbent throws NodeLimitError; with
// one, the result is GapLimit.
MilpSolution solve_milp(const ModelIR& model, const MilpOptions& options = {});

// Pins every binary to the (integral) value in `values`, indexed by
// variable, and clears the binary flags.
ModelIR fix_binaries(const ModelIR& model, const std::vector<double>& values, double tol = 1e-6);

void write_basis(const ModelIR& model, const Basis& basis, std::ostream& out);

}  // namespace cppa

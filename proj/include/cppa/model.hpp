// Solver-independent optimization models for the welfare problem.
//
// Two builders share the agent blocks:
//   build_cp_welfare  - linear rows of the Jabr relaxation; the rotated-cone
//                       and current-limit inequalities are registered as cone
//                       descriptors only, to be outer-approximated by cuts.
//   build_dc_welfare  - lossless B-theta approximation, active power only.
//
// Size of the CP model (E = in-service branches, S = bid segments):
//   variables = |B| + 6|E| + sum_g (5 + S_g) + sum_l (2 + S_l)
//   rows      = 2|B| + 4|E| + 7|G| + 2|L|
//   cones     = 3|E|
// Size of the DC model:
//   variables = (|B| - 1) + |E| + sum_g (4 + S_g) + sum_l (1 + S_l)
//   rows      = |B| + 3|E| + 5|G| + |L|

#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cppa/netio.hpp"

namespace cppa {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { LessEqual, Equal, GreaterEqual };

struct Term {
  int var = 0;
  double coef = 0.0;

  bool operator==(const Term&) const = default;
};

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  double objective = 0.0;  // maximization coefficient, $ per unit
  bool binary = false;
};

struct Row {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::Equal;
  double rhs = 0.0;
};

enum class ConeKind { JabrRotated = 0, CurrentLimitFrom = 1, CurrentLimitTo = 2 };

const char* to_string(ConeKind kind);
ConeKind cone_kind_from_string(const std::string& text);

// JabrRotated:      vars = (c, s, v2_from, v2_to),  c^2 + s^2 <= v2_from * v2_to
// CurrentLimitFrom: vars = (P_from, Q_from, v2_from), P^2 + Q^2 <= multiplier * v2
// CurrentLimitTo:   vars = (P_to, Q_to, v2_to)
struct ConeDescriptor {
  ConeKind kind = ConeKind::JabrRotated;
  int branch_id = 0;
  std::array<int, 4> vars{-1, -1, -1, -1};
  double multiplier = 1.0;

  int arity() const { return kind == ConeKind::JabrRotated ? 4 : 3; }
};

struct BusVars {
  int v2 = -1;     // CP only
  int theta = -1;  // DC only; -1 at the reference bus
  int p_balance = -1;
  int q_balance = -1;  // CP only
};

struct GeneratorVars {
  int p = -1, q = -1;
  int on = -1, su = -1, sd = -1;
  std::vector<int> segments;
};

struct LoadVars {
  int p = -1, q = -1;
  std::vector<int> segments;
};

// DC models only fill p_from. Out-of-service branches keep every id at -1.
struct BranchVars {
  int c = -1, s = -1;
  int p_from = -1, q_from = -1;
  int p_to = -1, q_to = -1;
};

struct ModelIndex {
  std::vector<BusVars> buses;  // aligned with CaseData::buses
  std::vector<GeneratorVars> generators;
  std::vector<LoadVars> loads;
  std::vector<BranchVars> branches;
};

enum class Formulation { CutPlane, DC };

struct ModelIR {
  Formulation formulation = Formulation::CutPlane;
  double base_mva = 100.0;
  std::vector<Variable> variables;
  std::vector<Row> rows;
  std::vector<ConeDescriptor> cones;
  ModelIndex index;

  int add_variable(std::string name, double lower, double upper, double objective = 0.0, bool binary = false);
  int add_row(std::string name, std::vector<Term> terms, Sense sense, double rhs);

  std::size_t binary_count() const;
  // Throws ModelError on dangling variable references or bad bounds.
  void validate() const;
};

// Adds the commitment binaries, output variables, PWL cost segments and
// their linking rows. `reactive` controls the q variable and its rows.
GeneratorVars build_generator_block(const Generator& gen, double base_mva, bool reactive, ModelIR& model);
LoadVars build_load_block(const Load& load, double base_mva, bool reactive, ModelIR& model);

ModelIR build_cp_welfare(const CaseData& data);
ModelIR build_dc_welfare(const CaseData& data);

// Writes the model in CPLEX LP text layout.
void write_lp(const ModelIR& model, std::ostream& out);

// Evaluates a PWL bid at quantity p (p.u.) and returns the integral of the
// segment prices, in $/MWh * p.u. (multiply by base_mva for $).
double evaluate_bid(const std::vector<BidSegment>& segments, double pmax, double p);

}  // namespace cppa

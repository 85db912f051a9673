#include <algorithm>
#include <cmath>
#include <queue>

#include "cppa/solver.hpp"

namespace cppa {

const char* to_string(MilpStatus status) {
  switch (status) {
    case MilpStatus::Optimal:
      return "Optimal";
    case MilpStatus::Infeasible:
      return "Infeasible";
    case MilpStatus::GapLimit:
      return "GapLimit";
  }
  return "?";
}

namespace {

struct Node {
  long id = 0;
  double bound = 0.0;  // objective of the parent relaxation
  std::vector<std::pair<int, double>> fixings;
  Basis hint;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.id > b.id;
  }
};

double relative_gap(double bound, double incumbent) {
  return (bound - incumbent) / std::max(1.0, std::abs(incumbent));
}

}  // namespace

MilpSolution solve_milp(const ModelIR& model, const MilpOptions& options) {
  std::vector<int> binaries;
  for (std::size_t j = 0; j < model.variables.size(); ++j) {
    const auto& v = model.variables[j];
    if (!v.binary) continue;
    if (v.lower < 0.0 || v.upper > 1.0) {
      throw SolverError("binary variable " + v.name + " must be bounded in [0, 1]");
    }
    binaries.push_back(static_cast<int>(j));
  }

  MilpSolution out;
  ModelIR work = model;
  for (auto& v : work.variables) v.binary = false;

  bool have_incumbent = false;
  double incumbent = -kInf;
  long next_id = 0;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  open.push({next_id++, kInf, {}, {}});

  auto open_bound = [&]() { return open.empty() ? -kInf : open.top().bound; };

  while (!open.empty()) {
    if (have_incumbent && relative_gap(open_bound(), incumbent) <= options.gap_tol) break;
    if (out.nodes >= options.node_limit) {
      if (!have_incumbent) throw NodeLimitError("branch-and-bound node limit reached without an incumbent");
      out.status = MilpStatus::GapLimit;
      out.bound = std::max(incumbent, open_bound());
      return out;
    }
    Node node = open.top();
    open.pop();
    if (have_incumbent && relative_gap(node.bound, incumbent) <= options.gap_tol) continue;
    ++out.nodes;

    for (const auto& [var, value] : node.fixings) {
      work.variables[static_cast<std::size_t>(var)].lower = value;
      work.variables[static_cast<std::size_t>(var)].upper = value;
    }
    LpSolution lp = solve_lp(work, node.hint.empty() ? nullptr : &node.hint, options.lp);
    for (const auto& [var, value] : node.fixings) {
      work.variables[static_cast<std::size_t>(var)].lower = model.variables[static_cast<std::size_t>(var)].lower;
      work.variables[static_cast<std::size_t>(var)].upper = model.variables[static_cast<std::size_t>(var)].upper;
    }
    if (lp.status == LpStatus::Infeasible) continue;
    if (lp.status == LpStatus::Unbounded) throw SolverError("branch-and-bound: unbounded relaxation");
    if (lp.status == LpStatus::IterationLimit) throw SolverError("branch-and-bound: LP iteration limit");
    if (have_incumbent && relative_gap(lp.objective, incumbent) <= options.gap_tol) continue;

    // Most fractional binary; ties to the lowest variable id.
    int branch_var = -1;
    double best_frac = options.integrality_tol;
    for (int j : binaries) {
      const double x = lp.primal[static_cast<std::size_t>(j)];
      const double frac = std::min(x - std::floor(x), std::ceil(x) - x);
      if (frac > best_frac + 1e-12) {
        best_frac = frac;
        branch_var = j;
      }
    }
    if (branch_var < 0) {
      if (!have_incumbent || lp.objective > incumbent) {
        have_incumbent = true;
        incumbent = lp.objective;
        out.primal = lp.primal;
        for (int j : binaries) {
          out.primal[static_cast<std::size_t>(j)] = std::round(out.primal[static_cast<std::size_t>(j)]);
        }
        out.objective = lp.objective;
      }
      continue;
    }
    for (double value : {1.0, 0.0}) {
      Node child;
      child.id = next_id++;
      child.bound = lp.objective;
      child.fixings = node.fixings;
      child.fixings.emplace_back(branch_var, value);
      child.hint = lp.basis;
      open.push(std::move(child));
    }
  }

  if (!have_incumbent) {
    out.status = MilpStatus::Infeasible;
    return out;
  }
  out.status = MilpStatus::Optimal;
  out.bound = std::max(incumbent, open_bound());
  return out;
}

ModelIR fix_binaries(const ModelIR& model, const std::vector<double>& values, double tol) {
  if (values.size() != model.variables.size()) {
    throw SolverError("fix_binaries: assignment size does not match the model");
  }
  ModelIR out = model;
  for (std::size_t j = 0; j < out.variables.size(); ++j) {
    auto& v = out.variables[j];
    if (!v.binary) continue;
    const double rounded = std::round(values[j]);
    if (std::abs(values[j] - rounded) > tol || (rounded != 0.0 && rounded != 1.0)) {
      throw SolverError("fix_binaries: non-integral value for " + v.name);
    }
    v.lower = rounded;
    v.upper = rounded;
    v.binary = false;
  }
  return out;
}

}  // namespace cppa

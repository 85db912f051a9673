#include "cppa/pricing.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <tuple>

namespace cppa {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double at(const std::vector<double>& x, int var) { return var >= 0 ? x[static_cast<std::size_t>(var)] : 0.0; }

std::optional<double> opt_at(const std::vector<double>& x, int var) {
  if (var < 0) return std::nullopt;
  return x[static_cast<std::size_t>(var)];
}

// Identity of a cut row across rounds, for carrying row statuses into the
// next basis hint.
using CutKey = std::tuple<int, int, int, double, double>;
CutKey key_of(const Cut& c) { return {c.branch_id, static_cast<int>(c.kind), c.birth_round, c.coef[0], c.rhs}; }

// Translates the basis of the last solve (base rows followed by the cuts in
// `solved`) onto base rows followed by the cuts in `next`. New cut rows
// start with a basic logical.
Basis carry_basis(const Basis& last, std::size_t base_rows, const std::vector<Cut>& solved,
                  const std::vector<Cut>& next) {
  Basis hint;
  hint.columns = last.columns;
  hint.rows.assign(last.rows.begin(), last.rows.begin() + static_cast<long>(base_rows));
  std::map<CutKey, VarStatus> status;
  for (std::size_t i = 0; i < solved.size() && base_rows + i < last.rows.size(); ++i) {
    status.emplace(key_of(solved[i]), last.rows[base_rows + i]);
  }
  for (const auto& cut : next) {
    auto it = status.find(key_of(cut));
    hint.rows.push_back(it == status.end() ? VarStatus::Basic : it->second);
  }
  return hint;
}

double stall_threshold(double z0, double ftol) {
  if (std::isinf(ftol)) return kInf;
  return std::max(std::abs(z0) * ftol, 1e-9);
}

void mark_infeasible(PricingResult& result, const char* why) {
  result.status = PricingStatus::Infeasible;
  result.termination = why;
  result.prices_p.clear();
  result.prices_q.clear();
}

}  // namespace

const char* to_string(PricingRule rule) { return rule == PricingRule::IP ? "ip" : "ch"; }

const char* to_string(PricingStatus status) {
  switch (status) {
    case PricingStatus::Optimal:
      return "Optimal";
    case PricingStatus::Infeasible:
      return "Infeasible";
    case PricingStatus::TimeLimit:
      return "TimeLimit";
  }
  return "?";
}

void CppaConfig::validate() const {
  if (!(time_limit_s > 0.0)) throw ConfigError("time limit must be positive");
  if (ftol_rounds < 1) throw ConfigError("ftol rounds must be at least 1");
  if (!(ftol > 0.0)) throw ConfigError("ftol must be positive");
  if (t_age < 1) throw ConfigError("t_age must be at least 1");
  if (!(eps_viol >= 0.0)) throw ConfigError("eps_viol must be nonnegative");
  if (!(eps_par >= 0.0 && eps_par < 1.0)) throw ConfigError("eps_par must lie in [0, 1)");
  if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in (0, 1]");
  if (max_cuts < 1) throw ConfigError("max cuts per round must be at least 1");
  if (max_rounds < 1) throw ConfigError("max rounds must be at least 1");
  if (!(milp_gap >= 0.0)) throw ConfigError("milp gap must be nonnegative");
}

std::vector<double> PricingResult::objective_trace() const {
  std::vector<double> out;
  out.reserve(rounds.size());
  for (const auto& r : rounds) out.push_back(r.objective);
  return out;
}

std::pair<std::vector<double>, std::vector<double>> extract_prices(const LpSolution& solution,
                                                                   const ModelIR& model, double base_mva) {
  if (solution.status != LpStatus::Optimal) throw SolverError("prices need an optimal LP solution");
  std::vector<double> p, q;
  const bool reactive = std::any_of(model.index.buses.begin(), model.index.buses.end(),
                                    [](const BusVars& b) { return b.q_balance >= 0; });
  for (const auto& bus : model.index.buses) {
    if (bus.p_balance < 0 || static_cast<std::size_t>(bus.p_balance) >= solution.duals.size()) {
      throw ModelError("missing active balance row");
    }
    p.push_back(solution.duals[static_cast<std::size_t>(bus.p_balance)] / base_mva);
    if (reactive) {
      if (bus.q_balance < 0) throw ModelError("missing reactive balance row");
      q.push_back(solution.duals[static_cast<std::size_t>(bus.q_balance)] / base_mva);
    }
  }
  return {std::move(p), std::move(q)};
}

Allocation extract_allocation(const CaseData& data, const ModelIR& model, const std::vector<double>& x) {
  Allocation a;
  const auto& ix = model.index;
  for (std::size_t i = 0; i < data.generators.size(); ++i) {
    const auto& v = ix.generators[i];
    a.generators.push_back({data.generators[i].id, at(x, v.p), at(x, v.q), at(x, v.on), at(x, v.su), at(x, v.sd)});
  }
  for (std::size_t i = 0; i < data.loads.size(); ++i) {
    const auto& v = ix.loads[i];
    a.loads.push_back({data.loads[i].id, at(x, v.p), at(x, v.q)});
  }
  const bool dc = model.formulation == Formulation::DC;
  for (std::size_t i = 0; i < data.branches.size(); ++i) {
    const auto& v = ix.branches[i];
    if (v.p_from < 0) continue;
    BranchFlow f;
    f.id = data.branches[i].id;
    f.p_from = at(x, v.p_from);
    f.p_to = dc ? -f.p_from : at(x, v.p_to);
    f.q_from = at(x, v.q_from);
    f.q_to = at(x, v.q_to);
    f.c = opt_at(x, v.c);
    f.s = opt_at(x, v.s);
    a.branches.push_back(f);
  }
  for (std::size_t k = 0; k < data.buses.size(); ++k) {
    const auto& v = ix.buses[k];
    BusState s;
    s.id = data.buses[k].id;
    s.v2 = opt_at(x, v.v2);
    if (dc) s.theta = v.theta >= 0 ? at(x, v.theta) : 0.0;
    a.buses.push_back(s);
  }
  return a;
}

PricingResult run_pricing(const CaseData& data, const ModelIR& base, const CppaConfig& config, CutPool pool) {
  config.validate();
  PricingResult result;
  const auto start = Clock::now();
  if (data.islanded) {
    mark_infeasible(result, "islanded");
    result.pool = std::move(pool);
    return result;
  }

  const SelectionConfig selection{config.eps_viol, config.rho, config.max_cuts};
  std::optional<LpSolution> last;
  ModelIR solved_model;
  std::vector<Cut> solved_cuts;
  double z0 = 0.0;
  int stall = 0;
  std::string termination;

  for (int round = 1;; ++round) {
    if (last && seconds_since(start) >= config.time_limit_s) {
      termination = "time_limit";
      break;
    }
    ModelIR model = pool.with_cuts(base);
    std::vector<Cut> round_cuts = pool.cuts();
    Basis hint;
    if (last && config.warm_basis) hint = carry_basis(last->basis, base.rows.size(), solved_cuts, pool.cuts());
    auto t0 = Clock::now();
    LpSolution sol = solve_lp(model, hint.empty() ? nullptr : &hint, config.lp);
    result.time_lp += seconds_since(t0);
    if (sol.status != LpStatus::Optimal) {
      if (sol.status == LpStatus::IterationLimit) throw SolverError("LP iteration limit reached in round " + std::to_string(round));
      mark_infeasible(result, sol.status == LpStatus::Infeasible ? "infeasible" : "unbounded");
      result.pool = std::move(pool);
      return result;
    }

    RoundStats stats;
    stats.round = round;
    stats.objective = sol.objective;
    stats.lp_iterations = sol.iterations;
    stats.prices_p = extract_prices(sol, model, data.base_mva).first;

    // z0 starts at 0, so round 1 is compared too.
    if (std::abs(z0 - sol.objective) < stall_threshold(z0, config.ftol)) {
      ++stall;
    } else {
      stall = 0;
    }
    z0 = sol.objective;

    t0 = Clock::now();
    const auto scores = score_cones(sol.primal, base.cones, config.execution);
    std::vector<ConeViolation> violations;
    violations.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      violations.push_back({static_cast<int>(i), scores[i]});
      stats.max_violation = std::max(stats.max_violation, scores[i]);
    }
    const auto selected = select_cuts(std::move(violations), selection);
    stats.violated = static_cast<int>(selected.size());
    if (!selected.empty()) {
      for (auto& cut : build_cuts(sol.primal, base.cones, selected, config.eps_viol, config.execution)) {
        if (cut) pool.admit(std::move(*cut), round, config.eps_par);
      }
      pool.prune_aged(base, sol.primal, round, config.t_age);
      const auto& h = pool.history();
      if (!h.empty() && h.back().round == round) {
        stats.added = h.back().added;
        stats.dropped_parallel = h.back().dropped_parallel;
        stats.dropped_aged = h.back().dropped_aged;
      }
    }
    stats.pool_size = pool.size();
    result.time_cut += seconds_since(t0);
    result.rounds.push_back(std::move(stats));

    solved_cuts = std::move(round_cuts);
    solved_model = std::move(model);
    last = std::move(sol);

    if (selected.empty()) {
      termination = "converged";
      break;
    }
    if (stall >= config.ftol_rounds) {
      termination = "stalled";
      break;
    }
    if (round >= config.max_rounds) {
      termination = "max_rounds";
      break;
    }
  }
  result.termination = termination;
  result.status = termination == "time_limit" ? PricingStatus::TimeLimit : PricingStatus::Optimal;

  LpSolution final_sol = std::move(*last);
  ModelIR final_model = std::move(solved_model);
  if (config.rule == PricingRule::IP) {
    ModelIR milp_model = pool.with_cuts(base);
    MilpOptions mopts;
    mopts.gap_tol = config.milp_gap;
    mopts.lp = config.lp;
    auto t0 = Clock::now();
    MilpSolution milp = solve_milp(milp_model, mopts);
    result.milp_nodes = milp.nodes;
    if (milp.status == MilpStatus::Infeasible) {
      result.time_lp += seconds_since(t0);
      mark_infeasible(result, "infeasible");
      result.pool = std::move(pool);
      return result;
    }
    final_model = fix_binaries(milp_model, milp.primal);
    final_sol = solve_lp(final_model, nullptr, config.lp);
    result.time_lp += seconds_since(t0);
    if (final_sol.status != LpStatus::Optimal) {
      mark_infeasible(result, "infeasible");
      result.pool = std::move(pool);
      return result;
    }
  }

  result.objective = final_sol.objective;
  std::tie(result.prices_p, result.prices_q) = extract_prices(final_sol, final_model, data.base_mva);
  result.allocation = extract_allocation(data, final_model, final_sol.primal);
  result.primal = std::move(final_sol.primal);
  result.final_basis = std::move(final_sol.basis);
  result.final_model = std::move(final_model);
  result.pool = std::move(pool);
  return result;
}

PricingResult run_cppa(const CaseData& data, const CppaConfig& config, const CutPool* warm_cuts) {
  config.validate();
  if (data.islanded) {
    PricingResult result;
    mark_infeasible(result, "islanded");
    if (warm_cuts) result.pool = *warm_cuts;
    return result;
  }
  return run_pricing(data, build_cp_welfare(data), config, warm_cuts ? *warm_cuts : CutPool{});
}

PricingResult run_dc(const CaseData& data, const CppaConfig& config) {
  config.validate();
  if (data.islanded) {
    PricingResult result;
    mark_infeasible(result, "islanded");
    return result;
  }
  return run_pricing(data, build_dc_welfare(data), config);
}

}  // namespace cppa

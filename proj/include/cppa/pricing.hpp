// The cutting-plane pricing loop: solve the LP over the linear model plus the
// cut pool, separate violated cones, manage the pool, repeat until nothing
// is violated, the objective stalls, or the clock runs out. Prices are the
// balance-row duals of the final LP, after fixing commitments for the IP
// rule.
//
// Cutting always runs on the binary relaxation. The IP rule solves one MILP
// over the terminal pool at the end.

#pragma once

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cppa/cuts.hpp"
#include "cppa/econ.hpp"
#include "cppa/separation.hpp"
#include "cppa/solver.hpp"

namespace cppa {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class PricingRule { IP, CH };
const char* to_string(PricingRule rule);

struct CppaConfig {
  double time_limit_s = 300.0;
  int ftol_rounds = 3;
  // Relative stall threshold; +inf makes every round count as a stall.
  double ftol = 1e-5;
  int t_age = 5;  // kNeverAge disables aging
  double eps_viol = 1e-5;
  double eps_par = 1e-5;
  double rho = 1.0;
  std::size_t max_cuts = std::numeric_limits<std::size_t>::max();
  int max_rounds = std::numeric_limits<int>::max();
  PricingRule rule = PricingRule::CH;
  double milp_gap = 1e-6;
  Execution execution = Execution::Parallel;
  bool warm_basis = true;  // reuse the previous round's basis as a hint
  LpOptions lp;

  void validate() const;
};

enum class PricingStatus { Optimal, Infeasible, TimeLimit };
const char* to_string(PricingStatus status);

struct RoundStats {
  int round = 0;
  double objective = 0.0;
  double max_violation = 0.0;
  int violated = 0;
  int added = 0;
  int dropped_parallel = 0;
  int dropped_aged = 0;
  std::size_t pool_size = 0;  // after this round's pool updates
  long lp_iterations = 0;
  std::vector<double> prices_p;  // $/MWh from this round's LP duals
};

struct PricingResult {
  PricingStatus status = PricingStatus::Infeasible;
  // converged | stalled | max_rounds | time_limit | infeasible | islanded
  std::string termination;
  double objective = 0.0;          // $/h
  std::vector<double> prices_p;    // $/MWh per bus; empty unless prices were extracted
  std::vector<double> prices_q;    // $/MVArh per bus; empty for DC models
  Allocation allocation;
  std::vector<double> primal;
  std::vector<RoundStats> rounds;
  CutPool pool;
  double time_lp = 0.0;   // seconds in LP and MILP solves
  double time_cut = 0.0;  // seconds in separation and pool management
  long milp_nodes = 0;
  // The LP whose duals gave the prices, and its terminal basis.
  ModelIR final_model;
  Basis final_basis;

  bool has_prices() const { return !prices_p.empty(); }
  std::vector<double> objective_trace() const;
};

// Balance-row duals rescaled to $/MWh and $/MVArh. The second vector is
// empty when the model has no reactive balance rows.
std::pair<std::vector<double>, std::vector<double>> extract_prices(const LpSolution& solution,
                                                                   const ModelIR& model, double base_mva);

Allocation extract_allocation(const CaseData& data, const ModelIR& model, const std::vector<double>& primal);

// Runs the loop on an arbitrary base model; cones registered on it are
// separated, so a DC model finishes in one round.
PricingResult run_pricing(const CaseData& data, const ModelIR& base, const CppaConfig& config,
                          CutPool pool = {});

PricingResult run_cppa(const CaseData& data, const CppaConfig& config, const CutPool* warm_cuts = nullptr);
PricingResult run_dc(const CaseData& data, const CppaConfig& config);

}  // namespace cppa

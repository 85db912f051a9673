// Settlement-side evaluation: direct utilities, make-whole payments, lost
// opportunity costs, redispatch costs, nodal price distance and AC power
// flow residuals.
//
// Prices are $/MWh per bus (aligned with CaseData::buses); quantities are
// p.u. and converted with base_mva, so every utility is in $ per hour.

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cppa/netio.hpp"
#include "json.hpp"

namespace cppa {

class EconError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kAllocationVersion = "cppa-alloc-v1";

struct GeneratorDispatch {
  int id = 0;
  double p = 0.0, q = 0.0;
  double on = 0.0, su = 0.0, sd = 0.0;
};

struct LoadDispatch {
  int id = 0;
  double p = 0.0, q = 0.0;
};

struct BranchFlow {
  int id = 0;
  double p_from = 0.0, q_from = 0.0, p_to = 0.0, q_to = 0.0;
  std::optional<double> c, s;  // CP models only
};

struct BusState {
  int id = 0;
  std::optional<double> v2;     // CP models
  std::optional<double> theta;  // DC models
  std::optional<double> vm;     // externally supplied AC voltages
  std::optional<double> va;
};

// Aligned with the case collections (generators, loads, branches, buses).
struct Allocation {
  std::vector<GeneratorDispatch> generators;
  std::vector<LoadDispatch> loads;
  std::vector<BranchFlow> branches;
  std::vector<BusState> buses;
};

nlohmann::json allocation_to_json(const Allocation& alloc);
// Reads a cppa-alloc-v1 document and aligns it with the case. Missing
// agents raise EconError; commitments must be integral.
Allocation allocation_from_json(const nlohmann::json& doc, const CaseData& data);
Allocation load_allocation(const std::filesystem::path& path, const CaseData& data);

// Bid cost of a generator at a dispatch: energy + no-load + start-up +
// shut-down, in $.
double generator_cost(const Generator& gen, const GeneratorDispatch& d, double base_mva);
double load_benefit(const Load& load, const LoadDispatch& d, double base_mva);

double direct_utility(const Generator& gen, const GeneratorDispatch& d, double price, double base_mva);
double direct_utility(const Load& load, const LoadDispatch& d, double price, double base_mva);

// Best response of a price-taking agent. The global version chooses the
// commitment too (start-up/shut-down follow from initial_on); the local one
// keeps the commitment `on`.
double best_response_global(const Generator& gen, double price, double base_mva);
double best_response_local(const Generator& gen, bool on, double price, double base_mva);
double best_response(const Load& load, double price, double base_mva);

struct AgentMetrics {
  int id = 0;
  bool generator = true;
  double utility_z = 0.0;
  double utility_phi = 0.0;
  double mwp = 0.0;
  double gloc = 0.0;
  double lloc = 0.0;
  double rdc = 0.0;
};

struct EfficiencyReport {
  double welfare = 0.0;
  double mwp = 0.0;
  double gloc = 0.0;
  double lloc = 0.0;
  double rdc = 0.0;
  std::vector<AgentMetrics> agents;
};

EfficiencyReport efficiency_metrics(const CaseData& data, const Allocation& z, const Allocation& phi,
                                    std::span<const double> prices);

// Bid welfare (benefit - cost) of an allocation, in $.
double welfare(const CaseData& data, const Allocation& alloc);

// Mean absolute nodal difference.
double price_distance(std::span<const double> a, std::span<const double> b);

struct BranchResidual {
  int id = 0;
  double p_from = 0.0, q_from = 0.0, p_to = 0.0, q_to = 0.0;
  double limit_slack_from = 0.0, limit_slack_to = 0.0;  // i2 V^2 - P^2 - Q^2
  double angle_slack = 0.0;                             // limit - |theta_km|
};

struct AcResidualReport {
  std::vector<BranchResidual> branches;
  std::vector<double> p_mismatch;  // per bus: outgoing flow - injection
  std::vector<double> q_mismatch;
  std::vector<double> voltage_slack;  // min(vm - vmin, vmax - vm)
  double max_mismatch = 0.0;
  double max_limit_violation = 0.0;  // largest negative slack, as a positive number
  bool feasible(double tol) const { return max_mismatch <= tol && max_limit_violation <= tol; }
};

// Polar AC power flow evaluation over in-service branches. `p_injection`
// and `q_injection` are net (generation - consumption) per bus.
AcResidualReport ac_residual(const CaseData& data, std::span<const double> vm, std::span<const double> va,
                             std::span<const double> p_injection, std::span<const double> q_injection);

}  // namespace cppa

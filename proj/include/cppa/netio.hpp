// Market case data model, case-file readers and contingency handling.
//
// All electrical quantities are per-unit on CaseData::base_mva. Marginal
// costs and benefits stay in $/MWh; the model builders apply the base.

#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace cppa {

class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCaseSchemaVersion = "cppa-case-v1";

// Two-port Pi-model entries. k is the from side, m the to side.
struct Admittance {
  double g_kk = 0.0, b_kk = 0.0;
  double g_km = 0.0, b_km = 0.0;
  double g_mk = 0.0, b_mk = 0.0;
  double g_mm = 0.0, b_mm = 0.0;

  bool operator==(const Admittance&) const = default;
};

struct Bus {
  int id = 0;
  double vmin = 0.9;
  double vmax = 1.1;

  bool operator==(const Bus&) const = default;
};

struct Branch {
  int id = 0;
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;
  double x = 0.0;
  double b_c = 0.0;
  double tap = 1.0;
  double shift = 0.0;           // radians
  double max_angle_diff = 0.0;  // radians, in (0, pi/2)
  double current_limit_sq = 0.0;
  bool in_service = true;
  Admittance y;

  bool operator==(const Branch&) const = default;
};

// One piece of a piecewise-linear bid. `breakpoint` is the cumulative p.u.
// quantity at which the piece ends; the last piece extends to the agent's
// pmax. `price` is $/MWh (marginal cost for sellers, marginal benefit for
// buyers).
struct BidSegment {
  double breakpoint = 0.0;
  double price = 0.0;

  bool operator==(const BidSegment&) const = default;
};

struct Generator {
  int id = 0;
  int bus = 0;
  double pmin = 0.0, pmax = 0.0;
  double qmin = 0.0, qmax = 0.0;
  std::vector<BidSegment> cost_segments;
  double no_load_cost = 0.0;
  double startup_cost = 0.0;
  double shutdown_cost = 0.0;
  bool initial_on = false;

  bool operator==(const Generator&) const = default;
};

struct Load {
  int id = 0;
  int bus = 0;
  double pmax = 0.0;
  std::vector<BidSegment> benefit_segments;
  double power_factor_ratio = 0.0;  // q = ratio * p

  bool operator==(const Load&) const = default;
};

struct CaseData {
  double base_mva = 100.0;
  std::vector<Bus> buses;  // sorted by id, as are the other collections
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  std::string scenario_name;
  bool islanded = false;

  // Position of a bus id in `buses`; throws CaseError when absent.
  std::size_t bus_index(int bus_id) const;
  std::size_t branch_index(int branch_id) const;
  std::size_t in_service_branch_count() const;

  bool operator==(const CaseData&) const = default;
};

struct ParseOptions {
  // Marginal benefit ($/MWh) given to loads synthesized from MATPOWER Pd.
  double voll = 1000.0;
};

Admittance branch_admittance(double r, double x, double b_c, double tap, double shift);

// Reads a case file. `.m` files go through the MATPOWER reader, everything
// else is treated as cppa-case-v1 JSON.
CaseData parse_case(const std::filesystem::path& path, const ParseOptions& options = {});

CaseData case_from_json(const nlohmann::json& doc);
nlohmann::json case_to_json(const CaseData& data);

CaseData parse_matpower(const std::string& text, const ParseOptions& options = {});

// Sorts collections, checks invariants, recomputes admittances and the
// islanding flag. Every reader ends here.
void finalize_case(CaseData& data);

CaseData apply_contingency(const CaseData& data, const std::vector<int>& out_branches);

// Branch ids listed in a contingency file: a JSON array of ids, or an object
// with an "out_branches" array.
std::vector<int> parse_contingency(const std::filesystem::path& path);

// True when a bus carrying a generator or load is cut off from the largest
// connected component of in-service branches.
bool detect_islanding(const CaseData& data);

}  // namespace cppa

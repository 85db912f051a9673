// One pricing scenario from files to files: parse, apply contingencies,
// price, compare, write prices.csv, allocation.json, report.json and an
// optional cut store.
//
// Exit codes: 0 optimal, 1 input or I/O error, 2 infeasible, 3 time limit.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cppa/pricing.hpp"
#include "json.hpp"

namespace cppa {

inline constexpr const char* kReportVersion = "cppa-report-v1";

enum class ModelKind { DC, CP };
const char* to_string(ModelKind kind);

struct RunSpec {
  std::filesystem::path case_path;
  ModelKind model = ModelKind::CP;
  CppaConfig config;
  ParseOptions parse;
  std::optional<std::filesystem::path> contingency;
  std::optional<std::filesystem::path> cuts_in;
  std::optional<std::filesystem::path> cuts_out;
  std::optional<std::filesystem::path> reference_prices;
  std::optional<std::filesystem::path> phi;
  std::filesystem::path out_dir = ".";
  bool dump_model = false;
  bool dump_basis = false;
  std::optional<long> seed;  // reserved; the pipeline is deterministic

  void validate() const;
};

struct ScenarioOutcome {
  int exit_code = 1;
  std::string status;  // pricing status, or "Error"
  std::string error;   // message when exit_code == 1
  nlohmann::json report;
};

// Never throws for bad inputs; they surface as exit code 1 with a message.
ScenarioOutcome run_scenario(const RunSpec& spec);

// Runs independent scenarios on up to `jobs` threads; outcomes keep the
// order of `specs`.
std::vector<ScenarioOutcome> run_scenarios(const std::vector<RunSpec>& specs, int jobs);

// bus_id,price_p,price_q with 9 decimals. price_q is left empty when absent.
void write_prices_csv(const CaseData& data, const PricingResult& result, const std::filesystem::path& path);
// Active prices aligned with the case buses; every bus must be present.
std::vector<double> read_prices_csv(const std::filesystem::path& path, const CaseData& data);

}  // namespace cppa

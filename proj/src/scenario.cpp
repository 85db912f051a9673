#include "cppa/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace cppa {
namespace {

using nlohmann::json;

// Formats with 9 decimals and folds -0 to 0 so reruns compare byte-equal.
std::string fixed9(double v) {
  if (std::abs(v) < 5e-10) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9f", v);
  return buf;
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json series(const std::vector<double>& xs) {
  json out = json::array();
  for (double x : xs) out.push_back(number_or_null(x));
  return out;
}

void write_json(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

bool integral_commitments(const Allocation& a) {
  return std::all_of(a.generators.begin(), a.generators.end(), [](const GeneratorDispatch& g) {
    return std::abs(g.on - std::round(g.on)) <= 1e-6 && std::abs(g.su - std::round(g.su)) <= 1e-6 &&
           std::abs(g.sd - std::round(g.sd)) <= 1e-6;
  });
}

Allocation rounded(Allocation a) {
  for (auto& g : a.generators) {
    g.on = std::round(g.on);
    g.su = std::round(g.su);
    g.sd = std::round(g.sd);
  }
  return a;
}

json config_json(const RunSpec& spec) {
  const auto& c = spec.config;
  return {{"model", to_string(spec.model)},
          {"rule", to_string(c.rule)},
          {"time_limit_s", c.time_limit_s},
          {"ftol", number_or_null(c.ftol)},
          {"ftol_rounds", c.ftol_rounds},
          {"t_age", c.t_age == kNeverAge ? json(nullptr) : json(c.t_age)},
          {"eps_viol", c.eps_viol},
          {"eps_par", c.eps_par},
          {"rho", c.rho},
          {"max_cuts", c.max_cuts == std::numeric_limits<std::size_t>::max() ? json(nullptr) : json(c.max_cuts)},
          {"max_rounds", c.max_rounds == std::numeric_limits<int>::max() ? json(nullptr) : json(c.max_rounds)},
          {"milp_gap", c.milp_gap},
          {"voll", spec.parse.voll},
          {"seed", spec.seed ? json(*spec.seed) : json(nullptr)}};
}

json efficiency_json(const EfficiencyReport& e) {
  json agents = json::array();
  for (const auto& a : e.agents) {
    agents.push_back({{"kind", a.generator ? "generator" : "load"},
                      {"id", a.id},
                      {"utility_z", a.utility_z},
                      {"utility_phi", a.utility_phi},
                      {"mwp", a.mwp},
                      {"gloc", a.gloc},
                      {"lloc", a.lloc},
                      {"rdc", a.rdc}});
  }
  return {{"welfare", e.welfare}, {"mwp", e.mwp},   {"gloc", e.gloc},
          {"lloc", e.lloc},       {"rdc", e.rdc},   {"agents", std::move(agents)}};
}

// AC check of phi when it carries polar voltages for every bus.
json ac_check_json(const CaseData& data, const Allocation& phi) {
  if (phi.buses.size() != data.buses.size()) return nullptr;
  std::vector<double> vm, va, p(data.buses.size(), 0.0), q(data.buses.size(), 0.0);
  for (const auto& b : phi.buses) {
    if (!b.vm || !b.va) return nullptr;
    vm.push_back(*b.vm);
    va.push_back(*b.va);
  }
  for (std::size_t i = 0; i < data.generators.size(); ++i) {
    const auto k = data.bus_index(data.generators[i].bus);
    p[k] += phi.generators[i].p;
    q[k] += phi.generators[i].q;
  }
  for (std::size_t i = 0; i < data.loads.size(); ++i) {
    const auto k = data.bus_index(data.loads[i].bus);
    p[k] -= phi.loads[i].p;
    q[k] -= phi.loads[i].q;
  }
  const auto rep = ac_residual(data, vm, va, p, q);
  return {{"max_mismatch", rep.max_mismatch}, {"max_limit_violation", rep.max_limit_violation}};
}

json build_report(const RunSpec& spec, const CaseData& data, const PricingResult& r, const json& cuts_info,
                  const std::optional<std::vector<double>>& reference, const json& efficiency,
                  const json& phi_source, const json& ac_check) {
  json rep;
  rep["version"] = kReportVersion;
  rep["scenario"] = data.scenario_name;
  rep["case"] = spec.case_path.filename().string();
  rep["config"] = config_json(spec);
  rep["status"] = to_string(r.status);
  rep["termination"] = r.termination;
  rep["objective"] = r.has_prices() ? number_or_null(r.objective) : json(nullptr);
  rep["rounds"] = r.rounds.size();
  rep["milp_nodes"] = spec.config.rule == PricingRule::IP && r.has_prices() ? json(r.milp_nodes) : json(nullptr);
  rep["model_size"] = r.has_prices() ? json{{"variables", r.final_model.variables.size()},
                                            {"rows", r.final_model.rows.size()},
                                            {"cones", r.final_model.cones.size()}}
                                     : json(nullptr);
  rep["cuts"] = cuts_info;

  json rounds = json::array();
  for (const auto& s : r.rounds) {
    rounds.push_back({{"round", s.round},
                      {"objective", s.objective},
                      {"max_violation", s.max_violation},
                      {"violated", s.violated},
                      {"added", s.added},
                      {"dropped_parallel", s.dropped_parallel},
                      {"dropped_aged", s.dropped_aged},
                      {"pool_size", s.pool_size},
                      {"lp_iterations", s.lp_iterations}});
  }
  rep["round_log"] = std::move(rounds);
  rep["objective_trace"] = series(r.objective_trace());

  auto delta_series = [&](const std::vector<double>& target) {
    std::vector<double> out;
    for (const auto& s : r.rounds) out.push_back(price_distance(s.prices_p, target));
    return series(out);
  };
  rep["delta_to_terminal"] = r.has_prices() ? delta_series(r.prices_p) : json(nullptr);
  if (reference) {
    rep["delta"] = r.has_prices() ? json(price_distance(r.prices_p, *reference)) : json(nullptr);
    rep["delta_to_reference"] = delta_series(*reference);
  } else {
    rep["delta"] = nullptr;
    rep["delta_to_reference"] = nullptr;
  }
  if (r.has_prices()) {
    double mean = 0.0;
    for (double p : r.prices_p) mean += p;
    mean /= static_cast<double>(r.prices_p.size());
    double var = 0.0;
    for (double p : r.prices_p) var += (p - mean) * (p - mean);
    rep["price_p_mean"] = mean;
    rep["price_p_std"] = std::sqrt(var / static_cast<double>(r.prices_p.size()));
  } else {
    rep["price_p_mean"] = nullptr;
    rep["price_p_std"] = nullptr;
  }
  rep["efficiency"] = efficiency;
  rep["phi_source"] = phi_source;
  rep["ac_check"] = ac_check;
  rep["timing"] = {{"time_lp", r.time_lp}, {"time_cut", r.time_cut}};
  return rep;
}

ScenarioOutcome run_checked(const RunSpec& spec) {
  spec.validate();
  CaseData data = parse_case(spec.case_path, spec.parse);
  if (spec.contingency) data = apply_contingency(data, parse_contingency(*spec.contingency));

  CutPool warm;
  if (spec.cuts_in) warm = load_cuts(*spec.cuts_in, data);
  std::optional<std::vector<double>> reference;
  if (spec.reference_prices) reference = read_prices_csv(*spec.reference_prices, data);
  std::optional<Allocation> phi;
  if (spec.phi) phi = load_allocation(*spec.phi, data);

  PricingResult r = spec.model == ModelKind::CP ? run_cppa(data, spec.config, spec.cuts_in ? &warm : nullptr)
                                                : run_dc(data, spec.config);

  std::filesystem::create_directories(spec.out_dir);
  write_prices_csv(data, r, spec.out_dir / "prices.csv");
  json alloc = allocation_to_json(r.allocation);
  alloc["status"] = to_string(r.status);
  write_json(alloc, spec.out_dir / "allocation.json");

  json cuts_info = nullptr;
  if (spec.model == ModelKind::CP) {
    int added = 0, par = 0, aged = 0;
    for (const auto& h : r.pool.history()) {
      added += h.added;
      par += h.dropped_parallel;
      aged += h.dropped_aged;
    }
    cuts_info = {{"final_pool", r.pool.size()},     {"added", added},
                 {"dropped_parallel", par},         {"dropped_aged", aged},
                 {"loaded", r.pool.loaded},         {"dropped_on_load", r.pool.dropped_on_load}};
    if (spec.cuts_out) save_cuts(r.pool, data, *spec.cuts_out);
  }

  json efficiency = nullptr, phi_source = nullptr, ac_check = nullptr;
  if (r.has_prices()) {
    std::optional<Allocation> settle;
    if (phi) {
      settle = phi;
      phi_source = "file";
      ac_check = ac_check_json(data, *phi);
    } else if (integral_commitments(r.allocation)) {
      settle = rounded(r.allocation);
      phi_source = "z";
    }
    if (settle) efficiency = efficiency_json(efficiency_metrics(data, r.allocation, *settle, r.prices_p));
  }

  if (spec.dump_model && r.has_prices()) {
    std::ofstream out(spec.out_dir / "model.lp");
    write_lp(r.final_model, out);
  }
  if (spec.dump_basis && r.has_prices()) {
    std::ofstream out(spec.out_dir / "basis.txt");
    write_basis(r.final_model, r.final_basis, out);
  }

  ScenarioOutcome outcome;
  outcome.status = to_string(r.status);
  outcome.exit_code = r.status == PricingStatus::Optimal ? 0 : r.status == PricingStatus::Infeasible ? 2 : 3;
  outcome.report = build_report(spec, data, r, cuts_info, reference, efficiency, phi_source, ac_check);
  write_json(outcome.report, spec.out_dir / "report.json");
  return outcome;
}

}  // namespace

const char* to_string(ModelKind kind) { return kind == ModelKind::DC ? "dc" : "cp"; }

void RunSpec::validate() const {
  config.validate();
  if (case_path.empty()) throw ConfigError("a case file is required");
  if (model == ModelKind::DC && (cuts_in || cuts_out)) throw ConfigError("cut stores require the cp model");
}

void write_prices_csv(const CaseData& data, const PricingResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "bus_id,price_p,price_q\n";
  if (!result.has_prices()) return;
  for (std::size_t k = 0; k < data.buses.size(); ++k) {
    out << data.buses[k].id << ',' << fixed9(result.prices_p[k]) << ',';
    if (!result.prices_q.empty()) out << fixed9(result.prices_q[k]);
    out << '\n';
  }
}

std::vector<double> read_prices_csv(const std::filesystem::path& path, const CaseData& data) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open reference prices " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("bus_id,price_p", 0) != 0) {
    throw std::runtime_error(path.string() + ": expected header bus_id,price_p,price_q");
  }
  std::map<int, double> prices;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, p;
    if (!std::getline(ss, id, ',') || !std::getline(ss, p, ',')) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    try {
      prices[std::stoi(id)] = std::stod(p);
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  std::vector<double> out;
  for (const auto& b : data.buses) {
    auto it = prices.find(b.id);
    if (it == prices.end()) throw std::runtime_error(path.string() + ": no price for bus " + std::to_string(b.id));
    out.push_back(it->second);
  }
  return out;
}

ScenarioOutcome run_scenario(const RunSpec& spec) {
  try {
    return run_checked(spec);
  } catch (const std::exception& e) {
    ScenarioOutcome outcome;
    outcome.exit_code = 1;
    outcome.status = "Error";
    outcome.error = e.what();
    return outcome;
  }
}

std::vector<ScenarioOutcome> run_scenarios(const std::vector<RunSpec>& specs, int jobs) {
  std::vector<ScenarioOutcome> out(specs.size());
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(specs.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) out[i] = run_scenario(specs[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < specs.size(); i = next++) out[i] = run_scenario(specs[i]);
      });
    }
  }
  return out;
}

}  // namespace cppa

#include "cppa/econ.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cppa/model.hpp"

namespace cppa {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw EconError(std::string("allocation: field '") + key + "' must be a number");
  return it->get<double>();
}

// Candidate outputs for a 1-D concave PWL objective on [lo, hi].
std::vector<double> candidates(const std::vector<BidSegment>& segs, double lo, double hi) {
  std::vector<double> out{lo, hi};
  for (const auto& s : segs) {
    if (s.breakpoint > lo && s.breakpoint < hi) out.push_back(s.breakpoint);
  }
  return out;
}

double energy_profit(const Generator& gen, double p, double price, double base_mva) {
  return base_mva * (price * p - evaluate_bid(gen.cost_segments, gen.pmax, p));
}

}  // namespace

json allocation_to_json(const Allocation& alloc) {
  json doc;
  doc["version"] = kAllocationVersion;
  doc["generators"] = json::array();
  for (const auto& g : alloc.generators) {
    doc["generators"].push_back({{"id", g.id}, {"p", g.p}, {"q", g.q}, {"on", g.on}, {"su", g.su}, {"sd", g.sd}});
  }
  doc["loads"] = json::array();
  for (const auto& l : alloc.loads) doc["loads"].push_back({{"id", l.id}, {"p", l.p}, {"q", l.q}});
  doc["branches"] = json::array();
  for (const auto& b : alloc.branches) {
    doc["branches"].push_back({{"id", b.id},
                               {"p_from", b.p_from},
                               {"q_from", b.q_from},
                               {"p_to", b.p_to},
                               {"q_to", b.q_to},
                               {"c", optional_number(b.c)},
                               {"s", optional_number(b.s)}});
  }
  doc["buses"] = json::array();
  for (const auto& b : alloc.buses) {
    doc["buses"].push_back({{"id", b.id},
                            {"v2", optional_number(b.v2)},
                            {"theta", optional_number(b.theta)},
                            {"vm", optional_number(b.vm)},
                            {"va", optional_number(b.va)}});
  }
  return doc;
}

Allocation allocation_from_json(const json& doc, const CaseData& data) {
  if (!doc.is_object() || doc.value("version", std::string{}) != kAllocationVersion) {
    throw EconError(std::string("allocation: unsupported version (expected ") + kAllocationVersion + ")");
  }
  Allocation out;
  try {
    std::map<int, GeneratorDispatch> gens;
    for (const auto& g : doc.at("generators")) {
      GeneratorDispatch d;
      d.id = g.at("id").get<int>();
      d.p = g.at("p").get<double>();
      d.q = g.value("q", 0.0);
      d.on = g.at("on").get<double>();
      d.su = g.value("su", 0.0);
      d.sd = g.value("sd", 0.0);
      for (double b : {d.on, d.su, d.sd}) {
        if (b != 0.0 && b != 1.0) {
          throw EconError("allocation: generator " + std::to_string(d.id) + " commitments must be integral");
        }
      }
      gens[d.id] = d;
    }
    std::map<int, LoadDispatch> loads;
    for (const auto& l : doc.at("loads")) {
      LoadDispatch d;
      d.id = l.at("id").get<int>();
      d.p = l.at("p").get<double>();
      d.q = l.value("q", 0.0);
      loads[d.id] = d;
    }
    for (const auto& g : data.generators) {
      auto it = gens.find(g.id);
      if (it == gens.end()) throw EconError("allocation: missing generator " + std::to_string(g.id));
      out.generators.push_back(it->second);
    }
    for (const auto& l : data.loads) {
      auto it = loads.find(l.id);
      if (it == loads.end()) throw EconError("allocation: missing load " + std::to_string(l.id));
      out.loads.push_back(it->second);
    }
    // Polar voltages come under "voltages"; our own output uses "buses".
    auto it = doc.find("voltages");
    if (it == doc.end()) it = doc.find("buses");
    if (it != doc.end() && !it->is_null()) {
      std::map<int, BusState> states;
      for (const auto& v : *it) {
        BusState s;
        s.id = v.at("id").get<int>();
        s.vm = read_optional(v, "vm");
        s.va = read_optional(v, "va");
        states[s.id] = s;
      }
      for (const auto& b : data.buses) {
        auto st = states.find(b.id);
        out.buses.push_back(st == states.end() ? BusState{b.id, {}, {}, {}, {}} : st->second);
      }
    }
  } catch (const json::exception& e) {
    throw EconError(std::string("allocation: malformed document: ") + e.what());
  }
  return out;
}

Allocation load_allocation(const std::filesystem::path& path, const CaseData& data) {
  std::ifstream in(path);
  if (!in) throw EconError("cannot open allocation file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw EconError(path.string() + ": invalid JSON: " + e.what());
  }
  return allocation_from_json(doc, data);
}

double generator_cost(const Generator& gen, const GeneratorDispatch& d, double base_mva) {
  return base_mva * evaluate_bid(gen.cost_segments, gen.pmax, d.p) + gen.no_load_cost * d.on +
         gen.startup_cost * d.su + gen.shutdown_cost * d.sd;
}

double load_benefit(const Load& load, const LoadDispatch& d, double base_mva) {
  return base_mva * evaluate_bid(load.benefit_segments, load.pmax, d.p);
}

double direct_utility(const Generator& gen, const GeneratorDispatch& d, double price, double base_mva) {
  return d.p * base_mva * price - generator_cost(gen, d, base_mva);
}

double direct_utility(const Load& load, const LoadDispatch& d, double price, double base_mva) {
  return load_benefit(load, d, base_mva) - d.p * base_mva * price;
}

double best_response_local(const Generator& gen, bool on, double price, double base_mva) {
  if (!on) return gen.initial_on ? -gen.shutdown_cost : 0.0;
  double best = -kInf;
  for (double p : candidates(gen.cost_segments, gen.pmin, gen.pmax)) {
    best = std::max(best, energy_profit(gen, p, price, base_mva));
  }
  return best - gen.no_load_cost - (gen.initial_on ? 0.0 : gen.startup_cost);
}

double best_response_global(const Generator& gen, double price, double base_mva) {
  return std::max(best_response_local(gen, false, price, base_mva), best_response_local(gen, true, price, base_mva));
}

double best_response(const Load& load, double price, double base_mva) {
  double best = -kInf;
  for (double p : candidates(load.benefit_segments, 0.0, load.pmax)) {
    best = std::max(best, base_mva * (evaluate_bid(load.benefit_segments, load.pmax, p) - price * p));
  }
  return best;
}

double welfare(const CaseData& data, const Allocation& alloc) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.loads.size(); ++i) total += load_benefit(data.loads[i], alloc.loads[i], data.base_mva);
  for (std::size_t i = 0; i < data.generators.size(); ++i) {
    total -= generator_cost(data.generators[i], alloc.generators[i], data.base_mva);
  }
  return total;
}

EfficiencyReport efficiency_metrics(const CaseData& data, const Allocation& z, const Allocation& phi,
                                    std::span<const double> prices) {
  if (prices.size() != data.buses.size()) throw EconError("efficiency_metrics: price vector size mismatch");
  for (const Allocation* a : {&z, &phi}) {
    if (a->generators.size() != data.generators.size() || a->loads.size() != data.loads.size()) {
      throw EconError("efficiency_metrics: allocation size mismatch");
    }
  }
  const double base = data.base_mva;
  EfficiencyReport rep;
  rep.welfare = welfare(data, phi);

  // Lost opportunity is nonnegative by construction; only round-off is
  // snapped to zero so genuine negatives (phi outside the bid set) show.
  auto snap = [](double gap, double scale) { return gap < 0.0 && gap > -1e-9 * (1.0 + std::abs(scale)) ? 0.0 : gap; };
  auto accumulate = [&](AgentMetrics m, double best_global, double best_local) {
    m.mwp = std::max(0.0, -m.utility_phi);
    m.gloc = snap(best_global - m.utility_phi, m.utility_phi);
    m.lloc = snap(best_local - m.utility_phi, m.utility_phi);
    m.rdc = std::max(0.0, m.utility_z - m.utility_phi);
    rep.mwp += m.mwp;
    rep.gloc += m.gloc;
    rep.lloc += m.lloc;
    rep.rdc += m.rdc;
    rep.agents.push_back(m);
  };

  for (std::size_t i = 0; i < data.generators.size(); ++i) {
    const auto& g = data.generators[i];
    const double price = prices[data.bus_index(g.bus)];
    AgentMetrics m;
    m.id = g.id;
    m.generator = true;
    m.utility_z = direct_utility(g, z.generators[i], price, base);
    m.utility_phi = direct_utility(g, phi.generators[i], price, base);
    const bool on = std::round(phi.generators[i].on) >= 1.0;
    accumulate(m, best_response_global(g, price, base), best_response_local(g, on, price, base));
  }
  for (std::size_t i = 0; i < data.loads.size(); ++i) {
    const auto& l = data.loads[i];
    const double price = prices[data.bus_index(l.bus)];
    AgentMetrics m;
    m.id = l.id;
    m.generator = false;
    m.utility_z = direct_utility(l, z.loads[i], price, base);
    m.utility_phi = direct_utility(l, phi.loads[i], price, base);
    const double best = best_response(l, price, base);
    accumulate(m, best, best);
  }
  return rep;
}

double price_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw EconError("price_distance: length mismatch");
  if (a.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

AcResidualReport ac_residual(const CaseData& data, std::span<const double> vm, std::span<const double> va,
                             std::span<const double> p_injection, std::span<const double> q_injection) {
  const std::size_t nb = data.buses.size();
  if (vm.size() != nb || va.size() != nb || p_injection.size() != nb || q_injection.size() != nb) {
    throw EconError("ac_residual: per-bus arrays must match the bus count");
  }
  AcResidualReport rep;
  rep.p_mismatch.assign(p_injection.begin(), p_injection.end());
  rep.q_mismatch.assign(q_injection.begin(), q_injection.end());
  for (auto& v : rep.p_mismatch) v = -v;
  for (auto& v : rep.q_mismatch) v = -v;

  for (const auto& br : data.branches) {
    if (!br.in_service) continue;
    const std::size_t k = data.bus_index(br.from_bus), m = data.bus_index(br.to_bus);
    const double vk = vm[k], vmm = vm[m];
    const double th = va[k] - va[m];
    const double cs = vk * vmm * std::cos(th), sn = vk * vmm * std::sin(th);
    const Admittance& y = br.y;
    BranchResidual r;
    r.id = br.id;
    r.p_from = y.g_kk * vk * vk + y.g_km * cs + y.b_km * sn;
    r.p_to = y.g_mm * vmm * vmm + y.g_mk * cs - y.b_mk * sn;
    r.q_from = -y.b_kk * vk * vk - y.b_km * cs + y.g_km * sn;
    r.q_to = -y.b_mm * vmm * vmm - y.b_mk * cs - y.g_mk * sn;
    r.limit_slack_from = br.current_limit_sq * vk * vk - (r.p_from * r.p_from + r.q_from * r.q_from);
    r.limit_slack_to = br.current_limit_sq * vmm * vmm - (r.p_to * r.p_to + r.q_to * r.q_to);
    r.angle_slack = br.max_angle_diff - std::abs(th);
    rep.p_mismatch[k] += r.p_from;
    rep.q_mismatch[k] += r.q_from;
    rep.p_mismatch[m] += r.p_to;
    rep.q_mismatch[m] += r.q_to;
    rep.max_limit_violation = std::max({rep.max_limit_violation, -r.limit_slack_from, -r.limit_slack_to, -r.angle_slack});
    rep.branches.push_back(r);
  }
  for (std::size_t i = 0; i < nb; ++i) {
    const auto& b = data.buses[i];
    const double slack = std::min(vm[i] - b.vmin, b.vmax - vm[i]);
    rep.voltage_slack.push_back(slack);
    rep.max_limit_violation = std::max(rep.max_limit_violation, -slack);
    rep.max_mismatch = std::max({rep.max_mismatch, std::abs(rep.p_mismatch[i]), std::abs(rep.q_mismatch[i])});
  }
  return rep;
}

}  // namespace cppa

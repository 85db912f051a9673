#include "cppa/netio.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace cppa {

using nlohmann::json;

namespace {

template <typename T>
void sort_by_id(std::vector<T>& items, const char* what) {
  std::sort(items.begin(), items.end(), [](const T& a, const T& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < items.size(); ++i) {
    if (items[i].id == items[i - 1].id) {
      throw CaseError("duplicate " + std::string(what) + " id " + std::to_string(items[i].id));
    }
  }
}

std::string entity(const char* what, int id) { return std::string(what) + " " + std::to_string(id); }

void check_segments(const std::vector<BidSegment>& segs, bool nondecreasing, const std::string& who) {
  if (segs.empty()) throw CaseError(who + ": empty bid segment list");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (!std::isfinite(segs[i].breakpoint) || !std::isfinite(segs[i].price)) {
      throw CaseError(who + ": non-finite bid segment");
    }
    if (i > 0) {
      if (segs[i].breakpoint <= segs[i - 1].breakpoint) {
        throw CaseError(who + ": bid breakpoints must be strictly increasing");
      }
      if (nondecreasing && segs[i].price < segs[i - 1].price) {
        throw CaseError(who + ": non-convex cost segments (marginal costs must be nondecreasing)");
      }
      if (!nondecreasing && segs[i].price > segs[i - 1].price) {
        throw CaseError(who + ": non-concave benefit segments (marginal benefits must be nonincreasing)");
      }
    }
  }
  if (segs.front().breakpoint <= 0.0) throw CaseError(who + ": first breakpoint must be positive");
}

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw CaseError(where + ": missing field '" + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw CaseError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T optional_field(const json& obj, const char* key, T fallback, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw CaseError(where + ": field '" + key + "' has the wrong type");
  }
}

bool read_flag(const json& obj, const char* key, bool fallback, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_number()) return it->get<double>() != 0.0;
  throw CaseError(where + ": field '" + key + "' has the wrong type");
}

std::vector<BidSegment> read_segments(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw CaseError(where + ": missing field '" + key + "'");
  if (!it->is_array()) throw CaseError(where + ": field '" + key + "' has the wrong type");
  std::vector<BidSegment> out;
  for (const auto& seg : *it) {
    if (!seg.is_array() || seg.size() != 2 || !seg[0].is_number() || !seg[1].is_number()) {
      throw CaseError(where + ": field '" + key + "' entries must be [quantity, price] pairs");
    }
    out.push_back({seg[0].get<double>(), seg[1].get<double>()});
  }
  return out;
}

json segments_to_json(const std::vector<BidSegment>& segs) {
  json out = json::array();
  for (const auto& s : segs) out.push_back({s.breakpoint, s.price});
  return out;
}

}  // namespace

std::size_t CaseData::bus_index(int bus_id) const {
  auto it = std::lower_bound(buses.begin(), buses.end(), bus_id,
                             [](const Bus& b, int id) { return b.id < id; });
  if (it == buses.end() || it->id != bus_id) throw CaseError("unknown bus id " + std::to_string(bus_id));
  return static_cast<std::size_t>(it - buses.begin());
}

std::size_t CaseData::branch_index(int branch_id) const {
  auto it = std::lower_bound(branches.begin(), branches.end(), branch_id,
                             [](const Branch& b, int id) { return b.id < id; });
  if (it == branches.end() || it->id != branch_id) {
    throw CaseError("unknown branch id " + std::to_string(branch_id));
  }
  return static_cast<std::size_t>(it - branches.begin());
}

std::size_t CaseData::in_service_branch_count() const {
  return static_cast<std::size_t>(
      std::count_if(branches.begin(), branches.end(), [](const Branch& b) { return b.in_service; }));
}

Admittance branch_admittance(double r, double x, double b_c, double tap, double shift) {
  using C = std::complex<double>;
  const C ys = 1.0 / C(r, x);
  const C half_charge(0.0, b_c / 2.0);
  const C y_kk = (ys + half_charge) / (tap * tap);
  const C y_km = -ys * std::polar(1.0, -shift) / tap;
  const C y_mk = -ys * std::polar(1.0, shift) / tap;
  const C y_mm = ys + half_charge;
  return {y_kk.real(), y_kk.imag(), y_km.real(), y_km.imag(),
          y_mk.real(), y_mk.imag(), y_mm.real(), y_mm.imag()};
}

bool detect_islanding(const CaseData& data) {
  const std::size_t n = data.buses.size();
  if (n == 0) return false;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& br : data.branches) {
    if (!br.in_service) continue;
    std::size_t a = find(data.bus_index(br.from_bus));
    std::size_t b = find(data.bus_index(br.to_bus));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> size(n, 0);
  for (std::size_t i = 0; i < n; ++i) ++size[find(i)];
  // Largest component; ties go to the one holding the lowest bus id.
  std::size_t main = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (size[i] > size[main]) main = i;
  }
  auto outside = [&](int bus_id) { return find(data.bus_index(bus_id)) != main; };
  for (const auto& g : data.generators) {
    if (outside(g.bus)) return true;
  }
  for (const auto& l : data.loads) {
    if (outside(l.bus)) return true;
  }
  return false;
}

void finalize_case(CaseData& data) {
  if (!(data.base_mva > 0.0) || !std::isfinite(data.base_mva)) throw CaseError("base_mva must be positive");
  sort_by_id(data.buses, "bus");
  sort_by_id(data.branches, "branch");
  sort_by_id(data.generators, "generator");
  sort_by_id(data.loads, "load");
  if (data.buses.empty()) throw CaseError("case has no buses");

  for (const auto& b : data.buses) {
    if (!(b.vmin > 0.0) || !(b.vmin <= b.vmax)) {
      throw CaseError(entity("bus", b.id) + ": require 0 < vmin <= vmax");
    }
  }
  for (auto& br : data.branches) {
    const std::string who = entity("branch", br.id);
    data.bus_index(br.from_bus);
    data.bus_index(br.to_bus);
    if (br.from_bus == br.to_bus) throw CaseError(who + ": from and to bus coincide");
    if (br.x == 0.0) throw CaseError(who + ": zero reactance");
    if (!(br.tap > 0.0)) throw CaseError(who + ": tap ratio must be positive");
    if (!(br.max_angle_diff > 0.0) || !(br.max_angle_diff < std::numbers::pi / 2.0)) {
      throw CaseError(who + ": max_angle_diff must lie in (0, pi/2)");
    }
    if (!(br.current_limit_sq > 0.0)) throw CaseError(who + ": current_limit_sq must be positive");
    br.y = branch_admittance(br.r, br.x, br.b_c, br.tap, br.shift);
  }
  for (const auto& g : data.generators) {
    const std::string who = entity("generator", g.id);
    data.bus_index(g.bus);
    if (g.pmin > g.pmax) throw CaseError(who + ": pmin > pmax");
    if (g.qmin > g.qmax) throw CaseError(who + ": qmin > qmax");
    if (g.pmin < 0.0) throw CaseError(who + ": pmin must be nonnegative");
    check_segments(g.cost_segments, true, who);
  }
  for (const auto& l : data.loads) {
    const std::string who = entity("load", l.id);
    data.bus_index(l.bus);
    if (!(l.pmax >= 0.0)) throw CaseError(who + ": pmax must be nonnegative");
    check_segments(l.benefit_segments, false, who);
  }
  data.islanded = detect_islanding(data);
}

CaseData case_from_json(const json& doc) {
  if (!doc.is_object()) throw CaseError("case document must be a JSON object");
  const auto version = optional_field<std::string>(doc, "version", "", "case");
  if (version != kCaseSchemaVersion) {
    throw CaseError("unsupported case schema version '" + version + "' (expected " + kCaseSchemaVersion + ")");
  }
  CaseData out;
  out.base_mva = required<double>(doc, "base_mva", "case");
  out.scenario_name = optional_field<std::string>(doc, "scenario_name", "", "case");

  auto array_of = [&](const char* key) -> const json& {
    auto it = doc.find(key);
    if (it == doc.end()) throw CaseError(std::string("case: missing field '") + key + "'");
    if (!it->is_array()) throw CaseError(std::string("case: field '") + key + "' must be an array");
    return *it;
  };

  for (const auto& b : array_of("buses")) {
    Bus bus;
    bus.id = required<int>(b, "id", "bus");
    const std::string who = entity("bus", bus.id);
    bus.vmin = required<double>(b, "vmin", who);
    bus.vmax = required<double>(b, "vmax", who);
    out.buses.push_back(bus);
  }
  for (const auto& b : array_of("branches")) {
    Branch br;
    br.id = required<int>(b, "id", "branch");
    const std::string who = entity("branch", br.id);
    br.from_bus = required<int>(b, "from", who);
    br.to_bus = required<int>(b, "to", who);
    br.r = required<double>(b, "r", who);
    br.x = required<double>(b, "x", who);
    br.b_c = optional_field<double>(b, "b_c", 0.0, who);
    br.tap = optional_field<double>(b, "tap", 1.0, who);
    br.shift = optional_field<double>(b, "shift", 0.0, who);
    br.max_angle_diff = required<double>(b, "max_angle_diff", who);
    br.current_limit_sq = required<double>(b, "current_limit_sq", who);
    br.in_service = read_flag(b, "status", true, who);
    out.branches.push_back(br);
  }
  for (const auto& g : array_of("generators")) {
    Generator gen;
    gen.id = required<int>(g, "id", "generator");
    const std::string who = entity("generator", gen.id);
    gen.bus = required<int>(g, "bus", who);
    gen.pmin = required<double>(g, "pmin", who);
    gen.pmax = required<double>(g, "pmax", who);
    gen.qmin = required<double>(g, "qmin", who);
    gen.qmax = required<double>(g, "qmax", who);
    gen.cost_segments = read_segments(g, "cost_segments", who);
    gen.no_load_cost = optional_field<double>(g, "no_load_cost", 0.0, who);
    gen.startup_cost = optional_field<double>(g, "startup_cost", 0.0, who);
    gen.shutdown_cost = optional_field<double>(g, "shutdown_cost", 0.0, who);
    gen.initial_on = read_flag(g, "initial_on", false, who);
    out.generators.push_back(gen);
  }
  for (const auto& l : array_of("loads")) {
    Load load;
    load.id = required<int>(l, "id", "load");
    const std::string who = entity("load", load.id);
    load.bus = required<int>(l, "bus", who);
    load.pmax = required<double>(l, "pmax", who);
    load.benefit_segments = read_segments(l, "benefit_segments", who);
    load.power_factor_ratio = optional_field<double>(l, "power_factor_ratio", 0.0, who);
    out.loads.push_back(load);
  }
  finalize_case(out);
  return out;
}

json case_to_json(const CaseData& data) {
  json doc;
  doc["version"] = kCaseSchemaVersion;
  doc["scenario_name"] = data.scenario_name;
  doc["base_mva"] = data.base_mva;
  doc["buses"] = json::array();
  for (const auto& b : data.buses) doc["buses"].push_back({{"id", b.id}, {"vmin", b.vmin}, {"vmax", b.vmax}});
  doc["branches"] = json::array();
  for (const auto& br : data.branches) {
    doc["branches"].push_back({{"id", br.id},
                               {"from", br.from_bus},
                               {"to", br.to_bus},
                               {"r", br.r},
                               {"x", br.x},
                               {"b_c", br.b_c},
                               {"tap", br.tap},
                               {"shift", br.shift},
                               {"max_angle_diff", br.max_angle_diff},
                               {"current_limit_sq", br.current_limit_sq},
                               {"status", br.in_service}});
  }
  doc["generators"] = json::array();
  for (const auto& g : data.generators) {
    doc["generators"].push_back({{"id", g.id},
                                 {"bus", g.bus},
                                 {"pmin", g.pmin},
                                 {"pmax", g.pmax},
                                 {"qmin", g.qmin},
                                 {"qmax", g.qmax},
                                 {"cost_segments", segments_to_json(g.cost_segments)},
                                 {"no_load_cost", g.no_load_cost},
                                 {"startup_cost", g.startup_cost},
                                 {"shutdown_cost", g.shutdown_cost},
                                 {"initial_on", g.initial_on}});
  }
  doc["loads"] = json::array();
  for (const auto& l : data.loads) {
    doc["loads"].push_back({{"id", l.id},
                            {"bus", l.bus},
                            {"pmax", l.pmax},
                            {"benefit_segments", segments_to_json(l.benefit_segments)},
                            {"power_factor_ratio", l.power_factor_ratio}});
  }
  return doc;
}

CaseData parse_case(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw CaseError("cannot open case file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  CaseData out;
  if (path.extension() == ".m") {
    out = parse_matpower(buffer.str(), options);
  } else {
    json doc;
    try {
      doc = json::parse(buffer.str());
    } catch (const json::parse_error& e) {
      throw CaseError(path.string() + ": invalid JSON: " + e.what());
    }
    out = case_from_json(doc);
  }
  if (out.scenario_name.empty()) out.scenario_name = path.stem().string();
  return out;
}

CaseData apply_contingency(const CaseData& data, const std::vector<int>& out_branches) {
  CaseData out = data;
  for (int id : out_branches) out.branches[out.branch_index(id)].in_service = false;
  out.islanded = detect_islanding(out);
  return out;
}

std::vector<int> parse_contingency(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CaseError("cannot open contingency file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CaseError(path.string() + ": invalid JSON: " + e.what());
  }
  const json* list = &doc;
  if (doc.is_object()) {
    auto it = doc.find("out_branches");
    if (it == doc.end()) throw CaseError(path.string() + ": missing field 'out_branches'");
    list = &*it;
  }
  if (!list->is_array()) throw CaseError(path.string() + ": contingency list must be an array of branch ids");
  std::vector<int> ids;
  for (const auto& v : *list) {
    if (!v.is_number_integer()) throw CaseError(path.string() + ": branch ids must be integers");
    ids.push_back(v.get<int>());
  }
  return ids;
}

}  // namespace cppa

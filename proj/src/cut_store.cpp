#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "cppa/cuts.hpp"
#include "json.hpp"

namespace cppa {
namespace {

using nlohmann::json;

const std::vector<std::string>& roles(ConeKind kind) {
  static const std::vector<std::string> jabr{"c", "s", "v2_from", "v2_to"};
  static const std::vector<std::string> from{"P_from", "Q_from", "v2_from"};
  static const std::vector<std::string> to{"P_to", "Q_to", "v2_to"};
  switch (kind) {
    case ConeKind::JabrRotated:
      return jabr;
    case ConeKind::CurrentLimitFrom:
      return from;
    case ConeKind::CurrentLimitTo:
      return to;
  }
  return jabr;
}

}  // namespace

void save_cuts(const CutPool& pool, const CaseData& data, const std::filesystem::path& path) {
  json doc;
  doc["version"] = kCutStoreVersion;
  doc["bus_count"] = data.buses.size();
  doc["branch_count"] = data.branches.size();
  json list = json::array();
  for (const auto& cut : pool.cuts()) {
    json coefficients = json::array();
    const auto& names = roles(cut.kind);
    for (int i = 0; i < cut.arity(); ++i) {
      coefficients.push_back({names[static_cast<std::size_t>(i)], cut.coef[static_cast<std::size_t>(i)]});
    }
    list.push_back({{"branch_id", cut.branch_id},
                    {"cone_kind", to_string(cut.kind)},
                    {"coefficients", std::move(coefficients)},
                    {"rhs", cut.rhs}});
  }
  doc["cuts"] = std::move(list);
  std::ofstream out(path);
  if (!out) throw CutError("cannot write cut store " + path.string());
  out << doc.dump(1) << '\n';
}

CutPool load_cuts(const std::filesystem::path& path, const CaseData& data) {
  std::ifstream in(path);
  if (!in) throw CutError("cannot open cut store " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw CutError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object() || doc.value("version", std::string{}) != kCutStoreVersion) {
    throw CutError(path.string() + ": unsupported cut store version (expected " + kCutStoreVersion + ")");
  }
  try {
    if (doc.at("bus_count").get<std::size_t>() != data.buses.size()) {
      throw CutError(path.string() + ": cut store was built for a case with " +
                     std::to_string(doc.at("bus_count").get<std::size_t>()) + " buses, this case has " +
                     std::to_string(data.buses.size()));
    }
    CutPool pool;
    for (const auto& entry : doc.at("cuts")) {
      Cut cut;
      cut.branch_id = entry.at("branch_id").get<int>();
      cut.kind = cone_kind_from_string(entry.at("cone_kind").get<std::string>());
      std::size_t bi = 0;
      try {
        bi = data.branch_index(cut.branch_id);
      } catch (const CaseError&) {
        throw CutError(path.string() + ": cut references unknown branch " + std::to_string(cut.branch_id));
      }
      const auto& names = roles(cut.kind);
      std::vector<bool> seen(names.size(), false);
      for (const auto& pair : entry.at("coefficients")) {
        const auto role = pair.at(0).get<std::string>();
        auto it = std::find(names.begin(), names.end(), role);
        if (it == names.end()) {
          throw CutError(path.string() + ": role '" + role + "' does not belong to a " + to_string(cut.kind) + " cut");
        }
        const auto pos = static_cast<std::size_t>(it - names.begin());
        cut.coef[pos] = pair.at(1).get<double>();
        seen[pos] = true;
      }
      if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw CutError(path.string() + ": incomplete coefficients on branch " + std::to_string(cut.branch_id));
      }
      cut.rhs = entry.at("rhs").get<double>();
      if (!data.branches[bi].in_service) {
        ++pool.dropped_on_load;
        continue;
      }
      double len = 0.0;
      for (int i = 0; i < cut.arity(); ++i) len += cut.coef[static_cast<std::size_t>(i)] * cut.coef[static_cast<std::size_t>(i)];
      len = std::sqrt(len);
      if (!(len > 0.0)) throw CutError(path.string() + ": zero cut on branch " + std::to_string(cut.branch_id));
      for (int i = 0; i < cut.arity(); ++i) {
        cut.unit_normal[static_cast<std::size_t>(i)] = cut.coef[static_cast<std::size_t>(i)] / len;
      }
      cut.birth_round = 0;
      cut.last_tight_round = 0;
      pool.insert_sorted(std::move(cut));
      ++pool.loaded;
    }
    return pool;
  } catch (const json::exception& e) {
    throw CutError(path.string() + ": malformed cut store: " + e.what());
  }
}

}  // namespace cppa

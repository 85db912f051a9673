#include "cppa/cuts.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "cppa/separation.hpp"

namespace cppa {
namespace {

double value_at(std::span<const double> point, int var) { return point[static_cast<std::size_t>(var)]; }

auto sort_key(const Cut& c) { return std::make_tuple(c.branch_id, static_cast<int>(c.kind), c.birth_round); }

}  // namespace

double cone_violation(std::span<const double> point, const ConeDescriptor& cone) {
  const double x = value_at(point, cone.vars[0]);
  const double y = value_at(point, cone.vars[1]);
  if (cone.kind == ConeKind::JabrRotated) {
    return x * x + y * y - value_at(point, cone.vars[2]) * value_at(point, cone.vars[3]);
  }
  return x * x + y * y - cone.multiplier * value_at(point, cone.vars[2]);
}

SocPoint soc_form(std::span<const double> point, const ConeDescriptor& cone) {
  const double x = value_at(point, cone.vars[0]);
  const double y = value_at(point, cone.vars[1]);
  double w = 0.0, z = 1.0;
  if (cone.kind == ConeKind::JabrRotated) {
    w = value_at(point, cone.vars[2]);
    z = value_at(point, cone.vars[3]);
  } else {
    w = cone.multiplier * value_at(point, cone.vars[2]);
  }
  return {{2.0 * x, 2.0 * y, w - z}, w + z};
}

std::optional<Cut> try_max_distance_cut(std::span<const double> point, const ConeDescriptor& cone,
                                        double eps_viol) {
  if (!(cone_violation(point, cone) > eps_viol)) return std::nullopt;
  const SocPoint soc = soc_form(point, cone);
  const double norm = std::hypot(soc.u[0], soc.u[1], soc.u[2]);
  if (!(norm > 0.0) || !(norm > soc.t)) return std::nullopt;

  Cut cut;
  cut.kind = cone.kind;
  cut.branch_id = cone.branch_id;
  // u'^T (2x, 2y, w - z) <= ||u'|| (w + z), expanded over the model variables.
  cut.coef[0] = 2.0 * soc.u[0];
  cut.coef[1] = 2.0 * soc.u[1];
  if (cone.kind == ConeKind::JabrRotated) {
    cut.coef[2] = soc.u[2] - norm;
    cut.coef[3] = -soc.u[2] - norm;
    cut.rhs = 0.0;
  } else {
    const double mu = cone.multiplier;
    cut.coef[2] = mu * (soc.u[2] - norm);
    cut.rhs = norm + soc.u[2];
  }
  double len = 0.0;
  for (int i = 0; i < cut.arity(); ++i) len += cut.coef[static_cast<std::size_t>(i)] * cut.coef[static_cast<std::size_t>(i)];
  len = std::sqrt(len);
  for (int i = 0; i < cut.arity(); ++i) cut.unit_normal[static_cast<std::size_t>(i)] = cut.coef[static_cast<std::size_t>(i)] / len;
  return cut;
}

Cut max_distance_cut(std::span<const double> point, const ConeDescriptor& cone, double eps_viol) {
  const double viol = cone_violation(point, cone);
  if (!(viol > eps_viol)) {
    throw CutError("max_distance_cut: point does not violate the cone on branch " + std::to_string(cone.branch_id));
  }
  auto cut = try_max_distance_cut(point, cone, eps_viol);
  if (!cut) throw CutError("max_distance_cut: degenerate SOC vector on branch " + std::to_string(cone.branch_id));
  return *cut;
}

double Cut::excess(std::span<const double> point, const ConeDescriptor& cone) const {
  double lhs = 0.0;
  for (int i = 0; i < arity(); ++i) {
    lhs += coef[static_cast<std::size_t>(i)] * value_at(point, cone.vars[static_cast<std::size_t>(i)]);
  }
  return lhs - rhs;
}

std::vector<int> select_cuts(std::vector<ConeViolation> violations, const SelectionConfig& config) {
  std::erase_if(violations, [&](const ConeViolation& v) { return !(v.violation > config.eps_viol); });
  std::sort(violations.begin(), violations.end(), [](const ConeViolation& a, const ConeViolation& b) {
    if (a.violation != b.violation) return a.violation > b.violation;
    return a.cone < b.cone;
  });
  auto keep = static_cast<std::size_t>(std::ceil(config.rho * static_cast<double>(violations.size()) - 1e-12));
  keep = std::min({keep, config.max_cuts, violations.size()});
  std::vector<int> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(violations[i].cone);
  return out;
}

PoolRoundStats& CutPool::stats_for(int round) {
  if (history_.empty() || history_.back().round != round) history_.push_back({round, 0, 0, 0});
  return history_.back();
}

void CutPool::insert_sorted(Cut cut) {
  const auto key = sort_key(cut);
  auto it = std::upper_bound(cuts_.begin(), cuts_.end(), key,
                             [](const auto& k, const Cut& c) { return k < sort_key(c); });
  cuts_.insert(it, std::move(cut));
}

bool CutPool::admit(Cut cut, int round, double eps_par) {
  const auto same_cone = [&](const Cut& c) { return c.branch_id == cut.branch_id && c.kind == cut.kind; };
  auto first = std::lower_bound(cuts_.begin(), cuts_.end(), std::make_pair(cut.branch_id, static_cast<int>(cut.kind)),
                                [](const Cut& c, const std::pair<int, int>& k) {
                                  return std::make_pair(c.branch_id, static_cast<int>(c.kind)) < k;
                                });
  for (auto it = first; it != cuts_.end() && same_cone(*it); ++it) {
    double cosine = 0.0;
    for (int i = 0; i < cut.arity(); ++i) {
      cosine += it->unit_normal[static_cast<std::size_t>(i)] * cut.unit_normal[static_cast<std::size_t>(i)];
    }
    if (cosine >= 1.0 - eps_par) {
      ++stats_for(round).dropped_parallel;
      return false;
    }
  }
  cut.birth_round = round;
  cut.last_tight_round = round;
  insert_sorted(std::move(cut));
  ++stats_for(round).added;
  return true;
}

int CutPool::prune_aged(const ModelIR& model, std::span<const double> primal, int round, int t_age,
                        double tight_tol) {
  int dropped = 0;
  std::vector<Cut> kept;
  kept.reserve(cuts_.size());
  for (auto& cut : cuts_) {
    if (cut.birth_round < round) {
      const ConeDescriptor* cone = find_cone(model, cut.branch_id, cut.kind);
      if (cone) {
        const double slack = -cut.excess(primal, *cone);
        if (slack <= tight_tol) {
          cut.last_tight_round = round;
        } else if (t_age != kNeverAge && round - cut.last_tight_round >= t_age) {
          ++dropped;
          continue;
        }
      }
    }
    kept.push_back(std::move(cut));
  }
  cuts_ = std::move(kept);
  stats_for(round).dropped_aged += dropped;
  return dropped;
}

const ConeDescriptor* find_cone(const ModelIR& model, int branch_id, ConeKind kind) {
  // Cones are registered per branch in ascending branch id, three at a time.
  auto it = std::lower_bound(model.cones.begin(), model.cones.end(), std::make_pair(branch_id, static_cast<int>(kind)),
                             [](const ConeDescriptor& c, const std::pair<int, int>& k) {
                               return std::make_pair(c.branch_id, static_cast<int>(c.kind)) < k;
                             });
  if (it == model.cones.end() || it->branch_id != branch_id || it->kind != kind) return nullptr;
  return &*it;
}

ModelIR CutPool::with_cuts(const ModelIR& model) const {
  ModelIR out = model;
  int n = 0;
  for (const auto& cut : cuts_) {
    const ConeDescriptor* cone = find_cone(model, cut.branch_id, cut.kind);
    if (!cone) continue;
    std::vector<Term> terms;
    for (int i = 0; i < cut.arity(); ++i) {
      terms.push_back({cone->vars[static_cast<std::size_t>(i)], cut.coef[static_cast<std::size_t>(i)]});
    }
    out.add_row("cut_" + std::to_string(n++), std::move(terms), Sense::LessEqual, cut.rhs);
  }
  return out;
}

}  // namespace cppa

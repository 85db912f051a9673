// Linear outer approximation of the Jabr and current-limit cones.
//
// Every cone is x^2 + y^2 <= w z, rewritten as the second-order cone
// ||(2x, 2y, w - z)|| <= w + z. For a violating point with SOC vector u'
// the separating hyperplane farthest from the point is u'^T u <= ||u'|| t.
// Current-limit cones use w = multiplier * v2 and the constant z = 1.

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "cppa/model.hpp"

namespace cppa {

class CutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kCutStoreVersion = "cppa-cuts-v1";
inline constexpr int kNeverAge = std::numeric_limits<int>::max();

// Coefficients follow the cone's variable order: (c, s, v2_from, v2_to) for
// Jabr cones, (P, Q, v2) for current-limit cones. The row reads
// coef . vars <= rhs.
struct Cut {
  ConeKind kind = ConeKind::JabrRotated;
  int branch_id = 0;
  std::array<double, 4> coef{};
  double rhs = 0.0;
  std::array<double, 4> unit_normal{};
  int birth_round = 0;
  int last_tight_round = 0;

  int arity() const { return kind == ConeKind::JabrRotated ? 4 : 3; }
  // coef . point - rhs over the cone's variables; positive means violated.
  double excess(std::span<const double> point, const ConeDescriptor& cone) const;
};

// c^2 + s^2 - v2_k v2_m for Jabr cones, P^2 + Q^2 - multiplier * v2 for
// current limits. Positive means violated.
double cone_violation(std::span<const double> point, const ConeDescriptor& cone);

// SOC form of a cone at a point: the vector u = (2x, 2y, w - z) and t = w + z.
struct SocPoint {
  std::array<double, 3> u{};
  double t = 0.0;
};
SocPoint soc_form(std::span<const double> point, const ConeDescriptor& cone);

// Throws CutError when the point does not violate the cone by more than
// eps_viol, or when the SOC vector vanishes.
Cut max_distance_cut(std::span<const double> point, const ConeDescriptor& cone, double eps_viol = 0.0);

struct SelectionConfig {
  double eps_viol = 1e-5;
  double rho = 1.0;
  std::size_t max_cuts = std::numeric_limits<std::size_t>::max();
};

struct ConeViolation {
  int cone = 0;
  double violation = 0.0;
};

// Keeps violations above eps_viol, most violated first (ties to the lower
// cone id), then the top ceil(rho * eligible) capped at max_cuts.
std::vector<int> select_cuts(std::vector<ConeViolation> violations, const SelectionConfig& config);

struct PoolRoundStats {
  int round = 0;
  int added = 0;
  int dropped_parallel = 0;
  int dropped_aged = 0;
};

class CutPool {
 public:
  // Rejects the cut when an active cut on the same cone has unit-normal
  // cosine similarity >= 1 - eps_par.
  bool admit(Cut cut, int round, double eps_par = 1e-5);

  // Refreshes last_tight_round from the solution and drops cuts idle for
  // t_age rounds. Cuts born this round are not in the solved model and are
  // left alone. Returns the number dropped.
  int prune_aged(const ModelIR& model, std::span<const double> primal, int round, int t_age,
                 double tight_tol = 1e-6);

  const std::vector<Cut>& cuts() const { return cuts_; }
  std::size_t size() const { return cuts_.size(); }
  bool empty() const { return cuts_.empty(); }

  PoolRoundStats& stats_for(int round);
  const std::vector<PoolRoundStats>& history() const { return history_; }

  // Appends the pool as rows "cut_<n>" to a copy of `model`. Cuts whose cone
  // is absent from the model are skipped.
  ModelIR with_cuts(const ModelIR& model) const;

  // Cut order: branch id, cone kind, birth round, insertion order.
  void insert_sorted(Cut cut);

  // Bookkeeping for warm-start loads.
  int loaded = 0;
  int dropped_on_load = 0;

 private:
  std::vector<Cut> cuts_;
  std::vector<PoolRoundStats> history_;
};

// Cone descriptor of (branch, kind) in a model, or nullptr.
const ConeDescriptor* find_cone(const ModelIR& model, int branch_id, ConeKind kind);

void save_cuts(const CutPool& pool, const CaseData& data, const std::filesystem::path& path);
// Drops cuts on out-of-service branches and resets ages to round 0.
CutPool load_cuts(const std::filesystem::path& path, const CaseData& data);

}  // namespace cppa

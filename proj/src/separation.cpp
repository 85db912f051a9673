#include "cppa/separation.hpp"

#include <omp.h>

namespace cppa {

std::vector<double> score_cones(std::span<const double> point, std::span<const ConeDescriptor> cones,
                                Execution exec) {
  const auto n = static_cast<long>(cones.size());
  std::vector<double> out(cones.size());
  if (exec == Execution::Serial) {
    for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = cone_violation(point, cones[static_cast<std::size_t>(i)]);
    return out;
  }
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = cone_violation(point, cones[static_cast<std::size_t>(i)]);
  }
  return out;
}

std::vector<std::optional<Cut>> build_cuts(std::span<const double> point, std::span<const ConeDescriptor> cones,
                                           std::span<const int> selected, double eps_viol, Execution exec) {
  const auto n = static_cast<long>(selected.size());
  std::vector<std::optional<Cut>> out(selected.size());
  if (exec == Execution::Serial) {
    for (long i = 0; i < n; ++i) {
      const auto& cone = cones[static_cast<std::size_t>(selected[static_cast<std::size_t>(i)])];
      out[static_cast<std::size_t>(i)] = try_max_distance_cut(point, cone, eps_viol);
    }
    return out;
  }
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    const auto& cone = cones[static_cast<std::size_t>(selected[static_cast<std::size_t>(i)])];
    out[static_cast<std::size_t>(i)] = try_max_distance_cut(point, cone, eps_viol);
  }
  return out;
}

int separation_threads() { return omp_get_max_threads(); }

}  // namespace cppa

// Per-round separation kernels. Each cone is scored and cut independently,
// so both steps run as OpenMP loops; the serial variants are the reference
// the parallel ones are tested against. Outputs are written by cone
// position, which keeps results identical across thread counts.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cppa/cuts.hpp"

namespace cppa {

enum class Execution { Serial, Parallel };

// Non-throwing max_distance_cut; nullopt when the cone is satisfied or the
// SOC vector is degenerate.
std::optional<Cut> try_max_distance_cut(std::span<const double> point, const ConeDescriptor& cone,
                                        double eps_viol);

std::vector<double> score_cones(std::span<const double> point, std::span<const ConeDescriptor> cones,
                                Execution exec = Execution::Parallel);

// One entry per `selected` cone index, in order.
std::vector<std::optional<Cut>> build_cuts(std::span<const double> point, std::span<const ConeDescriptor> cones,
                                           std::span<const int> selected, double eps_viol,
                                           Execution exec = Execution::Parallel);

int separation_threads();

}  // namespace cppa

// Small in-code market cases shared by the test binaries.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cppa/netio.hpp"

namespace fx {

inline std::filesystem::path data_path(const std::string& name) { return std::filesystem::path(TEST_DATA_DIR) / name; }

inline cppa::Bus bus(int id, double vmin = 0.9, double vmax = 1.1) { return {id, vmin, vmax}; }

inline cppa::Branch branch(int id, int from, int to, double r, double x, double limit_sq = 4.0, double b_c = 0.0,
                           double angle = 0.5) {
  cppa::Branch b;
  b.id = id;
  b.from_bus = from;
  b.to_bus = to;
  b.r = r;
  b.x = x;
  b.b_c = b_c;
  b.max_angle_diff = angle;
  b.current_limit_sq = limit_sq;
  return b;
}

inline cppa::Generator gen(int id, int bus, double pmax, std::vector<cppa::BidSegment> cost, double pmin = 0.0,
                           double qlim = 1.0) {
  cppa::Generator g;
  g.id = id;
  g.bus = bus;
  g.pmin = pmin;
  g.pmax = pmax;
  g.qmin = -qlim;
  g.qmax = qlim;
  g.cost_segments = std::move(cost);
  g.initial_on = true;
  return g;
}

// Zero-cost reactive support: output pinned to p = 0, q in [-qlim, qlim].
inline cppa::Generator condenser(int id, int bus, double qlim = 1.0) {
  return gen(id, bus, 0.0, {{1.0, 0.0}}, 0.0, qlim);
}

inline cppa::Load load(int id, int bus, double pmax, std::vector<cppa::BidSegment> benefit, double gamma = 0.0) {
  cppa::Load l;
  l.id = id;
  l.bus = bus;
  l.pmax = pmax;
  l.benefit_segments = std::move(benefit);
  l.power_factor_ratio = gamma;
  return l;
}

inline cppa::CaseData finalize(cppa::CaseData c) {
  cppa::finalize_case(c);
  return c;
}

// gen mc 10 at bus 1, load mb 50 pmax 0.5 at bus 2.
inline cppa::CaseData two_bus(double r = 0.0, double limit_sq = 4.0) {
  cppa::CaseData c;
  c.base_mva = 100.0;
  c.buses = {bus(1), bus(2)};
  c.branches = {branch(1, 1, 2, r, 0.1, limit_sq)};
  c.generators = {gen(1, 1, 1.0, {{1.0, 10.0}})};
  c.loads = {load(1, 2, 0.5, {{0.5, 50.0}})};
  c.generators.push_back(condenser(2, 2));
  return finalize(c);
}

// DC-congestion fixture: cheap gen at bus 1, expensive gen and load at bus 2.
inline cppa::CaseData two_bus_two_gens(double limit_sq) {
  cppa::CaseData c;
  c.base_mva = 100.0;
  c.buses = {bus(1), bus(2)};
  c.branches = {branch(1, 1, 2, 0.0, 0.1, limit_sq)};
  c.generators = {gen(1, 1, 1.0, {{1.0, 10.0}}), gen(2, 2, 1.0, {{1.0, 30.0}})};
  c.loads = {load(1, 2, 0.5, {{0.5, 50.0}})};
  return finalize(c);
}

// Lossy triangle. Each load bus has a condenser so any AC operating point
// maps to a unique dispatch.
inline cppa::CaseData three_bus_grid() {
  cppa::CaseData c;
  c.base_mva = 100.0;
  c.buses = {bus(1, 0.95, 1.05), bus(2, 0.95, 1.05), bus(3, 0.95, 1.05)};
  c.branches = {branch(1, 1, 2, 0.02, 0.2, 4.0, 0.02), branch(2, 2, 3, 0.02, 0.2, 0.16, 0.02),
                branch(3, 1, 3, 0.03, 0.25, 4.0, 0.02)};
  c.generators = {gen(1, 1, 2.0, {{2.0, 10.0}}, 0.0, 2.0), condenser(2, 2), condenser(3, 3)};
  c.loads = {load(1, 2, 0.6, {{0.6, 40.0}}), load(2, 3, 0.8, {{0.8, 60.0}})};
  return finalize(c);
}

inline cppa::CaseData from_file(const std::string& name) { return cppa::parse_case(data_path(name)); }

}  // namespace fx

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

#include "cppa/model.hpp"
#include "cppa/solver.hpp"
#include "fixtures.hpp"
#include "solver_oracles.hpp"

using namespace cppa;

TEST_CASE("single-row lp") {
  ModelIR m;
  const int x = m.add_variable("x", 0.0, 10.0, 1.0);
  m.add_row("cap", {{x, 1.0}}, Sense::LessEqual, 3.0);
  const auto sol = solve_lp(m);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.primal[0] == doctest::Approx(3.0));
  CHECK(sol.duals[0] == doctest::Approx(1.0));
  CHECK(sol.reduced_costs[0] == doctest::Approx(0.0));
}

TEST_CASE("binding >= row in a maximization has a nonpositive dual") {
  ModelIR m;
  const int x = m.add_variable("x", 0.0, 10.0, -2.0);
  m.add_row("floor", {{x, 1.0}}, Sense::GreaterEqual, 4.0);
  const auto sol = solve_lp(m);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.primal[0] == doctest::Approx(4.0));
  CHECK(sol.duals[0] == doctest::Approx(-2.0));
}

TEST_CASE("uncongested dc duals equal the marginal cost") {
  const auto m = build_dc_welfare(fx::two_bus());
  const auto sol = solve_lp(m);
  REQUIRE(sol.status == LpStatus::Optimal);
  for (const auto& b : m.index.buses) {
    CHECK(sol.duals[static_cast<std::size_t>(b.p_balance)] / m.base_mva == doctest::Approx(10.0));
  }
}

TEST_CASE("infeasible box") {
  ModelIR m;
  m.add_variable("x", 2.0, 1.0, 1.0);
  CHECK(solve_lp(m).status == LpStatus::Infeasible);
}

TEST_CASE("infeasible rows") {
  ModelIR m;
  const int x = m.add_variable("x", 0.0, kInf, 1.0);
  const int y = m.add_variable("y", 0.0, kInf, 1.0);
  m.add_row("a", {{x, 1.0}, {y, 1.0}}, Sense::LessEqual, 1.0);
  m.add_row("b", {{x, 1.0}, {y, 1.0}}, Sense::GreaterEqual, 2.0);
  CHECK(solve_lp(m).status == LpStatus::Infeasible);
}

TEST_CASE("unbounded ray") {
  ModelIR m;
  const int x = m.add_variable("x", 0.0, kInf, 1.0);
  const int y = m.add_variable("y", -kInf, kInf, 0.0);
  m.add_row("a", {{x, 1.0}, {y, -1.0}}, Sense::LessEqual, 1.0);
  CHECK(solve_lp(m).status == LpStatus::Unbounded);
}

TEST_CASE("free variables and equalities") {
  ModelIR m;
  const int x = m.add_variable("x", -kInf, kInf, 1.0);
  const int y = m.add_variable("y", -kInf, kInf, -1.0);
  m.add_row("sum", {{x, 1.0}, {y, 1.0}}, Sense::Equal, 2.0);
  m.add_row("cap", {{x, 1.0}}, Sense::LessEqual, 5.0);
  const auto sol = solve_lp(m);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.primal[0] == doctest::Approx(5.0));
  CHECK(sol.primal[1] == doctest::Approx(-3.0));
  CHECK(sol.objective == doctest::Approx(8.0));
}

TEST_CASE("iteration cap") {
  LpOptions opts;
  opts.iteration_limit = 1;
  const auto sol = solve_lp(build_cp_welfare(fx::from_file("three_bus.json")), nullptr, opts);
  CHECK(sol.status == LpStatus::IterationLimit);
}

TEST_CASE("beale cycling example terminates") {
  const auto m = oracle::beale();
  for (bool bland : {true, false}) {
    LpOptions opts;
    opts.allow_bland = bland;
    opts.bland_after = 1;
    const auto sol = solve_lp(m, nullptr, opts);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(1.25).epsilon(1e-12));
  }
}

TEST_CASE("kkt conditions hold on random lps") {
  std::mt19937_64 rng(11);
  int optimal = 0;
  for (int t = 0; t < 200; ++t) {
    const auto m = oracle::random_lp(rng);
    const auto sol = solve_lp(m);
    if (sol.status != LpStatus::Optimal) continue;
    ++optimal;
    const auto k = check_kkt(m, sol);
    CHECK(k.primal_residual <= 1e-7);
    CHECK(k.dual_residual <= 1e-7);
    CHECK(k.complementarity <= 1e-6);
    CHECK(k.relative_gap <= 1e-6);
  }
  CHECK(optimal >= 100);
}

TEST_CASE("kkt conditions hold on welfare models") {
  for (const auto& data : {fx::two_bus(), fx::three_bus_grid(), fx::from_file("three_bus.json"),
                           fx::from_file("four_bus_ring.json"), fx::from_file("case3_matpower.m")}) {
    for (const auto& m : {build_cp_welfare(data), build_dc_welfare(data)}) {
      const auto sol = solve_lp(m);
      REQUIRE(sol.status == LpStatus::Optimal);
      const auto k = check_kkt(m, sol);
      CHECK(k.primal_residual <= 1e-7);
      CHECK(k.dual_residual <= 1e-7);
      CHECK(k.complementarity <= 1e-6);
      CHECK(k.relative_gap <= 1e-6);
    }
  }
}

TEST_CASE("warm start reaches the same objective") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 60; ++t) {
    const auto m = oracle::random_lp(rng);
    const auto cold = solve_lp(m);
    if (cold.status != LpStatus::Optimal) continue;
    const auto warm = solve_lp(m, &cold.basis);
    REQUIRE(warm.status == LpStatus::Optimal);
    CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-8));
    CHECK(warm.iterations <= 1);
    // A scrambled hint still has to land on the optimum.
    Basis noisy = cold.basis;
    std::shuffle(noisy.columns.begin(), noisy.columns.end(), rng);
    const auto rough = solve_lp(m, &noisy);
    REQUIRE(rough.status == LpStatus::Optimal);
    CHECK(rough.objective == doctest::Approx(cold.objective).epsilon(1e-8));
  }
}

TEST_CASE("identical input gives identical output") {
  const auto m = build_cp_welfare(fx::from_file("four_bus_ring.json"));
  const auto a = solve_lp(m), b = solve_lp(m);
  CHECK(a.primal == b.primal);
  CHECK(a.duals == b.duals);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("milp without binaries matches the lp") {
  ModelIR m;
  const int x = m.add_variable("x", 0.0, 4.0, 3.0);
  const int y = m.add_variable("y", 0.0, 4.0, 2.0);
  m.add_row("r", {{x, 1.0}, {y, 1.0}}, Sense::LessEqual, 5.0);
  const auto lp = solve_lp(m);
  const auto ip = solve_milp(m);
  REQUIRE(ip.status == MilpStatus::Optimal);
  CHECK(ip.objective == doctest::Approx(lp.objective));
  CHECK(ip.nodes == 1);
}

TEST_CASE("prohibitive start-up keeps the unit off") {
  auto data = fx::two_bus();
  data.generators[0].initial_on = false;
  data.generators[0].startup_cost = 1e6;
  const auto m = build_dc_welfare(data);
  const auto sol = solve_milp(m);
  REQUIRE(sol.status == MilpStatus::Optimal);
  CHECK(sol.primal[static_cast<std::size_t>(m.index.generators[0].on)] == doctest::Approx(0.0));
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("identical units: the lower id is committed") {
  CaseData c;
  c.base_mva = 100.0;
  c.buses = {fx::bus(1), fx::bus(2)};
  c.branches = {fx::branch(1, 1, 2, 0.0, 0.1)};
  for (int id : {1, 2}) {
    auto g = fx::gen(id, 1, 1.0, {{1.0, 10.0}});
    g.initial_on = false;
    g.no_load_cost = 50.0;
    c.generators.push_back(g);
  }
  c.loads = {fx::load(1, 2, 0.5, {{0.5, 50.0}})};
  c = fx::finalize(c);
  const auto m = build_dc_welfare(c);
  const auto sol = solve_milp(m);
  REQUIRE(sol.status == MilpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(2000.0 - 50.0));
  CHECK(sol.primal[static_cast<std::size_t>(m.index.generators[0].on)] == doctest::Approx(1.0));
  CHECK(sol.primal[static_cast<std::size_t>(m.index.generators[1].on)] == doctest::Approx(0.0));
  CHECK(oracle::enumerate_binaries(m).objective == doctest::Approx(sol.objective).epsilon(1e-12));
}

TEST_CASE("branch and bound matches enumeration") {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 25; ++t) {
    const auto data = oracle::random_uc_case(rng, 1 + t % 4);
    const auto m = build_dc_welfare(data);
    const auto bb = solve_milp(m);
    const auto en = oracle::enumerate_binaries(m);
    REQUIRE(en.feasible == (bb.status != MilpStatus::Infeasible));
    if (!en.feasible) continue;
    CHECK(std::abs(bb.objective - en.objective) <= 1e-9 * std::max(1.0, std::abs(en.objective)));
    CHECK(bb.bound >= bb.objective - 1e-9);
    for (const auto& v : m.variables) {
      if (!v.binary) continue;
      const double x = bb.primal[static_cast<std::size_t>(&v - m.variables.data())];
      CHECK(std::abs(x - std::round(x)) <= 1e-6);
    }
  }
}

TEST_CASE("fixing the optimal commitment reproduces the milp objective") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto m = build_dc_welfare(oracle::random_uc_case(rng, 3));
    const auto bb = solve_milp(m);
    if (bb.status == MilpStatus::Infeasible) continue;
    const auto fixed = fix_binaries(m, bb.primal);
    CHECK(fixed.binary_count() == 0);
    CHECK(fixed.variables.size() == m.variables.size());
    CHECK(fixed.rows.size() == m.rows.size());
    const auto lp = solve_lp(fixed);
    REQUIRE(lp.status == LpStatus::Optimal);
    CHECK(lp.objective == doctest::Approx(bb.objective).epsilon(1e-6));
  }
}

TEST_CASE("fix_binaries rejects fractional values") {
  const auto m = build_dc_welfare(fx::two_bus());
  std::vector<double> values(m.variables.size(), 0.5);
  CHECK_THROWS_AS(fix_binaries(m, values), SolverError);
}

TEST_CASE("committing nothing strands the demand") {
  auto data = fx::two_bus();
  data.loads[0].benefit_segments = {{0.5, 50.0}};
  auto m = build_dc_welfare(data);
  // Force the load to consume; with every unit off the balance cannot hold.
  m.variables[static_cast<std::size_t>(m.index.loads[0].p)].lower = 0.5;
  std::vector<double> values(m.variables.size(), 0.0);
  for (const auto& g : m.index.generators) values[static_cast<std::size_t>(g.sd)] = 1.0;
  const auto fixed = fix_binaries(m, values);
  CHECK(solve_lp(fixed).status == LpStatus::Infeasible);
}

TEST_CASE("node limit") {
  std::mt19937_64 rng(29);
  MilpOptions opts;
  opts.node_limit = 1;
  int checked = 0;
  for (int t = 0; t < 20 && checked < 3; ++t) {
    const auto m = build_dc_welfare(oracle::random_uc_case(rng, 4));
    const auto root = solve_lp(m);
    if (root.status != LpStatus::Optimal) continue;
    bool fractional = false;
    for (std::size_t j = 0; j < m.variables.size(); ++j) {
      if (m.variables[j].binary && std::abs(root.primal[j] - std::round(root.primal[j])) > 1e-6) fractional = true;
    }
    if (!fractional) continue;
    ++checked;
    CHECK_THROWS_AS(solve_milp(m, opts), NodeLimitError);
  }
  CHECK(checked > 0);
}

TEST_CASE("basis dump") {
  const auto m = build_dc_welfare(fx::two_bus());
  const auto sol = solve_lp(m);
  std::ostringstream out;
  write_basis(m, sol.basis, out);
  CHECK(out.str().find("bal_p_1") != std::string::npos);
}

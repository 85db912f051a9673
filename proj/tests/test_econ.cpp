#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "cppa/econ.hpp"
#include "cppa/model.hpp"
#include "cppa/pricing.hpp"
#include "econ_fixtures.hpp"
#include "fixtures.hpp"

using namespace cppa;

namespace {

// Brute-force best response: dense grid over output, both commitment
// states, startup/shutdown linked to the initial state.
double grid_best(const Generator& g, double price, double base, std::optional<bool> fixed_on = std::nullopt) {
  double best = -kInf;
  for (int on = 0; on <= 1; ++on) {
    if (fixed_on && *fixed_on != (on == 1)) continue;
    GeneratorDispatch d;
    d.on = on;
    d.su = on && !g.initial_on ? 1.0 : 0.0;
    d.sd = !on && g.initial_on ? 1.0 : 0.0;
    if (!on) {
      best = std::max(best, direct_utility(g, d, price, base));
      continue;
    }
    const int n = 20000;
    for (int i = 0; i <= n; ++i) {
      d.p = g.pmin + (g.pmax - g.pmin) * i / n;
      best = std::max(best, direct_utility(g, d, price, base));
    }
  }
  return best;
}

double grid_best(const Load& l, double price, double base) {
  double best = -kInf;
  const int n = 20000;
  for (int i = 0; i <= n; ++i) {
    LoadDispatch d;
    d.p = l.pmax * i / n;
    best = std::max(best, direct_utility(l, d, price, base));
  }
  return best;
}

}  // namespace

TEST_CASE("direct utility examples") {
  auto g = fx::gen(1, 1, 1.0, {{1.0, 10.0}});
  GeneratorDispatch d{1, 0.5, 0.0, 1.0, 0.0, 0.0};
  CHECK(direct_utility(g, d, 20.0, 100.0) == doctest::Approx(500.0));

  const auto l = fx::load(1, 1, 1.0, {{1.0, 50.0}});
  CHECK(direct_utility(l, LoadDispatch{1, 0.0, 0.0}, 30.0, 100.0) == 0.0);
  CHECK(direct_utility(l, LoadDispatch{1, 0.4, 0.0}, 30.0, 100.0) == doctest::Approx(800.0));

  g.startup_cost = 1000.0;
  g.initial_on = false;
  d.su = 1.0;
  CHECK(direct_utility(g, d, 10.0, 100.0) == doctest::Approx(-1000.0));
}

TEST_CASE("make-whole example") {
  CaseData c;
  c.base_mva = 100.0;
  c.buses = {fx::bus(1)};
  c.generators = {fx::gen(1, 1, 1.0, {{1.0, 20.0}})};
  c.generators[0].initial_on = false;
  c = fx::finalize(c);
  Allocation z;
  z.generators = {{1, 0.1, 0.0, 1.0, 1.0, 0.0}};
  const std::vector<double> prices{10.0};
  const auto rep = efficiency_metrics(c, z, z, prices);
  CHECK(rep.agents[0].utility_phi == doctest::Approx(-100.0));
  CHECK(rep.mwp == doctest::Approx(100.0));
  CHECK(rep.gloc >= 100.0 - 1e-9);
  CHECK(rep.gloc == doctest::Approx(100.0));
  // Committed on: the best on-response is p = 0 with utility 0.
  CHECK(rep.lloc == doctest::Approx(100.0));
  CHECK(rep.rdc == 0.0);
}

TEST_CASE("best responses match a dense grid") {
  // The grid never beats the exact response and trails it by at most one
  // step times the steepest utility slope (80 $/MWh at base 100).
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> price(0.0, 80.0);
  auto close = [](double exact, double grid, double range) {
    return grid <= exact + 1e-9 && exact - grid <= range / 20000.0 * 80.0 * 100.0;
  };
  for (int k = 0; k < 100; ++k) {
    const auto f = fx::random_market(rng);
    const double lam = price(rng);
    for (const auto& g : f.data.generators) {
      const double range = g.pmax - g.pmin;
      CHECK(close(best_response_global(g, lam, 100.0), grid_best(g, lam, 100.0), range));
      for (bool on : {false, true}) CHECK(close(best_response_local(g, on, lam, 100.0), grid_best(g, lam, 100.0, on), range));
    }
    for (const auto& l : f.data.loads) CHECK(close(best_response(l, lam, 100.0), grid_best(l, lam, 100.0), l.pmax));
  }
}

TEST_CASE("metric invariants on random fixtures") {
  std::mt19937_64 rng(13);
  for (int k = 0; k < 100; ++k) {
    const auto f = fx::random_market(rng);
    const auto rep = efficiency_metrics(f.data, f.z, f.phi, f.prices);
    CHECK(rep.mwp >= 0.0);
    CHECK(rep.rdc >= 0.0);
    CHECK(rep.lloc >= 0.0);
    CHECK(rep.gloc >= rep.lloc);
    for (const auto& a : rep.agents) {
      CHECK(a.gloc >= a.lloc);
      CHECK(a.lloc >= 0.0);
      // sup = gloc + u; when it is nonnegative, sup - u >= [-u]+. Units
      // that start on pay shutdown to go off, so sup can be negative.
      if (a.gloc + a.utility_phi >= 0.0) CHECK(a.gloc >= a.mwp - 1e-9);
      if (!a.generator) CHECK(a.gloc + a.utility_phi >= 0.0);
    }
    CHECK(efficiency_metrics(f.data, f.phi, f.phi, f.prices).rdc == 0.0);
    CHECK(rep.welfare == doctest::Approx(welfare(f.data, f.phi)));
  }
}

TEST_CASE("competitive equilibrium has no losses") {
  const auto data = fx::two_bus_two_gens(0.09);
  const auto r = run_dc(data, CppaConfig{});
  REQUIRE(r.has_prices());
  const auto rep = efficiency_metrics(data, r.allocation, r.allocation, r.prices_p);
  CHECK(std::abs(rep.mwp) <= 1e-9);
  CHECK(std::abs(rep.gloc) <= 1e-9);
  CHECK(std::abs(rep.lloc) <= 1e-9);
  CHECK(rep.rdc == 0.0);
  CHECK(rep.welfare == doctest::Approx(r.objective));
}

TEST_CASE("metric inputs are checked") {
  const auto f = [] {
    std::mt19937_64 rng(1);
    return fx::random_market(rng);
  }();
  CHECK_THROWS_AS(efficiency_metrics(f.data, f.z, f.phi, std::vector<double>{1.0}), EconError);
  auto short_phi = f.phi;
  short_phi.loads.pop_back();
  CHECK_THROWS_AS(efficiency_metrics(f.data, f.z, short_phi, f.prices), EconError);
}

TEST_CASE("price distance") {
  CHECK(price_distance(std::vector<double>{1, 2}, std::vector<double>{1, 3}) == 0.5);
  CHECK(price_distance(std::vector<double>{4, 5, 6}, std::vector<double>{4, 5, 6}) == 0.0);
  CHECK_THROWS_AS(price_distance(std::vector<double>{1}, std::vector<double>{1, 2}), EconError);

  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> a(7), b(7), c(7);
    for (int i = 0; i < 7; ++i) a[i] = u(rng), b[i] = u(rng), c[i] = u(rng);
    CHECK(price_distance(a, b) == price_distance(b, a));
    CHECK(price_distance(a, c) <= price_distance(a, b) + price_distance(b, c) + 1e-12);
    CHECK(price_distance(a, b) > 0.0);
    CHECK(price_distance(a, a) == 0.0);
  }
}

TEST_CASE("ac residual flows") {
  const auto data = fx::three_bus_grid();
  const std::size_t n = data.buses.size();
  const std::vector<double> zero(n, 0.0), one(n, 1.0);

  SUBCASE("flat start") {
    const auto rep = ac_residual(data, one, zero, zero, zero);
    for (std::size_t i = 0; i < data.branches.size(); ++i) {
      const auto& y = data.branches[i].y;
      CHECK(rep.branches[i].p_from == doctest::Approx(y.g_kk + y.g_km));
      CHECK(rep.branches[i].q_from == doctest::Approx(-y.b_kk - y.b_km));
    }
  }
  SUBCASE("complex power oracle") {
    // S_km = V_k conj(I_km) with the pi-model current.
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> vm(0.95, 1.05), va(-0.2, 0.2);
    for (int k = 0; k < 50; ++k) {
      std::vector<double> m(n), a(n);
      for (std::size_t i = 0; i < n; ++i) m[i] = vm(rng), a[i] = va(rng);
      const auto rep = ac_residual(data, m, a, zero, zero);
      for (std::size_t i = 0; i < data.branches.size(); ++i) {
        const auto& br = data.branches[i];
        const auto f = data.bus_index(br.from_bus), t = data.bus_index(br.to_bus);
        const std::complex<double> vf = std::polar(m[f], a[f]), vt = std::polar(m[t], a[t]);
        const std::complex<double> ys = 1.0 / std::complex<double>(br.r, br.x), ysh(0.0, br.b_c / 2.0);
        const auto sf = vf * std::conj((ys + ysh) * vf - ys * vt);
        const auto st = vt * std::conj((ys + ysh) * vt - ys * vf);
        CHECK(rep.branches[i].p_from == doctest::Approx(sf.real()).epsilon(1e-12));
        CHECK(rep.branches[i].q_from == doctest::Approx(sf.imag()).epsilon(1e-12));
        CHECK(rep.branches[i].p_to == doctest::Approx(st.real()).epsilon(1e-12));
        CHECK(rep.branches[i].q_to == doctest::Approx(st.imag()).epsilon(1e-12));
      }
    }
  }
  SUBCASE("consistent injections balance") {
    const std::vector<double> m{1.02, 0.98, 1.0}, a{0.0, -0.05, -0.08};
    const auto flows = ac_residual(data, m, a, zero, zero);
    // With zero injections the mismatch equals the net outgoing flow.
    const auto rep = ac_residual(data, m, a, flows.p_mismatch, flows.q_mismatch);
    CHECK(rep.max_mismatch <= 1e-15);
  }
  SUBCASE("limits") {
    const std::vector<double> a{0.0, 0.0, 0.6};
    const auto rep = ac_residual(data, one, a, zero, zero);
    CHECK(rep.branches[2].angle_slack == doctest::Approx(-0.1));
    CHECK(rep.max_limit_violation >= 0.1 - 1e-12);
    CHECK_FALSE(rep.feasible(1e-6));
    const std::vector<double> low{1.0, 0.9, 1.0};
    CHECK(ac_residual(data, low, zero, zero, zero).voltage_slack[1] == doctest::Approx(-0.05));
  }
  CHECK_THROWS_AS(ac_residual(data, one, zero, zero, std::vector<double>{0.0}), EconError);
}

TEST_CASE("lossless branches are antisymmetric") {
  const auto data = fx::two_bus();
  for (double th : {-0.3, -0.01, 0.0, 0.02, 0.25}) {
    const std::vector<double> m{1.03, 0.97}, a{th, 0.0}, zero{0.0, 0.0};
    const auto rep = ac_residual(data, m, a, zero, zero);
    CHECK(std::abs(rep.branches[0].p_from + rep.branches[0].p_to) <= 1e-12);
  }
}

TEST_CASE("allocation files") {
  const auto data = fx::from_file("three_bus.json");
  const auto r = run_dc(data, CppaConfig{});
  auto alloc = r.allocation;
  alloc.buses[1].vm = 1.01;
  alloc.buses[1].va = -0.02;
  const auto doc = allocation_to_json(alloc);
  CHECK(doc["version"] == kAllocationVersion);
  const auto back = allocation_from_json(doc, data);
  REQUIRE(back.generators.size() == alloc.generators.size());
  for (std::size_t i = 0; i < alloc.generators.size(); ++i) {
    CHECK(back.generators[i].p == alloc.generators[i].p);
    CHECK(back.generators[i].on == alloc.generators[i].on);
  }
  CHECK(back.buses[1].vm == 1.01);
  CHECK_FALSE(back.buses[0].vm.has_value());

  auto shuffled = doc;
  std::swap(shuffled["loads"][0], shuffled["loads"][1]);
  CHECK(allocation_from_json(shuffled, data).loads[0].id == data.loads[0].id);

  auto bad = doc;
  bad["version"] = "cppa-alloc-v0";
  CHECK_THROWS_AS(allocation_from_json(bad, data), EconError);
  bad = doc;
  bad["generators"][0]["on"] = 0.5;
  CHECK_THROWS_AS(allocation_from_json(bad, data), EconError);
  bad = doc;
  bad["generators"].erase(0);
  CHECK_THROWS_AS(allocation_from_json(bad, data), EconError);
  bad = doc;
  bad["loads"][0]["p"] = "x";
  CHECK_THROWS_AS(allocation_from_json(bad, data), EconError);
  CHECK_THROWS_AS(load_allocation(fx::data_path("missing.json"), data), EconError);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cppa/scenario.hpp"
#include "fixtures.hpp"

using namespace cppa;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("cppa_scenario_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(CPPA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json report(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "report.json")); }

std::string arg(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST_CASE("dc run writes uniform prices") {
  const auto out = scratch("dc");
  CHECK(cli("--case " + arg(fx::data_path("two_bus.json")) + " --model dc --out-dir " + arg(out)) == 0);
  const auto data = fx::from_file("two_bus.json");
  const auto prices = read_prices_csv(out / "prices.csv", data);
  REQUIRE(prices.size() == 2);
  CHECK(prices[0] == doctest::Approx(10.0));
  CHECK(prices[1] == doctest::Approx(10.0));
  const auto rep = report(out);
  CHECK(rep["version"] == kReportVersion);
  CHECK(rep["status"] == "Optimal");
  CHECK(rep["rounds"] == 1);
  CHECK(rep["price_p_std"].get<double>() <= 1e-9);
  CHECK(fs::exists(out / "allocation.json"));
  CHECK(slurp(out / "prices.csv").rfind("bus_id,price_p,price_q\n", 0) == 0);
}

TEST_CASE("cut store warm start through the cli") {
  const auto out = scratch("warm");
  const auto cold_dir = out / "cold", warm_dir = out / "warm";
  const auto store = out / "cuts.json";
  const auto c = arg(fx::data_path("three_bus.json"));
  REQUIRE(cli("--case " + c + " --cuts-out " + arg(store) + " --out-dir " + arg(cold_dir)) == 0);
  REQUIRE(cli("--case " + c + " --cuts-in " + arg(store) + " --max-rounds 1 --out-dir " + arg(warm_dir)) == 0);
  const auto cold = report(cold_dir), warm = report(warm_dir);
  CHECK(warm["rounds"] == 1);
  const double zc = cold["objective"].get<double>(), zw = warm["objective"].get<double>();
  CHECK(std::abs(zc - zw) <= 1e-6 * std::abs(zc));
  CHECK(warm["cuts"]["loaded"].get<int>() == cold["cuts"]["final_pool"].get<int>());
}

TEST_CASE("islanding contingency") {
  const auto out = scratch("island");
  std::ofstream(out / "outage.json") << "[1]";
  CHECK(cli("--case " + arg(fx::data_path("two_bus.json")) + " --contingency " + arg(out / "outage.json") +
            " --out-dir " + arg(out)) == 2);
  const auto rep = report(out);
  CHECK(rep["status"] == "Infeasible");
  CHECK(rep["termination"] == "islanded");
  // Header only.
  CHECK(slurp(out / "prices.csv") == "bus_id,price_p,price_q\n");
}

TEST_CASE("outputs are reproducible") {
  const auto a = scratch("repro_a"), b = scratch("repro_b");
  const auto c = arg(fx::data_path("four_bus_ring.json"));
  REQUIRE(cli("--case " + c + " --rule ip --dump-model --dump-basis --out-dir " + arg(a)) == 0);
  REQUIRE(cli("--case " + c + " --rule ip --dump-model --dump-basis --out-dir " + arg(b)) == 0);
  for (const char* f : {"prices.csv", "allocation.json", "model.lp", "basis.txt"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
  }
  // Wall-clock timings are the only field allowed to differ.
  auto ra = report(a), rb = report(b);
  ra.erase("timing");
  rb.erase("timing");
  CHECK(ra == rb);
  for (const auto& dir : {a, b}) {
    for (const char* f : {"prices.csv", "allocation.json", "report.json"}) {
      const auto text = slurp(dir / f);
      CHECK(text.find("nan") == std::string::npos);
      CHECK(text.find("inf") == std::string::npos);
    }
  }
}

TEST_CASE("reference prices and redispatch inputs") {
  const auto out = scratch("reference");
  const auto c = arg(fx::data_path("three_bus.json"));
  REQUIRE(cli("--case " + c + " --out-dir " + arg(out / "ref")) == 0);
  REQUIRE(cli("--case " + c + " --model dc --rule ip --reference-prices " + arg(out / "ref" / "prices.csv") +
              " --phi " + arg(out / "ref" / "../dc_phi.json") + " --out-dir " + arg(out / "dc")) == 1);

  // A DC IP run gives integral commitments, usable as phi.
  REQUIRE(cli("--case " + c + " --model dc --rule ip --out-dir " + arg(out / "phi")) == 0);
  REQUIRE(cli("--case " + c + " --model dc --rule ip --reference-prices " + arg(out / "ref" / "prices.csv") +
              " --phi " + arg(out / "phi" / "allocation.json") + " --out-dir " + arg(out / "dc")) == 0);
  const auto rep = report(out / "dc");
  CHECK(rep["phi_source"] == "file");
  CHECK(rep["delta"].get<double>() > 0.0);
  CHECK(rep["efficiency"]["rdc"].get<double>() == 0.0);
  const auto data = fx::from_file("three_bus.json");
  const auto ref = read_prices_csv(out / "ref" / "prices.csv", data);
  const auto dc = read_prices_csv(out / "dc" / "prices.csv", data);
  double d = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) d += std::abs(ref[i] - dc[i]) / static_cast<double>(ref.size());
  CHECK(rep["delta"].get<double>() == doctest::Approx(d).epsilon(1e-8));
}

TEST_CASE("bad inputs exit with 1") {
  const auto out = scratch("bad");
  std::ofstream(out / "broken.json") << "{\"version\": \"cppa-case-v1\", \"buses\": [";
  CHECK(cli("--case " + arg(out / "broken.json") + " --out-dir " + arg(out)) == 1);
  CHECK(cli("--case " + arg(out / "missing.json")) == 1);
  CHECK(cli("--case " + arg(fx::data_path("two_bus.json")) + " --model ac") != 0);
  CHECK(cli("--case " + arg(fx::data_path("two_bus.json")) + " --rho 2") != 0);
  CHECK(cli("--case " + arg(fx::data_path("two_bus.json")) + " --model dc --cuts-in " +
            arg(fx::data_path("two_bus.json")) + " --out-dir " + arg(out)) == 1);
  std::ofstream(out / "prices.csv") << "bus_id,price_p,price_q\n1,3.0,\n";
  CHECK(cli("--case " + arg(fx::data_path("two_bus.json")) + " --reference-prices " + arg(out / "prices.csv") +
            " --out-dir " + arg(out / "run")) == 1);
}

TEST_CASE("several cases run as jobs") {
  const auto out = scratch("jobs");
  const std::string cases = " --case " + arg(fx::data_path("two_bus.json")) + " --case " +
                            arg(fx::data_path("three_bus.json")) + " --case " +
                            arg(fx::data_path("four_bus_ring.json"));
  REQUIRE(cli(cases + " --jobs 3 --out-dir " + arg(out / "par")) == 0);
  REQUIRE(cli(cases + " --jobs 1 --out-dir " + arg(out / "ser")) == 0);
  for (const char* stem : {"two_bus", "three_bus", "four_bus_ring"}) {
    CAPTURE(stem);
    CHECK(slurp(out / "par" / stem / "prices.csv") == slurp(out / "ser" / stem / "prices.csv"));
    CHECK_FALSE(slurp(out / "par" / stem / "prices.csv").empty());
  }
}

TEST_CASE("time limit exit code") {
  const auto out = scratch("clock");
  CHECK(cli("--case " + arg(fx::data_path("three_bus.json")) + " --time-limit 1e-9 --out-dir " + arg(out)) == 3);
  CHECK(report(out)["status"] == "TimeLimit");
}

TEST_CASE("library entry point") {
  RunSpec spec;
  spec.case_path = fx::data_path("case3_matpower.m");
  spec.model = ModelKind::DC;
  spec.out_dir = scratch("library");
  const auto o = run_scenario(spec);
  CHECK(o.exit_code == 0);
  CHECK(o.status == "Optimal");
  CHECK(o.report["objective"].get<double>() == doctest::Approx(79060.0));

  spec.cuts_in = fx::data_path("two_bus.json");
  CHECK_THROWS(spec.validate());
  CHECK(run_scenario(spec).exit_code == 1);
}

// cppa: price one or more market cases.
//
//   cppa --case case.json --model cp --rule ip --out-dir out/
//
// With several --case values each scenario writes into out-dir/<case stem>/.

#include <cstdio>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cppa/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cutting-plane nodal pricing for unit-commitment markets"};
  app.set_version_flag("--version", std::string("cppa 1.0"));

  std::vector<std::string> cases;
  std::string model = "cp", rule = "ch";
  cppa::CppaConfig cfg;
  cppa::ParseOptions parse;
  std::string contingency, cuts_in, cuts_out, reference, phi, out_dir = ".";
  int t_age = cfg.t_age, max_rounds = 0, jobs = 1;
  long max_cuts = 0;
  long seed = 0;
  bool dump_model = false, dump_basis = false;

  app.add_option("--case", cases, "Case file (.json or MATPOWER .m); repeatable")->required()->check(CLI::ExistingFile);
  app.add_option("--model", model, "Network model")->check(CLI::IsMember({"dc", "cp"}));
  app.add_option("--rule", rule, "Pricing rule")->check(CLI::IsMember({"ip", "ch"}));
  app.add_option("--time-limit", cfg.time_limit_s, "Wall-clock limit in seconds")->check(CLI::PositiveNumber);
  app.add_option("--ftol", cfg.ftol, "Relative objective improvement counted as progress (inf allowed)");
  app.add_option("--ftol-rounds", cfg.ftol_rounds, "Rounds without progress before stopping")->check(CLI::PositiveNumber);
  app.add_option("--t-age", t_age, "Rounds a cut may stay slack before removal; 0 disables aging")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--eps-viol", cfg.eps_viol, "Cone violation threshold")->check(CLI::NonNegativeNumber);
  app.add_option("--eps-par", cfg.eps_par, "Parallelism tolerance for cuts on the same cone");
  app.add_option("--rho", cfg.rho, "Fraction of violated cones cut per round")->check(CLI::Range(0.0, 1.0));
  app.add_option("--max-cuts", max_cuts, "Cap on cuts per round; 0 means unlimited")->check(CLI::NonNegativeNumber);
  app.add_option("--max-rounds", max_rounds, "Cap on rounds; 0 means unlimited")->check(CLI::NonNegativeNumber);
  app.add_option("--milp-gap", cfg.milp_gap, "Relative gap for the IP commitment MILP")->check(CLI::NonNegativeNumber);
  app.add_option("--contingency", contingency, "Branch outage list (JSON)")->check(CLI::ExistingFile);
  app.add_option("--cuts-in", cuts_in, "Warm-start cut store")->check(CLI::ExistingFile);
  app.add_option("--cuts-out", cuts_out, "Write the terminal cut pool here");
  app.add_option("--reference-prices", reference, "prices.csv of a reference run, for delta")->check(CLI::ExistingFile);
  app.add_option("--phi", phi, "Redispatched allocation for the efficiency metrics")->check(CLI::ExistingFile);
  app.add_option("--voll", parse.voll, "Marginal benefit of loads built from MATPOWER demand ($/MWh)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out-dir", out_dir, "Output directory");
  app.add_option("--jobs", jobs, "Scenarios priced concurrently")->check(CLI::PositiveNumber);
  app.add_flag("--dump-model", dump_model, "Write the final LP as model.lp");
  app.add_flag("--dump-basis", dump_basis, "Write the final basis as basis.txt");
  app.add_option("--seed", seed, "Reserved; results do not depend on it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share exit code 1 with every other input error.
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  cfg.rule = rule == "ip" ? cppa::PricingRule::IP : cppa::PricingRule::CH;
  cfg.t_age = t_age == 0 ? cppa::kNeverAge : t_age;
  if (max_rounds > 0) cfg.max_rounds = max_rounds;
  if (max_cuts > 0) cfg.max_cuts = static_cast<std::size_t>(max_cuts);

  std::vector<cppa::RunSpec> specs;
  std::set<std::string> stems;
  for (const auto& c : cases) stems.insert(std::filesystem::path(c).stem().string());
  if (cases.size() > 1 && stems.size() != cases.size()) {
    std::fprintf(stderr, "error: case files must have distinct names when several are given\n");
    return 1;
  }
  if (cases.size() > 1 && !cuts_out.empty()) {
    std::fprintf(stderr, "error: --cuts-out takes a single --case\n");
    return 1;
  }
  for (const auto& c : cases) {
    cppa::RunSpec spec;
    spec.case_path = c;
    spec.model = model == "dc" ? cppa::ModelKind::DC : cppa::ModelKind::CP;
    spec.config = cfg;
    spec.parse = parse;
    if (!contingency.empty()) spec.contingency = contingency;
    if (!cuts_in.empty()) spec.cuts_in = cuts_in;
    if (!cuts_out.empty()) spec.cuts_out = cuts_out;
    if (!reference.empty()) spec.reference_prices = reference;
    if (!phi.empty()) spec.phi = phi;
    spec.out_dir = cases.size() > 1 ? std::filesystem::path(out_dir) / std::filesystem::path(c).stem()
                                    : std::filesystem::path(out_dir);
    spec.dump_model = dump_model;
    spec.dump_basis = dump_basis;
    if (app.count("--seed")) spec.seed = seed;
    specs.push_back(std::move(spec));
  }

  const auto outcomes = cppa::run_scenarios(specs, jobs);
  int code = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    if (o.exit_code == 1) {
      std::fprintf(stderr, "%s: error: %s\n", cases[i].c_str(), o.error.c_str());
    } else {
      const auto& rep = o.report;
      std::printf("%s: %s rounds=%zu objective=%s\n", cases[i].c_str(), o.status.c_str(),
                  rep.at("rounds").get<std::size_t>(), rep.at("objective").dump().c_str());
    }
    // Errors dominate, then time limits, then infeasibility.
    const auto rank = [](int c) { return c == 1 ? 3 : c == 3 ? 2 : c == 2 ? 1 : 0; };
    if (rank(o.exit_code) > rank(code)) code = o.exit_code;
  }
  return code;
}

// Command line front end: run a match, verify a replay, run a regression scenario.
#include <iostream>

#include "CLI11.hpp"

#include "assemble/match.hpp"
#include "assemble/scenarios.hpp"

using namespace assemble;

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& replay_path) {
  MatchConfig config = config_path.empty() ? MatchConfig{} : load_config(config_path);
  if (seed) config.world.seed = *seed;
  const MatchResult r = run_match(config);

  std::cout << "seed " << config.world.seed << ", " << r.steps << " steps\n";
  for (const auto& [team, score] : r.scores) std::cout << "score " << team << " " << score << "\n";
  std::cout << "submissions " << r.submissions.size() << ", commitments " << r.commitments << " ("
            << r.failed_commitments << " failed), resets " << r.resets << "\n";
  if (auto s = r.first_submission(config.team, 2)) std::cout << "first submission of size >= 2 at step " << *s << "\n";
  const auto& a = r.audit;
  std::cout << "audit: exploration moves " << a.exploration_moves << ", rule violations " << a.rule_violations
            << ", low-energy clears " << a.low_energy_clears << ", overruns " << r.overruns << "\n";
  if (!replay_path.empty()) {
    write_replay(r.replay, replay_path);
    std::cout << "replay written to " << replay_path << "\n";
  }
  return a.rule_violations == 0 && a.low_energy_clears == 0 && a.negative_energy == 0 ? 0 : 1;
}

int cmd_verify(const std::string& path) {
  const VerifyResult v = verify_replay_file(path);
  if (v.ok) {
    std::cout << "ok\n";
    return 0;
  }
  std::cout << "FAIL";
  if (v.divergent_step) std::cout << " at step " << *v.divergent_step;
  std::cout << ": " << v.message << "\n";
  return 1;
}

int cmd_scenario(const std::string& name) {
  std::vector<std::string> names = name == "all" ? scenario_names() : std::vector<std::string>{name};
  bool all = true;
  for (const auto& n : names) {
    const auto report = run_scenario(n);
    if (!report) {
      std::cerr << "unknown scenario '" << n << "'\n";
      return 2;
    }
    std::cout << (report->passed() ? "PASS " : "FAIL ") << report->name << ": " << report->description << "\n"
              << "  flags off: " << report->off.detail << "\n"
              << "  flags on:  " << report->on.detail << "\n";
    all = all && report->passed();
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agents Assemble simulator and team"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string replay_path;
  auto* run = app.add_subcommand("run", "play one match");
  run->add_option("config", config_path, "match configuration (JSON)")->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "override the world seed");
  run->add_option("--replay", replay_path, "write the replay here");

  std::string verify_path;
  auto* verify = app.add_subcommand("verify", "re-simulate a replay");
  verify->add_option("replay", verify_path, "replay file")->required();

  std::string scenario = "all";
  auto* scen = app.add_subcommand("scenario", "run a regression scenario");
  scen->add_option("name", scenario, "scenario name or 'all'");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed, replay_path);
    if (*verify) return cmd_verify(verify_path);
    if (*scen) return cmd_scenario(scenario);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

// connguard: outlier database connection detection from JSONL event streams.

#include <csignal>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "connguard/cli.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

// No SA_RESTART: a blocking read on stdin returns so the run loop can flush
// its final snapshot.
void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sa.sa_flags = 0;
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace connguard::cli;

  CLI::App app{"Detect outlier database connections in JSONL event streams"};
  app.require_subcommand(1);

  RunConfig run;
  std::string input_file;
  std::string listen;
  bool use_stdin = false;
  std::string snapshot;
  auto* run_cmd = app.add_subcommand("run", "Stream events through the policy");
  run_cmd->add_option("--policy", run.policy_path, "Rule file")->required();
  auto* in_opt = run_cmd->add_option("--input", input_file, "JSONL event file");
  auto* stdin_opt = run_cmd->add_flag("--stdin", use_stdin, "Read events from stdin (default)");
  auto* listen_opt = run_cmd->add_option("--listen", listen, "Accept JSONL over TCP at HOST:PORT");
  in_opt->excludes(stdin_opt)->excludes(listen_opt);
  stdin_opt->excludes(listen_opt);
  run_cmd->add_option("--max-connections", run.max_connections,
                      "Stop after serving this many TCP clients (0 = unlimited)");
  auto* snap_opt = run_cmd->add_option("--snapshot", snapshot,
                                       "Baseline snapshot file (restored on start if present)");
  run_cmd->add_option("--snapshot-every", run.snapshot_every, "Events between snapshots")
      ->needs(snap_opt);
  run_cmd->add_flag("--alerts-only", run.alerts_only, "Suppress ALLOW verdicts");
  run_cmd->add_option("--metrics-every", run.metrics_every,
                      "Events between metrics lines on stderr (0 = off)");
  run_cmd->add_option("--workers", run.workers, "Rule evaluation threads")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--batch", run.batch, "Events per dispatch (0 = auto)");

  std::string population;
  std::uint64_t count = 0;
  std::optional<std::uint64_t> sim_seed;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic JSONL event stream");
  sim_cmd->add_option("--population", population, "Population JSON file")->required();
  sim_cmd->add_option("--count", count, "Number of events")->required();
  sim_cmd->add_option("--seed", sim_seed, "Override the population seed");

  std::int64_t bound_n = 0;
  double bound_delta = 0.0;
  std::uint64_t trials = 10000;
  std::uint64_t bound_seed = 1;
  auto* bound_cmd = app.add_subcommand(
      "validate-bound", "Monte Carlo check of the learning-phase stopping rule");
  bound_cmd->add_option("--n", bound_n, "Distinct connection classes")->required();
  bound_cmd->add_option("--delta", bound_delta, "1 - confidence")->required();
  bound_cmd->add_option("--trials", trials, "Monte Carlo trials");
  bound_cmd->add_option("--seed", bound_seed, "RNG seed");

  std::string snapshot_file;
  std::optional<std::string> inspect_policy;
  auto* inspect_cmd = app.add_subcommand("inspect-snapshot", "Verify and summarize a snapshot");
  inspect_cmd->add_option("snapshot", snapshot_file, "Snapshot file")->required();
  inspect_cmd->add_option("--policy", inspect_policy,
                          "Rule file, enables phase consistency checks");

  std::uint64_t scenario_seed = 1;
  std::uint64_t post_events = 20000;
  auto* scenario_cmd = app.add_subcommand(
      "scenario", "Run the 2160-pair DB_USER/OS_USER replica scenario");
  scenario_cmd->add_option("--seed", scenario_seed, "RNG seed");
  scenario_cmd->add_option("--post-events", post_events,
                           "Permitted events streamed after the transition");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  if (*run_cmd) {
    if (!input_file.empty()) {
      run.input = InputKind::kFile;
      run.input_path = input_file;
    } else if (!listen.empty()) {
      run.input = InputKind::kListen;
      run.listen_address = listen;
    }
    if (!snapshot.empty()) run.snapshot_path = snapshot;
    install_signal_handlers();
    return cmd_run(run, std::cin, std::cout, std::cerr, &g_stop);
  }
  if (*sim_cmd) return cmd_simulate(population, count, sim_seed, std::cout, std::cerr);
  if (*bound_cmd) {
    return cmd_validate_bound(bound_n, bound_delta, trials, bound_seed, std::cout,
                              std::cerr);
  }
  if (*inspect_cmd) {
    return cmd_inspect_snapshot(snapshot_file, inspect_policy, std::cout, std::cerr);
  }
  if (*scenario_cmd) return cmd_scenario(scenario_seed, post_events, std::cout, std::cerr);
  return kExitConfig;
}

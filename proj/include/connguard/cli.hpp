// cli.hpp
//
// Subcommand implementations behind the `connguard` executable. They write
// to caller-supplied streams so tests can drive them in-process.
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "connguard/line_source.hpp"

namespace connguard::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailed = 1,  // validate-bound FAIL
  kExitConfig = 2,  // bad policy, snapshot, population or arguments
  kExitIo = 3,      // unreadable input, unwritable output
};

enum class InputKind { kStdin, kFile, kListen };

struct RunConfig {
  std::string policy_path;
  InputKind input = InputKind::kStdin;
  std::string input_path;      // kFile
  std::string listen_address;  // kListen
  std::uint64_t max_connections = 0;
  std::optional<std::filesystem::path> snapshot_path;
  std::uint64_t snapshot_every = 1000;
  bool alerts_only = false;
  std::uint64_t metrics_every = 0;  // 0 disables periodic metrics
  unsigned workers = 1;
  // Events buffered per dispatch. 0 picks 1 for a single worker, 256 otherwise.
  std::size_t batch = 0;
};

// Verdicts go to `out` as JSONL; metrics, skip notices and the summary go to
// `err` as JSONL. Stops early when `stop` becomes true.
int cmd_run(const RunConfig& config, std::istream& stdin_stream,
            std::ostream& out, std::ostream& err,
            const std::atomic<bool>* stop = nullptr);

// Same loop over an already constructed source.
int run_with_source(const RunConfig& config, LineSource& source,
                    std::ostream& out, std::ostream& err,
                    const std::atomic<bool>* stop = nullptr);

int cmd_simulate(const std::filesystem::path& population_path,
                 std::uint64_t count, std::optional<std::uint64_t> seed,
                 std::ostream& out, std::ostream& err);

int cmd_validate_bound(std::int64_t n, double delta, std::uint64_t trials,
                       std::uint64_t seed, std::ostream& out, std::ostream& err);

int cmd_inspect_snapshot(const std::filesystem::path& snapshot_path,
                         const std::optional<std::string>& policy_path,
                         std::ostream& out, std::ostream& err);

int cmd_scenario(std::uint64_t seed, std::uint64_t post_transition_events,
                 std::ostream& out, std::ostream& err);

}  // namespace connguard::cli

#include "connguard/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "connguard/baseline.hpp"
#include "connguard/engine.hpp"
#include "connguard/event_io.hpp"
#include "connguard/policy.hpp"
#include "connguard/simulator.hpp"
#include "connguard/snapshot.hpp"

namespace connguard::cli {

namespace {

using Clock = std::chrono::steady_clock;

void log_error(std::ostream& err, const std::string& message) {
  err << nlohmann::json{{"type", "error"}, {"message", message}}.dump() << '\n';
}

bool stop_requested(const std::atomic<bool>* stop) {
  return stop != nullptr && stop->load(std::memory_order_relaxed);
}

class RunLoop {
 public:
  RunLoop(const RunConfig& config, Registry registry, std::uint64_t next_seq,
          std::ostream& out, std::ostream& err)
      : config_(config),
        registry_(std::move(registry)),
        next_seq_(next_seq),
        out_(out),
        err_(err),
        started_(Clock::now()) {
    batch_limit_ = config.batch != 0 ? config.batch
                                     : (config.workers > 1 ? 256 : 1);
  }

  int run(LineSource& source, const std::atomic<bool>* stop) {
    std::uint64_t line_no = 0;
    while (!stop_requested(stop)) {
      std::optional<std::string> line = source.next_line();
      if (!line) break;
      ++line_no;
      if (line->find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        pending_.push_back(parse_event_line(*line, next_seq_));
        ++next_seq_;
      } catch (const EventParseError& e) {
        ++skipped_;
        err_ << nlohmann::json{{"type", "skip"},
                               {"line", line_no},
                               {"error", e.what()}}
                    .dump()
             << '\n';
        continue;
      }
      if (pending_.size() >= batch_limit() && !flush()) return kExitIo;
    }
    if (!flush()) return kExitIo;
    if (config_.snapshot_path && !write_snapshot()) return kExitIo;
    if (config_.metrics_every > 0) write_metrics();
    err_ << nlohmann::json{{"type", "summary"},
                           {"events", events_},
                           {"skipped", skipped_},
                           {"verdicts", verdicts_},
                           {"alerts", alerts_}}
                .dump()
         << '\n';
    return kExitOk;
  }

 private:
  // Batches never straddle a snapshot or metrics boundary.
  std::size_t batch_limit() const {
    std::size_t limit = batch_limit_;
    for (std::uint64_t every : {config_.snapshot_path ? config_.snapshot_every : 0,
                                config_.metrics_every}) {
      if (every > 0) {
        limit = std::min<std::size_t>(limit, every - events_ % every);
      }
    }
    return std::max<std::size_t>(limit, 1);
  }

  bool flush() {
    if (pending_.empty()) return true;
    const std::vector<Verdict> verdicts =
        registry_.dispatch_batch(pending_, config_.workers);
    const std::uint64_t before = events_;
    events_ += pending_.size();
    pending_.clear();

    for (const Verdict& v : verdicts) {
      ++verdicts_;
      if (v.decision != Decision::kAllow) ++alerts_;
      if (config_.alerts_only && v.decision == Decision::kAllow) continue;
      out_ << format_verdict(v) << '\n';
    }
    out_.flush();
    if (!out_) {
      log_error(err_, "failed writing verdict output");
      return false;
    }

    if (config_.snapshot_path && crossed(before, config_.snapshot_every) &&
        !write_snapshot()) {
      return false;
    }
    if (config_.metrics_every > 0 && crossed(before, config_.metrics_every)) {
      write_metrics();
    }
    return true;
  }

  bool crossed(std::uint64_t before, std::uint64_t every) const {
    return every > 0 && before / every != events_ / every;
  }

  bool write_snapshot() {
    try {
      save_snapshot_file(*config_.snapshot_path,
                         snapshot_document(registry_, next_seq_));
      return true;
    } catch (const std::exception& e) {
      log_error(err_, e.what());
      return false;
    }
  }

  void write_metrics() {
    const double elapsed =
        std::chrono::duration<double>(Clock::now() - started_).count();
    const double rate = elapsed > 0.0 ? static_cast<double>(events_) / elapsed : 0.0;
    for (std::size_t i = 0; i < registry_.rules().size(); ++i) {
      const SecurityRule& rule = registry_.rules()[i];
      const BaselineState& state = registry_.state(i);
      nlohmann::ordered_json line;
      line["type"] = "metrics";
      line["events"] = events_;
      line["skipped"] = skipped_;
      line["rule"] = rule.id;
      line["phase"] = std::string(to_string(state.phase()));
      line["n"] = state.distinct_count();
      line["N"] = state.observed_count();
      if (state.distinct_count() > 0) {
        line["threshold"] = min_observations(state.distinct_count(), rule.delta());
      } else {
        line["threshold"] = nullptr;
      }
      line["memory_bytes"] = memory_estimate(state);
      line["events_per_sec"] = rate;
      err_ << line.dump() << '\n';
    }
  }

  const RunConfig& config_;
  Registry registry_;
  std::uint64_t next_seq_;
  std::ostream& out_;
  std::ostream& err_;
  Clock::time_point started_;
  std::size_t batch_limit_ = 1;
  std::vector<ConnectionEvent> pending_;
  std::uint64_t events_ = 0;
  std::uint64_t skipped_ = 0;
  std::uint64_t verdicts_ = 0;
  std::uint64_t alerts_ = 0;
};

bool validate_config(const RunConfig& config, std::ostream& err) {
  if (config.snapshot_path && config.snapshot_every < 1) {
    log_error(err, "--snapshot-every must be at least 1");
    return false;
  }
  if (config.workers < 1) {
    log_error(err, "--workers must be at least 1");
    return false;
  }
  return true;
}

}  // namespace

int run_with_source(const RunConfig& config, LineSource& source,
                    std::ostream& out, std::ostream& err,
                    const std::atomic<bool>* stop) {
  if (!validate_config(config, err)) return kExitConfig;

  Policy policy;
  try {
    policy = load_policy_file(config.policy_path);
  } catch (const std::exception& e) {
    log_error(err, std::string("policy: ") + e.what());
    return kExitConfig;
  }

  std::optional<RestoredRegistry> restored;
  try {
    if (config.snapshot_path && std::filesystem::exists(*config.snapshot_path)) {
      restored.emplace(restore_registry(load_snapshot_file(*config.snapshot_path),
                                        policy));
    }
  } catch (const std::exception& e) {
    log_error(err, std::string("snapshot: ") + e.what());
    return kExitConfig;
  }

  RunLoop loop = restored ? RunLoop(config, std::move(restored->registry),
                                    restored->next_sequence, out, err)
                          : RunLoop(config, Registry(std::move(policy)), 0, out, err);
  try {
    return loop.run(source, stop);
  } catch (const std::system_error& e) {
    log_error(err, std::string("input: ") + e.what());
    return kExitIo;
  }
}

int cmd_run(const RunConfig& config, std::istream& stdin_stream,
            std::ostream& out, std::ostream& err, const std::atomic<bool>* stop) {
  if (!validate_config(config, err)) return kExitConfig;
  switch (config.input) {
    case InputKind::kStdin: {
      StreamLineSource source(stdin_stream);
      return run_with_source(config, source, out, err, stop);
    }
    case InputKind::kFile: {
      std::ifstream in(config.input_path, std::ios::binary);
      if (!in) {
        log_error(err, "cannot open input '" + config.input_path + "'");
        return kExitIo;
      }
      StreamLineSource source(in);
      return run_with_source(config, source, out, err, stop);
    }
    case InputKind::kListen: {
      std::unique_ptr<TcpLineSource> source;
      try {
        source = std::make_unique<TcpLineSource>(config.listen_address,
                                                 config.max_connections, stop);
      } catch (const std::exception& e) {
        log_error(err, std::string("listen: ") + e.what());
        return kExitIo;
      }
      err << nlohmann::json{{"type", "listening"}, {"port", source->port()}}.dump()
          << '\n';
      return run_with_source(config, *source, out, err, stop);
    }
  }
  return kExitConfig;
}

int cmd_simulate(const std::filesystem::path& population_path,
                 std::uint64_t count, std::optional<std::uint64_t> seed,
                 std::ostream& out, std::ostream& err) {
  PopulationSpec spec;
  try {
    spec = load_population_file(population_path);
  } catch (const std::exception& e) {
    log_error(err, e.what());
    return kExitConfig;
  }
  if (seed) spec.seed = *seed;
  EventGenerator gen(std::move(spec));
  for (std::uint64_t i = 0; i < count; ++i) {
    out << format_event(gen.next()) << '\n';
  }
  out.flush();
  return out ? kExitOk : kExitIo;
}

int cmd_validate_bound(std::int64_t n, double delta, std::uint64_t trials,
                       std::uint64_t seed, std::ostream& out, std::ostream& err) {
  if (n < 1) {
    log_error(err, "--n must be at least 1");
    return kExitConfig;
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    log_error(err, "--delta must lie strictly between 0 and 1");
    return kExitConfig;
  }
  if (trials < 1) {
    log_error(err, "--trials must be at least 1");
    return kExitConfig;
  }
  const auto classes = static_cast<std::size_t>(n);
  const std::uint64_t draws = coverage_draws(classes, delta);
  const std::vector<double> probs(classes, 1.0 / static_cast<double>(classes));
  const CoverageEstimate est =
      coverage_probability(classes, probs, draws, trials, seed);
  const double sigma =
      std::sqrt(delta * (1.0 - delta) / static_cast<double>(trials));
  const double required = (1.0 - delta) - 3.0 * sigma;
  const bool pass = est.estimate >= required;

  nlohmann::ordered_json report;
  report["n"] = n;
  report["delta"] = delta;
  report["threshold"] = draws;
  report["trials"] = trials;
  report["coverage"] = est.estimate;
  report["analytic_bound"] = est.analytic_bound;
  report["sigma"] = sigma;
  report["required"] = required;
  report["result"] = pass ? "PASS" : "FAIL";
  out << report.dump() << '\n';
  return pass ? kExitOk : kExitFailed;
}

int cmd_inspect_snapshot(const std::filesystem::path& snapshot_path,
                         const std::optional<std::string>& policy_path,
                         std::ostream& out, std::ostream& err) {
  nlohmann::json doc;
  try {
    doc = load_snapshot_file(snapshot_path);
  } catch (const SnapshotError& e) {
    log_error(err, e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    log_error(err, e.what());
    return kExitIo;
  }

  SnapshotContents contents;
  std::optional<Policy> policy;
  try {
    contents = parse_snapshot(doc);
    if (policy_path) {
      policy = load_policy_file(*policy_path);
      restore_registry(doc, *policy);
    }
  } catch (const std::exception& e) {
    log_error(err, e.what());
    return kExitConfig;
  }

  nlohmann::ordered_json summary;
  summary["valid"] = true;
  summary["phase_checked"] = policy.has_value();
  summary["version"] = kSnapshotVersion;
  summary["next_seq"] = contents.next_sequence;
  summary["rules"] = nlohmann::ordered_json::array();
  for (const SnapshotEntry& entry : contents.entries) {
    const BaselineState& s = entry.state;
    nlohmann::ordered_json rule;
    rule["rule_id"] = entry.rule_id;
    rule["phase"] = std::string(to_string(s.phase()));
    rule["n"] = s.distinct_count();
    rule["N"] = s.observed_count();
    rule["memory_bytes"] = memory_estimate(s);
    if (policy) {
      for (const SecurityRule& r : policy->rules) {
        if (r.id == entry.rule_id && s.distinct_count() > 0) {
          rule["threshold"] = min_observations(s.distinct_count(), r.delta());
        }
      }
    }
    if (!s.hashes().empty()) {
      rule["min_hash"] = to_hex(s.hashes().front());
      rule["max_hash"] = to_hex(s.hashes().back());
    }
    summary["rules"].push_back(std::move(rule));
  }
  out << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_scenario(std::uint64_t seed, std::uint64_t post_transition_events,
                 std::ostream& out, std::ostream& /*err*/) {
  ScenarioOptions options;
  options.post_transition_events = post_transition_events;
  out << to_json(run_replica_scenario(seed, options)).dump() << '\n';
  return kExitOk;
}

}  // namespace connguard::cli

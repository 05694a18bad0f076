// engine.hpp
//
// Runs every incoming connection through the rules that match it. For each
// matching rule:
//
//   1. hash the rule's variable tuple
//   2. N += 1
//   3. if the hash is new: n += 1, insert it into the baseline
//   4. if the rule was detecting and the hash was new, issue the rule action
//   5. re-evaluate the phase on the updated counters
//
// Rules never share state, so a batch of events can be split across worker
// threads by rule. Output order is fixed: by event sequence number, then by
// rule definition order.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "connguard/baseline.hpp"
#include "connguard/hashing.hpp"
#include "connguard/policy.hpp"

namespace connguard {

enum class Decision { kAllow, kAlert, kTerminate };

std::string_view to_string(Decision decision);

struct Verdict {
  std::string rule_id;
  Decision decision = Decision::kAllow;
  TupleHash hash = 0;
  Phase phase_before = Phase::kLearning;
  Phase phase_after = Phase::kLearning;
  bool was_new = false;
  std::uint64_t n_after = 0;
  std::uint64_t observed_after = 0;
  double threshold = 0.0;  // min_observations(n_after, delta)
  std::uint64_t sequence_number = 0;
  std::optional<std::string> timestamp;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

// One step of the learning/detection loop. The caller is responsible for
// checking rule_matches first.
Verdict process_event(const SecurityRule& rule, BaselineState& state,
                      const ConnectionEvent& event);

class Registry {
 public:
  explicit Registry(Policy policy);
  Registry(Policy policy, std::vector<BaselineState> states);

  const Policy& policy() const { return policy_; }
  std::span<const SecurityRule> rules() const { return policy_.rules; }
  std::span<const BaselineState> states() const { return states_; }
  const BaselineState& state(std::size_t rule_index) const {
    return states_.at(rule_index);
  }
  std::optional<std::size_t> rule_index(std::string_view id) const;

  // Verdicts for every matching rule, in rule order.
  std::vector<Verdict> dispatch(const ConnectionEvent& event);

  // Processes events in order. With workers > 1, rules are partitioned
  // across threads; the result is identical to the serial run.
  std::vector<Verdict> dispatch_batch(std::span<const ConnectionEvent> events,
                                      unsigned workers = 1);

 private:
  Policy policy_;
  std::vector<BaselineState> states_;
};

}  // namespace connguard

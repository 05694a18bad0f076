#include "connguard/engine.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

namespace connguard {

std::string_view to_string(Decision decision) {
  switch (decision) {
    case Decision::kAllow: return "allow";
    case Decision::kAlert: return "alert";
    case Decision::kTerminate: return "terminate";
  }
  return "allow";
}

Verdict process_event(const SecurityRule& rule, BaselineState& state,
                      const ConnectionEvent& event) {
  Verdict v;
  v.rule_id = rule.id;
  v.sequence_number = event.sequence_number;
  v.timestamp = event.timestamp;
  v.phase_before = state.phase();

  v.hash = tuple_hash(rule, event);
  state.record_observation();
  v.was_new = state.insert(v.hash);

  if (v.phase_before == Phase::kDetecting && v.was_new) {
    v.decision = rule.action == Action::kTerminate ? Decision::kTerminate
                                                   : Decision::kAlert;
  }

  v.phase_after = evaluate_phase(state, rule);
  state.set_phase(v.phase_after);

  v.n_after = state.distinct_count();
  v.observed_after = state.observed_count();
  v.threshold = min_observations(v.n_after, rule.delta());
  return v;
}

Registry::Registry(Policy policy)
    : policy_(std::move(policy)), states_(policy_.rules.size()) {}

Registry::Registry(Policy policy, std::vector<BaselineState> states)
    : policy_(std::move(policy)), states_(std::move(states)) {
  if (states_.size() != policy_.rules.size()) {
    throw std::invalid_argument("registry needs one baseline per rule");
  }
}

std::optional<std::size_t> Registry::rule_index(std::string_view id) const {
  for (std::size_t i = 0; i < policy_.rules.size(); ++i) {
    if (policy_.rules[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<Verdict> Registry::dispatch(const ConnectionEvent& event) {
  std::vector<Verdict> out;
  for (std::size_t i = 0; i < policy_.rules.size(); ++i) {
    const SecurityRule& rule = policy_.rules[i];
    if (rule_matches(rule, event)) {
      out.push_back(process_event(rule, states_[i], event));
    }
  }
  return out;
}

std::vector<Verdict> Registry::dispatch_batch(
    std::span<const ConnectionEvent> events, unsigned workers) {
  const std::size_t rule_count = policy_.rules.size();
  workers = std::max(1u, workers);
  if (workers == 1 || rule_count < 2) {
    std::vector<Verdict> out;
    for (const ConnectionEvent& event : events) {
      auto verdicts = dispatch(event);
      std::move(verdicts.begin(), verdicts.end(), std::back_inserter(out));
    }
    return out;
  }

  // per_rule[r][e]: verdict of rule r on event e, if the rule matched.
  std::vector<std::vector<std::optional<Verdict>>> per_rule(rule_count);
  const unsigned used = static_cast<unsigned>(
      std::min<std::size_t>(workers, rule_count));
  {
    std::vector<std::jthread> pool;
    pool.reserve(used);
    for (unsigned w = 0; w < used; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < rule_count; r += used) {
          const SecurityRule& rule = policy_.rules[r];
          auto& slot = per_rule[r];
          slot.resize(events.size());
          for (std::size_t e = 0; e < events.size(); ++e) {
            if (rule_matches(rule, events[e])) {
              slot[e] = process_event(rule, states_[r], events[e]);
            }
          }
        }
      });
    }
  }

  std::vector<Verdict> out;
  for (std::size_t e = 0; e < events.size(); ++e) {
    for (std::size_t r = 0; r < rule_count; ++r) {
      if (per_rule[r][e]) out.push_back(std::move(*per_rule[r][e]));
    }
  }
  return out;
}

}  // namespace connguard

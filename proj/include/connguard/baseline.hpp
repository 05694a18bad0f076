// baseline.hpp
//
// Per-rule learned state: the sorted set of tuple hashes, the distinct count
// n, the observation count N and the learning/detection phase.
//
// Learning ends once the rule has seen enough connections that, with
// confidence 1 - delta, every distinct connection class has appeared:
//
//     N >= con_min_count  and  N > n * ln(n / delta)
//
// The second condition is the coupon-collector bound for n equally likely
// classes. It is re-evaluated after every observation, so absorbing a new
// class can send a rule back to learning.
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "connguard/hashing.hpp"
#include "connguard/policy.hpp"

namespace connguard {

enum class Phase { kLearning, kDetecting };

std::string_view to_string(Phase phase);
// Accepts "learning" / "detecting"; throws std::invalid_argument otherwise.
Phase phase_from_string(std::string_view text);

// n * ln(n / delta). Throws std::domain_error unless n >= 1 and 0 < delta < 1.
double min_observations(std::uint64_t n, double delta);

// Result of a membership probe; `probes` counts three-way comparisons.
struct Lookup {
  bool found = false;
  std::size_t probes = 0;
};

class BaselineState {
 public:
  BaselineState() = default;

  // Rebuilds a state from persisted parts. Throws std::invalid_argument if
  // the hashes are not strictly ascending or observed_count < hashes.size().
  static BaselineState from_parts(std::vector<TupleHash> hashes,
                                  std::uint64_t observed_count, Phase phase);

  std::span<const TupleHash> hashes() const { return hashes_; }
  std::uint64_t distinct_count() const { return hashes_.size(); }
  std::uint64_t observed_count() const { return observed_count_; }
  Phase phase() const { return phase_; }

  bool contains(TupleHash h) const { return lookup(h).found; }
  // Binary search; at most floor(log2(n)) + 1 probes.
  Lookup lookup(TupleHash h) const;

  // Inserts at the sorted position. Returns false if already present.
  // Does not touch observed_count.
  bool insert(TupleHash h);

  void record_observation() { ++observed_count_; }
  void set_phase(Phase phase) { phase_ = phase; }

  // Sorted, duplicate-free, observed_count >= distinct_count.
  bool invariants_hold() const;

  friend bool operator==(const BaselineState&, const BaselineState&) = default;

 private:
  std::vector<TupleHash> hashes_;
  std::uint64_t observed_count_ = 0;
  Phase phase_ = Phase::kLearning;
};

// DETECTING iff n >= 1, N >= con_min_count and N > min_observations(n, delta).
Phase evaluate_phase(std::uint64_t distinct_count, std::uint64_t observed_count,
                     const SecurityRule& rule);
Phase evaluate_phase(const BaselineState& state, const SecurityRule& rule);

// 8 bytes per stored hash plus a 24-byte vector header.
std::uint64_t memory_estimate(const BaselineState& state);

}  // namespace connguard

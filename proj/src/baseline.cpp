#include "connguard/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace connguard {

std::string_view to_string(Phase phase) {
  return phase == Phase::kLearning ? "learning" : "detecting";
}

Phase phase_from_string(std::string_view text) {
  if (text == "learning") return Phase::kLearning;
  if (text == "detecting") return Phase::kDetecting;
  throw std::invalid_argument("unknown phase '" + std::string(text) + "'");
}

double min_observations(std::uint64_t n, double delta) {
  if (n < 1) throw std::domain_error("min_observations: n must be >= 1");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::domain_error("min_observations: delta must lie in (0, 1)");
  }
  const double nd = static_cast<double>(n);
  return nd * std::log(nd / delta);
}

BaselineState BaselineState::from_parts(std::vector<TupleHash> hashes,
                                        std::uint64_t observed_count,
                                        Phase phase) {
  for (std::size_t i = 1; i < hashes.size(); ++i) {
    if (hashes[i - 1] >= hashes[i]) {
      throw std::invalid_argument(
          "baseline hashes must be strictly ascending (unsorted or duplicate "
          "entry at index " +
          std::to_string(i) + ")");
    }
  }
  if (observed_count < hashes.size()) {
    throw std::invalid_argument("baseline observed count N=" +
                                std::to_string(observed_count) +
                                " is below distinct count n=" +
                                std::to_string(hashes.size()));
  }
  BaselineState state;
  state.hashes_ = std::move(hashes);
  state.observed_count_ = observed_count;
  state.phase_ = phase;
  return state;
}

Lookup BaselineState::lookup(TupleHash h) const {
  Lookup result;
  std::size_t lo = 0;
  std::size_t hi = hashes_.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    ++result.probes;
    const TupleHash v = hashes_[mid];
    if (v == h) {
      result.found = true;
      return result;
    }
    if (v < h) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return result;
}

bool BaselineState::insert(TupleHash h) {
  auto it = std::lower_bound(hashes_.begin(), hashes_.end(), h);
  if (it != hashes_.end() && *it == h) return false;
  hashes_.insert(it, h);
  return true;
}

bool BaselineState::invariants_hold() const {
  for (std::size_t i = 1; i < hashes_.size(); ++i) {
    if (hashes_[i - 1] >= hashes_[i]) return false;
  }
  return observed_count_ >= hashes_.size();
}

Phase evaluate_phase(std::uint64_t distinct_count, std::uint64_t observed_count,
                     const SecurityRule& rule) {
  if (distinct_count < 1) return Phase::kLearning;
  if (observed_count < rule.con_min_count) return Phase::kLearning;
  const double threshold = min_observations(distinct_count, rule.delta());
  return static_cast<double>(observed_count) > threshold ? Phase::kDetecting
                                                         : Phase::kLearning;
}

Phase evaluate_phase(const BaselineState& state, const SecurityRule& rule) {
  return evaluate_phase(state.distinct_count(), state.observed_count(), rule);
}

std::uint64_t memory_estimate(const BaselineState& state) {
  return 8 * state.distinct_count() + 24;
}

}  // namespace connguard

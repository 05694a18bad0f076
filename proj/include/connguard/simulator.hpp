// simulator.hpp
//
// Synthetic connection streams and Monte Carlo checks of the learning-phase
// stopping rule.
//
// Streams are drawn i.i.d. from a declared population of connection classes
// using std::mt19937_64 seeded with PopulationSpec::seed. Each draw consumes
// exactly one 64-bit output u and picks the first class whose cumulative
// probability exceeds (u >> 11) * 2^-53. Any probability mass not assigned to
// a class produces a background event that carries none of the population
// variables.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "connguard/engine.hpp"
#include "connguard/policy.hpp"

namespace connguard {

class PopulationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PopulationClass {
  std::vector<std::string> values;
  double probability = 0.0;
};

struct PopulationSpec {
  std::vector<std::string> variables;
  std::vector<PopulationClass> classes;
  std::uint64_t seed = 0;
};

// Throws PopulationError: unknown-format variable names, duplicate variables,
// wrong tuple width, negative or non-finite p, sum(p) > 1, repeated tuples.
void validate_population(const PopulationSpec& spec);

// {"variables":[...],"classes":[{"values":[...],"p":float}],"seed":int}
PopulationSpec parse_population(const nlohmann::json& doc);
PopulationSpec load_population_file(const std::filesystem::path& path);
nlohmann::json population_to_json(const PopulationSpec& spec);

// Categorical sampler over class probabilities; nullopt is the background.
class ClassSampler {
 public:
  explicit ClassSampler(std::span<const double> probabilities);

  std::optional<std::size_t> sample(std::mt19937_64& rng) const;
  std::size_t size() const { return cumulative_.size(); }

 private:
  std::vector<double> cumulative_;
};

// Produces the deterministic event sequence for a population. Sequence
// numbers start at 0.
class EventGenerator {
 public:
  explicit EventGenerator(PopulationSpec spec);

  ConnectionEvent next();
  // Index of the class behind the last event, nullopt for background.
  std::optional<std::size_t> last_class() const { return last_class_; }

 private:
  PopulationSpec spec_;
  ClassSampler sampler_;
  std::mt19937_64 rng_;
  std::uint64_t next_seq_ = 0;
  std::optional<std::size_t> last_class_;
};

std::vector<ConnectionEvent> generate_stream(const PopulationSpec& spec,
                                             std::size_t count);

struct CoverageEstimate {
  double estimate = 0.0;        // fraction of trials that saw every class
  double standard_error = 0.0;  // sqrt(p(1-p)/trials) at the estimate
  double analytic_bound = 0.0;  // 1 - sum_i (1 - p_i)^N
  std::uint64_t trials = 0;
};

// Monte Carlo estimate of P(every class seen at least once in N draws).
// Throws std::invalid_argument if n != probabilities.size() or trials == 0.
CoverageEstimate coverage_probability(std::size_t n,
                                      std::span<const double> probabilities,
                                      std::uint64_t draws, std::uint64_t trials,
                                      std::uint64_t seed);

// ceil(n * ln(n / delta)), the smallest integer draw count at the bound.
std::uint64_t coverage_draws(std::uint64_t n, double delta);

// Production-replica scenario: 120 database users x 30 OS users, each user
// permitted on 18 OS accounts, 2160 equally likely permitted pairs.
inline constexpr std::size_t kScenarioDbUsers = 120;
inline constexpr std::size_t kScenarioOsUsers = 30;
inline constexpr std::size_t kScenarioPermittedPerUser = 18;

PopulationSpec replica_population(std::uint64_t seed);
Policy replica_policy();
// A (DB_USER, OS_USER) pair outside the permitted population.
ConnectionEvent replica_forbidden_event();

struct ScenarioOptions {
  std::uint64_t max_events = 500000;
  std::uint64_t post_transition_events = 20000;
};

struct ScenarioReport {
  std::uint64_t seed = 0;
  bool transitioned = false;
  std::uint64_t n_at_transition = 0;
  std::uint64_t N_at_transition = 0;
  double threshold_at_transition = 0.0;
  Decision injected_decision = Decision::kAllow;
  std::uint64_t injected_non_allow = 0;
  // Non-ALLOW verdicts on permitted-pair traffic after the transition.
  std::uint64_t false_positive_count = 0;
  // Every non-ALLOW verdict after the transition, the injected one included.
  std::uint64_t post_transition_alerts = 0;
  std::uint64_t events_processed = 0;
};

// Streams the replica population until the rule detects, injects one
// forbidden pair, then keeps streaming permitted traffic.
ScenarioReport run_replica_scenario(std::uint64_t seed,
                                     const ScenarioOptions& options = {});
nlohmann::json to_json(const ScenarioReport& report);

}  // namespace connguard

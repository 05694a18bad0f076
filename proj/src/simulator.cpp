#include "connguard/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "connguard/baseline.hpp"

namespace connguard {

namespace {

constexpr double kSumTolerance = 1e-9;

double unit_interval(std::uint64_t u) {
  return static_cast<double>(u >> 11) * 0x1.0p-53;
}

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, i);
  return buf;
}

std::string db_user_name(std::size_t i) { return padded("dbuser_", i, 3); }
std::string os_user_name(std::size_t i) { return padded("osuser_", i, 2); }

bool permitted(std::size_t db_user, std::size_t os_user) {
  return (os_user + kScenarioOsUsers - db_user % kScenarioOsUsers) %
             kScenarioOsUsers <
         kScenarioPermittedPerUser;
}

}  // namespace

void validate_population(const PopulationSpec& spec) {
  if (spec.variables.empty()) {
    throw PopulationError("population needs at least one variable");
  }
  std::set<std::string> vars;
  for (const std::string& v : spec.variables) {
    if (!is_valid_variable_name(v)) {
      throw PopulationError("invalid variable name '" + v + "'");
    }
    if (!vars.insert(v).second) {
      throw PopulationError("variable '" + v + "' listed twice");
    }
  }
  double sum = 0.0;
  std::set<std::vector<std::string>> tuples;
  for (std::size_t i = 0; i < spec.classes.size(); ++i) {
    const PopulationClass& c = spec.classes[i];
    if (c.values.size() != spec.variables.size()) {
      throw PopulationError("class #" + std::to_string(i) + " has " +
                            std::to_string(c.values.size()) +
                            " values, expected " +
                            std::to_string(spec.variables.size()));
    }
    if (!std::isfinite(c.probability) || c.probability < 0.0) {
      throw PopulationError("class #" + std::to_string(i) +
                            " has an invalid probability");
    }
    if (!tuples.insert(c.values).second) {
      throw PopulationError("class #" + std::to_string(i) +
                            " repeats an earlier tuple");
    }
    sum += c.probability;
  }
  if (sum > 1.0 + kSumTolerance) {
    throw PopulationError("class probabilities sum to " + std::to_string(sum) +
                          ", more than 1");
  }
}

PopulationSpec parse_population(const nlohmann::json& doc) {
  PopulationSpec spec;
  try {
    if (!doc.is_object()) throw PopulationError("population must be an object");
    for (const auto& v : doc.at("variables")) {
      spec.variables.push_back(v.get<std::string>());
    }
    for (const auto& c : doc.at("classes")) {
      PopulationClass cls;
      for (const auto& v : c.at("values")) cls.values.push_back(v.get<std::string>());
      cls.probability = c.at("p").get<double>();
      spec.classes.push_back(std::move(cls));
    }
    spec.seed = doc.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    throw PopulationError(std::string("malformed population: ") + e.what());
  }
  validate_population(spec);
  return spec;
}

PopulationSpec load_population_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw PopulationError("cannot open population file '" + path.string() + "'");
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw PopulationError("population file is not valid JSON: " +
                          std::string(e.what()));
  }
  return parse_population(doc);
}

nlohmann::json population_to_json(const PopulationSpec& spec) {
  nlohmann::json classes = nlohmann::json::array();
  for (const PopulationClass& c : spec.classes) {
    classes.push_back({{"values", c.values}, {"p", c.probability}});
  }
  return {{"variables", spec.variables},
          {"classes", std::move(classes)},
          {"seed", spec.seed}};
}

ClassSampler::ClassSampler(std::span<const double> probabilities) {
  cumulative_.reserve(probabilities.size());
  double running = 0.0;
  for (double p : probabilities) {
    running += p;
    cumulative_.push_back(running);
  }
  // A complete distribution must never fall through to the background.
  if (!cumulative_.empty() && std::abs(running - 1.0) <= kSumTolerance) {
    cumulative_.back() = 1.0;
  }
}

std::optional<std::size_t> ClassSampler::sample(std::mt19937_64& rng) const {
  const double u = unit_interval(rng());
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

namespace {

std::vector<double> probabilities_of(const PopulationSpec& spec) {
  std::vector<double> out;
  out.reserve(spec.classes.size());
  for (const PopulationClass& c : spec.classes) out.push_back(c.probability);
  return out;
}

}  // namespace

EventGenerator::EventGenerator(PopulationSpec spec)
    : spec_((validate_population(spec), std::move(spec))),
      sampler_(probabilities_of(spec_)),
      rng_(spec_.seed) {}

ConnectionEvent EventGenerator::next() {
  ConnectionEvent event;
  event.sequence_number = next_seq_++;
  last_class_ = sampler_.sample(rng_);
  if (last_class_) {
    const PopulationClass& cls = spec_.classes[*last_class_];
    for (std::size_t i = 0; i < spec_.variables.size(); ++i) {
      event.values.emplace(spec_.variables[i], cls.values[i]);
    }
  }
  return event;
}

std::vector<ConnectionEvent> generate_stream(const PopulationSpec& spec,
                                             std::size_t count) {
  EventGenerator gen(spec);
  std::vector<ConnectionEvent> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(gen.next());
  return out;
}

CoverageEstimate coverage_probability(std::size_t n,
                                      std::span<const double> probabilities,
                                      std::uint64_t draws, std::uint64_t trials,
                                      std::uint64_t seed) {
  if (n != probabilities.size()) {
    throw std::invalid_argument("coverage_probability: n != probabilities.size()");
  }
  if (trials == 0) {
    throw std::invalid_argument("coverage_probability: trials must be >= 1");
  }

  CoverageEstimate result;
  result.trials = trials;
  double miss_sum = 0.0;
  for (double p : probabilities) miss_sum += std::pow(1.0 - p, static_cast<double>(draws));
  result.analytic_bound = 1.0 - miss_sum;

  const ClassSampler sampler(probabilities);
  std::mt19937_64 rng(seed);
  // stamp[i] == trial + 1 marks class i as seen in the current trial.
  std::vector<std::uint64_t> stamp(n, 0);
  std::uint64_t covered = 0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    std::size_t seen = 0;
    for (std::uint64_t d = 0; d < draws && seen < n; ++d) {
      const auto cls = sampler.sample(rng);
      if (cls && stamp[*cls] != t + 1) {
        stamp[*cls] = t + 1;
        ++seen;
      }
    }
    if (seen == n) ++covered;
  }
  result.estimate = static_cast<double>(covered) / static_cast<double>(trials);
  result.standard_error = std::sqrt(result.estimate * (1.0 - result.estimate) /
                                    static_cast<double>(trials));
  return result;
}

std::uint64_t coverage_draws(std::uint64_t n, double delta) {
  return static_cast<std::uint64_t>(std::ceil(min_observations(n, delta)));
}

PopulationSpec replica_population(std::uint64_t seed) {
  PopulationSpec spec;
  spec.variables = {"DB_USER", "OS_USER"};
  spec.seed = seed;
  const std::size_t pairs = kScenarioDbUsers * kScenarioPermittedPerUser;
  const double p = 1.0 / static_cast<double>(pairs);
  for (std::size_t u = 0; u < kScenarioDbUsers; ++u) {
    for (std::size_t o = 0; o < kScenarioOsUsers; ++o) {
      if (permitted(u, o)) {
        spec.classes.push_back({{db_user_name(u), os_user_name(o)}, p});
      }
    }
  }
  return spec;
}

Policy replica_policy() {
  SecurityRule rule;
  rule.id = "db_user_os_user";
  rule.outlier_vars = {"DB_USER", "OS_USER"};
  rule.con_min_count = 1000;
  rule.confidence = 0.95;
  rule.action = Action::kAlert;
  Policy policy;
  policy.rules.push_back(std::move(rule));
  return policy;
}

ConnectionEvent replica_forbidden_event() {
  ConnectionEvent event;
  const std::size_t os = kScenarioOsUsers - 1;
  event.values.emplace("DB_USER", db_user_name(0));
  event.values.emplace("OS_USER", os_user_name(os));
  return event;
}

ScenarioReport run_replica_scenario(std::uint64_t seed,
                                     const ScenarioOptions& options) {
  ScenarioReport report;
  report.seed = seed;
  Registry registry(replica_policy());
  EventGenerator gen(replica_population(seed));
  std::uint64_t seq = 0;

  while (report.events_processed < options.max_events) {
    ConnectionEvent event = gen.next();
    event.sequence_number = seq++;
    ++report.events_processed;
    const auto verdicts = registry.dispatch(event);
    if (!verdicts.empty() && verdicts.front().phase_after == Phase::kDetecting) {
      report.transitioned = true;
      report.n_at_transition = verdicts.front().n_after;
      report.N_at_transition = verdicts.front().observed_after;
      report.threshold_at_transition = verdicts.front().threshold;
      break;
    }
  }
  if (!report.transitioned) return report;

  ConnectionEvent forbidden = replica_forbidden_event();
  forbidden.sequence_number = seq++;
  ++report.events_processed;
  for (const Verdict& v : registry.dispatch(forbidden)) {
    if (v.decision != Decision::kAllow) {
      ++report.injected_non_allow;
      ++report.post_transition_alerts;
      report.injected_decision = v.decision;
    }
  }

  for (std::uint64_t i = 0; i < options.post_transition_events; ++i) {
    ConnectionEvent event = gen.next();
    event.sequence_number = seq++;
    ++report.events_processed;
    for (const Verdict& v : registry.dispatch(event)) {
      if (v.decision != Decision::kAllow) {
        ++report.false_positive_count;
        ++report.post_transition_alerts;
      }
    }
  }
  return report;
}

nlohmann::json to_json(const ScenarioReport& r) {
  return {{"seed", r.seed},
          {"transitioned", r.transitioned},
          {"n_at_transition", r.n_at_transition},
          {"N_at_transition", r.N_at_transition},
          {"threshold_at_transition", r.threshold_at_transition},
          {"injected_decision", std::string(to_string(r.injected_decision))},
          {"injected_non_allow", r.injected_non_allow},
          {"false_positive_count", r.false_positive_count},
          {"post_transition_alerts", r.post_transition_alerts},
          {"events_processed", r.events_processed}};
}

}  // namespace connguard

// Straight-line reference for the learning/detection loop: tuple strings in
// an unsorted vector, linear-scan membership, the stopping rule written out
// inline. Test oracle only; shares no code with src/ beyond the data types.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "connguard/engine.hpp"
#include "connguard/policy.hpp"
#include "murmur3_reference.hpp"

namespace reference {

struct NaiveVerdict {
  std::size_t rule = 0;
  connguard::Decision decision = connguard::Decision::kAllow;
  bool was_new = false;
  bool detecting_before = false;
  bool detecting_after = false;
  std::uint64_t n = 0;
  std::uint64_t big_n = 0;
  std::uint64_t hash = 0;
};

class NaiveEngine {
 public:
  explicit NaiveEngine(std::vector<connguard::SecurityRule> rules)
      : rules_(std::move(rules)), seen_(rules_.size()), counts_(rules_.size(), 0),
        detecting_(rules_.size(), false) {}

  std::vector<NaiveVerdict> process(const std::map<std::string, std::string>& event) {
    std::vector<NaiveVerdict> out;
    for (std::size_t r = 0; r < rules_.size(); ++r) {
      const auto& rule = rules_[r];
      bool matches = true;
      for (const auto& term : rule.match) {
        auto it = event.find(term.variable);
        if (it == event.end() || it->second != term.literal) matches = false;
      }
      if (!matches) continue;

      std::string key;
      for (const auto& var : rule.outlier_vars) {
        auto it = event.find(var);
        key += var + "=";
        key += it == event.end() ? std::string(1, '\0') : "\x01" + it->second;
        key += '\x1F';
      }

      NaiveVerdict v;
      v.rule = r;
      v.detecting_before = detecting_[r];
      counts_[r] += 1;
      bool known = false;
      for (const auto& s : seen_[r]) {
        if (s == key) known = true;
      }
      v.was_new = !known;
      if (!known) seen_[r].push_back(key);
      if (v.detecting_before && v.was_new) {
        v.decision = rule.action == connguard::Action::kTerminate
                         ? connguard::Decision::kTerminate
                         : connguard::Decision::kAlert;
      }
      const double n = static_cast<double>(seen_[r].size());
      const double big_n = static_cast<double>(counts_[r]);
      const double delta = 1.0 - rule.confidence;
      detecting_[r] = seen_[r].size() >= 1 && counts_[r] >= rule.con_min_count &&
                      big_n > n * std::log(n / delta);
      v.detecting_after = detecting_[r];
      v.n = seen_[r].size();
      v.big_n = counts_[r];
      std::uint64_t h[2];
      MurmurHash3_x64_128(key.data(), static_cast<int>(key.size()), 0, h);
      v.hash = h[0];
      out.push_back(v);
    }
    return out;
  }

 private:
  std::vector<connguard::SecurityRule> rules_;
  std::vector<std::vector<std::string>> seen_;
  std::vector<std::uint64_t> counts_;
  std::vector<bool> detecting_;
};

// Random small policy + event stream for differential tests. Values come
// from tiny alphabets so classes repeat and rules reach detection.
struct RandomCase {
  connguard::Policy policy;
  std::vector<connguard::ConnectionEvent> events;
};

inline RandomCase make_random_case(std::mt19937_64& rng, std::size_t max_classes = 30,
                                   std::size_t max_events = 2000) {
  const std::vector<std::string> vars = {"DB_USER", "OS_USER", "DB_TYPE", "CTIMEZONE"};
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  RandomCase c;
  const std::size_t rule_count = 1 + pick(3);
  for (std::size_t r = 0; r < rule_count; ++r) {
    connguard::SecurityRule rule;
    rule.id = "r" + std::to_string(r);
    std::vector<std::string> pool = vars;
    std::shuffle(pool.begin(), pool.end(), rng);
    rule.outlier_vars.assign(pool.begin(), pool.begin() + 1 + static_cast<long>(pick(3)));
    if (pick(4) == 0) rule.match.push_back({"DB_TYPE", pick(2) ? "ORACLE" : "DB2"});
    rule.con_min_count = pick(60);
    const double confidences[] = {0.5, 0.8, 0.9, 0.95, 0.99};
    rule.confidence = confidences[pick(5)];
    rule.action = pick(2) ? connguard::Action::kAlert : connguard::Action::kTerminate;
    c.policy.rules.push_back(std::move(rule));
  }

  // Population: up to max_classes distinct tuples with skewed weights.
  const std::size_t classes = 1 + pick(max_classes);
  std::vector<std::map<std::string, std::string>> tuples;
  std::vector<double> weights;
  for (std::size_t k = 0; k < classes; ++k) {
    std::map<std::string, std::string> t;
    t["DB_USER"] = "u" + std::to_string(k % 7);
    t["OS_USER"] = "o" + std::to_string(k / 7);
    t["DB_TYPE"] = k % 3 == 0 ? "DB2" : "ORACLE";
    if (k % 5 != 4) t["CTIMEZONE"] = "UTC+" + std::to_string(k % 4);
    tuples.push_back(std::move(t));
    weights.push_back(1.0 + static_cast<double>(pick(10)));
  }
  std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());

  const std::size_t count = pick(max_events + 1);
  for (std::size_t i = 0; i < count; ++i) {
    connguard::ConnectionEvent e;
    e.sequence_number = i;
    if (pick(100) == 0) {
      // Novel tuple outside the population.
      e.values["DB_USER"] = "intruder" + std::to_string(pick(5));
      e.values["OS_USER"] = "root";
      e.values["DB_TYPE"] = "ORACLE";
    } else {
      for (const auto& [k, v] : tuples[dist(rng)]) e.values.emplace(k, v);
    }
    c.events.push_back(std::move(e));
  }
  return c;
}

inline std::map<std::string, std::string> plain_values(const connguard::ConnectionEvent& e) {
  return {e.values.begin(), e.values.end()};
}

}  // namespace reference

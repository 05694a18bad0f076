// policy.hpp
//
// Security rule model and the rule-file parser.
//
// A rule selects an ordered tuple of connection variables (the DISTINCT
// tuple). The engine learns the set of tuple hashes seen for that rule and,
// once enough connections were observed, flags tuples it has never seen.
//
// Rule file example:
//
//   extension TENANT_ID
//   rule tz {
//     match: DB_TYPE == "ORACLE"
//     outlier: distinct($(CTIMEZONE)$, $(COLLECTOR_HOST_NAME)$)
//     con_min_count: 1000
//     confidence: 0.95
//     action: terminate
//   }
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace connguard {

inline constexpr std::uint64_t kDefaultConMinCount = 1000;
inline constexpr double kDefaultConfidence = 0.95;

// True when `name` matches [A-Z][A-Z0-9_]*.
bool is_valid_variable_name(std::string_view name);

// Built-in security rule variables.
const std::vector<std::string>& variable_catalog();
bool is_catalog_variable(std::string_view name);

enum class Action { kAlert, kTerminate };

std::string_view to_string(Action action);

// One observed connection: variable name -> value. Values may be empty.
struct ConnectionEvent {
  std::map<std::string, std::string, std::less<>> values;
  std::uint64_t sequence_number = 0;
  std::optional<std::string> timestamp;

  const std::string* find(std::string_view name) const {
    auto it = values.find(name);
    return it == values.end() ? nullptr : &it->second;
  }
};

struct MatchTerm {
  std::string variable;
  std::string literal;

  friend bool operator==(const MatchTerm&, const MatchTerm&) = default;
};

struct SecurityRule {
  std::string id;
  std::vector<MatchTerm> match;  // conjunction; empty means "all events"
  std::vector<std::string> outlier_vars;
  std::uint64_t con_min_count = kDefaultConMinCount;
  double confidence = kDefaultConfidence;
  Action action = Action::kAlert;

  double delta() const { return 1.0 - confidence; }

  friend bool operator==(const SecurityRule&, const SecurityRule&) = default;
};

struct Policy {
  std::vector<std::string> extensions;
  std::vector<SecurityRule> rules;

  friend bool operator==(const Policy&, const Policy&) = default;
};

class PolicyError : public std::runtime_error {
 public:
  PolicyError(const std::string& message, std::size_t line, std::size_t column);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Parses rule-file text. Throws PolicyError with a 1-based line/column.
Policy parse_policy(std::string_view source);

// Reads and parses a rule file. Throws PolicyError, or std::runtime_error
// when the file cannot be read.
Policy load_policy_file(const std::string& path);

// True iff every match term's variable is present with an identical value.
bool rule_matches(const SecurityRule& rule, const ConnectionEvent& event);

// Canonical text; parse_policy(format_policy(p)) == p.
std::string format_rule(const SecurityRule& rule);
std::string format_policy(const Policy& policy);

}  // namespace connguard

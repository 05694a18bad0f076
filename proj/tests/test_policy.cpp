// test_policy.cpp
//
// Rule-file parser, variable catalog and match predicates.

#include "connguard/policy.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

using namespace connguard;

namespace {

PolicyError parse_error(std::string_view src) {
  try {
    parse_policy(src);
  } catch (const PolicyError& e) {
    return e;
  }
  ADD_FAILURE() << "expected PolicyError for:\n" << src;
  return PolicyError("none", 0, 0);
}

ConnectionEvent event_of(std::initializer_list<std::pair<const std::string, std::string>> kv) {
  ConnectionEvent e;
  for (const auto& [k, v] : kv) e.values.emplace(k, v);
  return e;
}

}  // namespace

TEST(Catalog, ContainsAllVariablesPlusCollectorHost) {
  const std::vector<std::string> expected = {
      "DB_USER", "DB_NAME", "DB_TYPE", "SERVICE_NAME", "CLIENT_IP",
      "CLIENT_HOST_NAME", "CLIENT_OS_NAME", "AUTH_TYPE", "SOURCE_PROGRAM",
      "NET_PROTOCOL", "OS_USER", "SESSION_INFO", "SESSION_KEY", "CTIMEZONE",
      "DATETIME", "SERVER_IP", "SERVER_HOST_NAME", "SERVER_DESC",
      "SERVER_OS_NAME", "SENDER_IP", "STATEMENT_KEY", "COMMAND", "ERROR",
      "CONSTRUCT_KEY", "LITERALS_KEY", "COLLECTOR_HOST_NAME"};
  EXPECT_EQ(variable_catalog().size(), expected.size());
  for (const auto& name : expected) EXPECT_TRUE(is_catalog_variable(name)) << name;
  for (const auto& name : variable_catalog()) EXPECT_TRUE(is_valid_variable_name(name));
  EXPECT_FALSE(is_catalog_variable("TENANT_ID"));
}

TEST(Catalog, VariableNamePattern) {
  EXPECT_TRUE(is_valid_variable_name("A"));
  EXPECT_TRUE(is_valid_variable_name("X9_"));
  EXPECT_FALSE(is_valid_variable_name(""));
  EXPECT_FALSE(is_valid_variable_name("db_user"));
  EXPECT_FALSE(is_valid_variable_name("_X"));
  EXPECT_FALSE(is_valid_variable_name("9X"));
  EXPECT_FALSE(is_valid_variable_name("A-B"));
}

TEST(ParsePolicy, TimeZoneTerminateRule) {
  const Policy p = parse_policy(
      "rule tz { outlier: distinct($(CTIMEZONE)$, $(COLLECTOR_HOST_NAME)$) "
      "con_min_count: 1000 confidence: 0.95 action: terminate }");
  ASSERT_EQ(p.rules.size(), 1u);
  const SecurityRule& r = p.rules[0];
  EXPECT_EQ(r.id, "tz");
  EXPECT_EQ(r.outlier_vars, (std::vector<std::string>{"CTIMEZONE", "COLLECTOR_HOST_NAME"}));
  EXPECT_EQ(r.con_min_count, 1000u);
  EXPECT_NEAR(r.delta(), 0.05, 1e-12);
  EXPECT_EQ(r.action, Action::kTerminate);
  EXPECT_TRUE(r.match.empty());
}

TEST(ParsePolicy, AuthTypeAlertRuleUsesDefaults) {
  const Policy p = parse_policy(R"(
    # generic authentication outlier
    rule auth {
      outlier: distinct($(AUTH_TYPE)$, $(DB_TYPE)$, $(CLIENT_HOST_NAME)$)
      action: alert
    })");
  ASSERT_EQ(p.rules.size(), 1u);
  const SecurityRule& r = p.rules[0];
  EXPECT_EQ(r.outlier_vars,
            (std::vector<std::string>{"AUTH_TYPE", "DB_TYPE", "CLIENT_HOST_NAME"}));
  EXPECT_EQ(r.action, Action::kAlert);
  EXPECT_EQ(r.con_min_count, 1000u);
  EXPECT_DOUBLE_EQ(r.confidence, 0.95);
}

TEST(ParsePolicy, EmptyAndCommentOnlySources) {
  EXPECT_TRUE(parse_policy("").rules.empty());
  EXPECT_TRUE(parse_policy("  # nothing here\n\n").rules.empty());
}

TEST(ParsePolicy, MatchPredicateWithEscapes) {
  const Policy p = parse_policy(R"(
    rule r {
      match: DB_TYPE == "ORACLE" && SOURCE_PROGRAM == "say \"hi\" \\ bye"
      outlier: distinct($(DB_USER)$)
      action: alert
    })");
  ASSERT_EQ(p.rules[0].match.size(), 2u);
  EXPECT_EQ(p.rules[0].match[0], (MatchTerm{"DB_TYPE", "ORACLE"}));
  EXPECT_EQ(p.rules[0].match[1], (MatchTerm{"SOURCE_PROGRAM", "say \"hi\" \\ bye"}));
}

TEST(ParsePolicy, ExtensionsAdmitUnknownVariables) {
  const Policy p = parse_policy(
      "extension TENANT_ID\n"
      "rule t { outlier: distinct($(TENANT_ID)$, $(DB_USER)$) action: alert }");
  EXPECT_EQ(p.extensions, std::vector<std::string>{"TENANT_ID"});
  EXPECT_EQ(p.rules[0].outlier_vars[0], "TENANT_ID");

  // A declaration later in the file still applies.
  EXPECT_NO_THROW(parse_policy(
      "rule t { outlier: distinct($(TENANT_ID)$) action: alert }\nextension TENANT_ID"));
}

TEST(ParsePolicy, RulesKeepFileOrder) {
  const Policy p = parse_policy(
      "rule b { outlier: distinct($(DB_USER)$) action: alert }\n"
      "rule a { outlier: distinct($(OS_USER)$) action: terminate }\n");
  ASSERT_EQ(p.rules.size(), 2u);
  EXPECT_EQ(p.rules[0].id, "b");
  EXPECT_EQ(p.rules[1].id, "a");
}

TEST(ParsePolicy, Errors) {
  PolicyError e = parse_error(
      "rule x { outlier: distinct($(DB_USER)$) action: alert }\n"
      "rule x { outlier: distinct($(DB_USER)$) action: alert }");
  EXPECT_NE(std::string(e.what()).find("duplicate rule id"), std::string::npos);
  EXPECT_EQ(e.line(), 2u);
  EXPECT_EQ(e.column(), 6u);

  e = parse_error("rule x {\n  outlier: distinct($(NOPE)$) action: alert }");
  EXPECT_NE(std::string(e.what()).find("unknown variable 'NOPE'"), std::string::npos);
  EXPECT_EQ(e.line(), 2u);
  EXPECT_EQ(e.column(), 23u);

  e = parse_error("rule x { outlier: distinct($(DB_USER)$) confidence: 1.0 action: alert }");
  EXPECT_NE(std::string(e.what()).find("confidence"), std::string::npos);
  parse_error("rule x { outlier: distinct($(DB_USER)$) confidence: 0 action: alert }");
  parse_error("rule x { outlier: distinct($(DB_USER)$) confidence: -0.5 action: alert }");

  e = parse_error("rule x { outlier: distinct() action: alert }");
  EXPECT_NE(std::string(e.what()).find("at least one variable"), std::string::npos);

  // Syntax errors carry the position of the offending token.
  e = parse_error("rule x { outlier distinct($(DB_USER)$) action: alert }");
  EXPECT_EQ(e.line(), 1u);
  EXPECT_EQ(e.column(), 18u);

  parse_error("rule x { outlier: distinct($(DB_USER)$, $(DB_USER)$) action: alert }");
  parse_error("rule x { outlier: distinct($(DB_USER)$) }");
  parse_error("rule x { action: alert }");
  parse_error("rule x { outlier: distinct($(DB_USER)$) action: block }");
  parse_error("rule x { outlier: distinct($(DB_USER)$) action: alert action: alert }");
  parse_error("rule x { outlier: distinct($(DB_USER)$) con_min_count: 1.5 action: alert }");
  parse_error("rule x { outlier: distinct($(DB_USER)$) con_min_count: -3 action: alert }");
  parse_error("rule x { outlier: distinct($(DB_USER)$) frequency: 3 action: alert }");
  parse_error("rule x { match: DB_USER == \"unterminated action: alert }");
  parse_error("rule x { match: DB_USER == \"bad \\n escape\" outlier: distinct($(DB_USER)$) action: alert }");
  parse_error("rule x { outlier: distinct($(db_user)$) action: alert }");
  parse_error("extension lower");
  parse_error("policy x {}");
  parse_error("rule x { outlier: distinct($(DB_USER)$) action: alert");
}

TEST(RuleMatches, PredicateSemantics) {
  SecurityRule open;
  open.id = "open";
  open.outlier_vars = {"DB_USER"};
  EXPECT_TRUE(rule_matches(open, {}));
  EXPECT_TRUE(rule_matches(open, event_of({{"DB_USER", "x"}})));

  SecurityRule oracle = open;
  oracle.match = {{"DB_TYPE", "ORACLE"}};
  EXPECT_TRUE(rule_matches(oracle, event_of({{"DB_TYPE", "ORACLE"}})));
  EXPECT_FALSE(rule_matches(oracle, event_of({{"DB_TYPE", "oracle"}})));
  EXPECT_FALSE(rule_matches(oracle, event_of({{"DB_TYPE", "ORACLE "}})));
  EXPECT_FALSE(rule_matches(oracle, event_of({{"DB_USER", "ORACLE"}})));

  oracle.match.push_back({"OS_USER", ""});
  EXPECT_TRUE(rule_matches(oracle, event_of({{"DB_TYPE", "ORACLE"}, {"OS_USER", ""}})));
  EXPECT_FALSE(rule_matches(oracle, event_of({{"DB_TYPE", "ORACLE"}})));
}

TEST(FormatPolicy, CanonicalText) {
  const Policy p = parse_policy(
      "rule tz{match:DB_TYPE==\"ORACLE\" outlier:distinct($(CTIMEZONE)$,$(COLLECTOR_HOST_NAME)$)"
      " confidence: 0.99 action: terminate}");
  EXPECT_EQ(format_policy(p),
            "rule tz {\n"
            "  match: DB_TYPE == \"ORACLE\"\n"
            "  outlier: distinct($(CTIMEZONE)$, $(COLLECTOR_HOST_NAME)$)\n"
            "  con_min_count: 1000\n"
            "  confidence: 0.99\n"
            "  action: terminate\n"
            "}\n");
}

// Property: random rules survive format -> parse unchanged, and parsing is
// deterministic.
TEST(FormatPolicy, RoundTripProperty) {
  std::mt19937_64 rng(20240601);
  const auto& catalog = variable_catalog();
  const std::string alphabet = "ab \"\\\x1F\xC3\xA9#{}$()";
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

  for (int iter = 0; iter < 500; ++iter) {
    Policy p;
    if (pick(3) == 0) p.extensions = {"EXT_ONE", "EXT2"};
    const std::size_t rules = pick(4);
    for (std::size_t r = 0; r < rules; ++r) {
      SecurityRule rule;
      rule.id = "rule_" + std::to_string(r) + (pick(2) ? "-x.y" : "");
      std::vector<std::string> pool(catalog.begin(), catalog.end());
      for (const auto& e : p.extensions) pool.push_back(e);
      std::shuffle(pool.begin(), pool.end(), rng);
      rule.outlier_vars.assign(pool.begin(), pool.begin() + 1 + static_cast<long>(pick(4)));
      for (std::size_t t = pick(3); t > 0; --t) {
        std::string lit;
        for (std::size_t c = pick(6); c > 0; --c) lit.push_back(alphabet[pick(alphabet.size())]);
        rule.match.push_back({pool[pick(pool.size())], lit});
      }
      rule.con_min_count = rng() % 100000;
      rule.confidence = std::uniform_real_distribution<double>(1e-6, 1.0 - 1e-6)(rng);
      rule.action = pick(2) ? Action::kAlert : Action::kTerminate;
      p.rules.push_back(std::move(rule));
    }
    const std::string text = format_policy(p);
    const Policy reparsed = parse_policy(text);
    ASSERT_EQ(reparsed, p) << text;
    ASSERT_EQ(parse_policy(text), reparsed);
    for (const auto& rule : reparsed.rules) {
      for (const auto& v : rule.outlier_vars) {
        EXPECT_TRUE(is_catalog_variable(v) ||
                    std::find(reparsed.extensions.begin(), reparsed.extensions.end(), v) !=
                        reparsed.extensions.end());
      }
    }
  }
}

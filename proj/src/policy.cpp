#include "connguard/policy.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace connguard {

namespace {

const std::vector<std::string> kCatalog = {
    // database
    "DB_USER", "DB_NAME", "DB_TYPE", "SERVICE_NAME",
    // client
    "CLIENT_IP", "CLIENT_HOST_NAME", "CLIENT_OS_NAME", "AUTH_TYPE",
    "SOURCE_PROGRAM", "NET_PROTOCOL", "OS_USER", "SESSION_INFO", "SESSION_KEY",
    "CTIMEZONE", "DATETIME",
    // server
    "SERVER_IP", "SERVER_HOST_NAME", "SERVER_DESC", "SERVER_OS_NAME",
    "SENDER_IP",
    // query
    "STATEMENT_KEY", "COMMAND", "ERROR", "CONSTRUCT_KEY", "LITERALS_KEY",
    // collector
    "COLLECTOR_HOST_NAME",
};

enum class Tok {
  kIdent,
  kString,
  kNumber,
  kLBrace,
  kRBrace,
  kLParen,
  kRParen,
  kComma,
  kColon,
  kAnd,      // &&
  kEq,       // ==
  kVarOpen,  // $(
  kVarClose, // )$
  kEnd,
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::kEnd: return "end of input";
    case Tok::kString: return "string literal";
    default: return "'" + t.text + "'";
  }
}

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         c == '.';
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space_and_comments();
      if (pos_ >= src_.size()) {
        out.push_back({Tok::kEnd, "", line_, col_});
        return out;
      }
      out.push_back(next());
    }
  }

 private:
  char peek(std::size_t off = 0) const {
    return pos_ + off < src_.size() ? src_[pos_ + off] : '\0';
  }

  void advance(std::size_t count = 1) {
    for (std::size_t i = 0; i < count && pos_ < src_.size(); ++i) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  void skip_space_and_comments() {
    while (pos_ < src_.size()) {
      char c = peek();
      if (c == '#') {
        while (pos_ < src_.size() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Token next() {
    const std::size_t line = line_;
    const std::size_t col = col_;
    auto simple = [&](Tok kind, std::size_t len) {
      Token t{kind, std::string(src_.substr(pos_, len)), line, col};
      advance(len);
      return t;
    };

    const char c = peek();
    switch (c) {
      case '{': return simple(Tok::kLBrace, 1);
      case '}': return simple(Tok::kRBrace, 1);
      case '(': return simple(Tok::kLParen, 1);
      case ',': return simple(Tok::kComma, 1);
      case ':': return simple(Tok::kColon, 1);
      case ')':
        return peek(1) == '$' ? simple(Tok::kVarClose, 2)
                              : simple(Tok::kRParen, 1);
      case '$':
        if (peek(1) == '(') return simple(Tok::kVarOpen, 2);
        break;
      case '&':
        if (peek(1) == '&') return simple(Tok::kAnd, 2);
        break;
      case '=':
        if (peek(1) == '=') return simple(Tok::kEq, 2);
        break;
      case '"':
        return string_literal(line, col);
      default:
        break;
    }

    if (is_ident_start(c)) {
      std::size_t len = 1;
      while (is_ident_char(peek(len))) ++len;
      return simple(Tok::kIdent, len);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' ||
        c == '+') {
      std::size_t len = 1;
      for (;;) {
        char d = peek(len);
        char prev = peek(len - 1);
        if (std::isdigit(static_cast<unsigned char>(d)) || d == '.' ||
            d == 'e' || d == 'E' ||
            ((d == '-' || d == '+') && (prev == 'e' || prev == 'E'))) {
          ++len;
        } else {
          break;
        }
      }
      return simple(Tok::kNumber, len);
    }
    throw PolicyError(std::string("unexpected character '") + c + "'", line,
                      col);
  }

  Token string_literal(std::size_t line, std::size_t col) {
    advance();  // opening quote
    std::string value;
    for (;;) {
      if (pos_ >= src_.size()) {
        throw PolicyError("unterminated string literal", line, col);
      }
      char c = peek();
      if (c == '"') {
        advance();
        return {Tok::kString, value, line, col};
      }
      if (c == '\\') {
        char e = peek(1);
        if (e != '"' && e != '\\') {
          throw PolicyError("invalid escape sequence in string literal", line_,
                            col_);
        }
        value.push_back(e);
        advance(2);
        continue;
      }
      value.push_back(c);
      advance();
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

// Variable reference awaiting catalog validation.
struct PendingVar {
  std::string name;
  std::size_t line;
  std::size_t column;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Policy run() {
    Policy policy;
    std::set<std::string, std::less<>> ids;
    while (cur().kind != Tok::kEnd) {
      const Token& kw = expect(Tok::kIdent, "'rule' or 'extension'");
      if (kw.text == "extension") {
        const Token& name = expect(Tok::kIdent, "variable name");
        if (!is_valid_variable_name(name.text)) {
          throw PolicyError("invalid extension variable name '" + name.text +
                                "'",
                            name.line, name.column);
        }
        if (std::find(policy.extensions.begin(), policy.extensions.end(),
                      name.text) == policy.extensions.end()) {
          policy.extensions.push_back(name.text);
        }
      } else if (kw.text == "rule") {
        const Token& id_tok = cur();
        SecurityRule rule = parse_rule();
        if (!ids.insert(rule.id).second) {
          throw PolicyError("duplicate rule id '" + rule.id + "'", id_tok.line,
                            id_tok.column);
        }
        policy.rules.push_back(std::move(rule));
      } else {
        throw PolicyError("expected 'rule' or 'extension', got '" + kw.text +
                              "'",
                          kw.line, kw.column);
      }
    }

    for (const PendingVar& v : vars_) {
      if (!is_catalog_variable(v.name) &&
          std::find(policy.extensions.begin(), policy.extensions.end(),
                    v.name) == policy.extensions.end()) {
        throw PolicyError("unknown variable '" + v.name +
                              "' (declare it with 'extension " + v.name + "')",
                          v.line, v.column);
      }
    }
    return policy;
  }

 private:
  const Token& cur() const { return toks_[pos_]; }

  const Token& expect(Tok kind, const std::string& what) {
    const Token& t = cur();
    if (t.kind != kind) {
      throw PolicyError("expected " + what + ", got " + describe(t), t.line,
                        t.column);
    }
    ++pos_;
    return t;
  }

  void expect_keyword(std::string_view word) {
    const Token& t = cur();
    if (t.kind != Tok::kIdent || t.text != word) {
      throw PolicyError("expected '" + std::string(word) + "', got " +
                            describe(t),
                        t.line, t.column);
    }
    ++pos_;
  }

  std::string variable_name(const Token& t) {
    if (!is_valid_variable_name(t.text)) {
      throw PolicyError("invalid variable name '" + t.text + "'", t.line,
                        t.column);
    }
    vars_.push_back({t.text, t.line, t.column});
    return t.text;
  }

  SecurityRule parse_rule() {
    SecurityRule rule;
    const Token& id = expect(Tok::kIdent, "rule id");
    rule.id = id.text;
    expect(Tok::kLBrace, "'{'");

    std::set<std::string, std::less<>> seen;
    bool have_outlier = false;
    bool have_action = false;
    while (cur().kind != Tok::kRBrace) {
      const Token& field = expect(Tok::kIdent, "field name or '}'");
      expect(Tok::kColon, "':'");
      if (!seen.insert(field.text).second) {
        throw PolicyError("duplicate field '" + field.text + "'", field.line,
                          field.column);
      }
      if (field.text == "match") {
        parse_match(rule);
      } else if (field.text == "outlier") {
        parse_outlier(rule, field);
        have_outlier = true;
      } else if (field.text == "con_min_count") {
        const Token& t = expect(Tok::kNumber, "unsigned integer");
        rule.con_min_count = parse_uint(t);
      } else if (field.text == "confidence") {
        const Token& t = expect(Tok::kNumber, "number");
        rule.confidence = parse_confidence(t);
      } else if (field.text == "action") {
        const Token& t = expect(Tok::kIdent, "'alert' or 'terminate'");
        if (t.text == "alert") {
          rule.action = Action::kAlert;
        } else if (t.text == "terminate") {
          rule.action = Action::kTerminate;
        } else {
          throw PolicyError("unknown action '" + t.text + "'", t.line,
                            t.column);
        }
        have_action = true;
      } else {
        throw PolicyError("unknown field '" + field.text + "'", field.line,
                          field.column);
      }
    }
    const Token& close = expect(Tok::kRBrace, "'}'");
    if (!have_outlier) {
      throw PolicyError("rule '" + rule.id + "' has no 'outlier' field",
                        close.line, close.column);
    }
    if (!have_action) {
      throw PolicyError("rule '" + rule.id + "' has no 'action' field",
                        close.line, close.column);
    }
    return rule;
  }

  void parse_match(SecurityRule& rule) {
    for (;;) {
      const Token& var = expect(Tok::kIdent, "variable name");
      std::string name = variable_name(var);
      expect(Tok::kEq, "'=='");
      const Token& lit = expect(Tok::kString, "string literal");
      rule.match.push_back({std::move(name), lit.text});
      if (cur().kind != Tok::kAnd) break;
      ++pos_;
    }
  }

  void parse_outlier(SecurityRule& rule, const Token& field) {
    expect_keyword("distinct");
    expect(Tok::kLParen, "'('");
    if (cur().kind == Tok::kRParen) {
      throw PolicyError("distinct() needs at least one variable", field.line,
                        field.column);
    }
    for (;;) {
      expect(Tok::kVarOpen, "'$('");
      const Token& var = expect(Tok::kIdent, "variable name");
      std::string name = variable_name(var);
      expect(Tok::kVarClose, "')$'");
      if (std::find(rule.outlier_vars.begin(), rule.outlier_vars.end(),
                    name) != rule.outlier_vars.end()) {
        throw PolicyError("variable '" + name + "' repeated in distinct()",
                          var.line, var.column);
      }
      rule.outlier_vars.push_back(std::move(name));
      if (cur().kind != Tok::kComma) break;
      ++pos_;
    }
    expect(Tok::kRParen, "')'");
  }

  static std::uint64_t parse_uint(const Token& t) {
    std::uint64_t value = 0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
      throw PolicyError("invalid unsigned integer '" + t.text + "'", t.line,
                        t.column);
    }
    return value;
  }

  static double parse_confidence(const Token& t) {
    double value = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
      throw PolicyError("invalid number '" + t.text + "'", t.line, t.column);
    }
    if (!(value > 0.0 && value < 1.0)) {
      throw PolicyError("confidence must lie strictly between 0 and 1, got " +
                            t.text,
                        t.line, t.column);
    }
    return value;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<PendingVar> vars_;
};

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string shortest_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

PolicyError::PolicyError(const std::string& message, std::size_t line,
                         std::size_t column)
    : std::runtime_error("line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

bool is_valid_variable_name(std::string_view name) {
  if (name.empty() || name.front() < 'A' || name.front() > 'Z') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
  });
}

const std::vector<std::string>& variable_catalog() { return kCatalog; }

bool is_catalog_variable(std::string_view name) {
  return std::find(kCatalog.begin(), kCatalog.end(), name) != kCatalog.end();
}

std::string_view to_string(Action action) {
  return action == Action::kAlert ? "alert" : "terminate";
}

Policy parse_policy(std::string_view source) {
  return Parser(Lexer(source).run()).run();
}

Policy load_policy_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open policy file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_policy(buf.str());
}

bool rule_matches(const SecurityRule& rule, const ConnectionEvent& event) {
  return std::all_of(rule.match.begin(), rule.match.end(),
                     [&](const MatchTerm& term) {
                       const std::string* value = event.find(term.variable);
                       return value != nullptr && *value == term.literal;
                     });
}

std::string format_rule(const SecurityRule& rule) {
  std::string out = "rule " + rule.id + " {\n";
  if (!rule.match.empty()) {
    out += "  match: ";
    for (std::size_t i = 0; i < rule.match.size(); ++i) {
      if (i > 0) out += " && ";
      out += rule.match[i].variable + " == " + quote(rule.match[i].literal);
    }
    out += "\n";
  }
  out += "  outlier: distinct(";
  for (std::size_t i = 0; i < rule.outlier_vars.size(); ++i) {
    if (i > 0) out += ", ";
    out += "$(" + rule.outlier_vars[i] + ")$";
  }
  out += ")\n";
  out += "  con_min_count: " + std::to_string(rule.con_min_count) + "\n";
  out += "  confidence: " + shortest_double(rule.confidence) + "\n";
  out += "  action: " + std::string(to_string(rule.action)) + "\n";
  out += "}\n";
  return out;
}

std::string format_policy(const Policy& policy) {
  std::string out;
  for (const std::string& ext : policy.extensions) {
    out += "extension " + ext + "\n";
  }
  for (const SecurityRule& rule : policy.rules) {
    if (!out.empty()) out += "\n";
    out += format_rule(rule);
  }
  return out;
}

}  // namespace connguard

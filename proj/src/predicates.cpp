#include "regen/predicates.hpp"

#include <cctype>
#include <charconv>

#include "regen/error.hpp"

namespace regen {

const std::vector<PredicateSpec>& predicate_library() {
  using enum ArgKind;
  static const std::vector<PredicateSpec> lib = {
      {"behind_vehicle", {kAgent, kAgent}},
      {"right_in_front", {kAgent, kAgent}},
      {"are_close_by", {kAgent, kAgent}},
      {"is_currently_moving", {kAgent}},
      {"is_currently_stopped", {kAgent}},
      {"is_braking", {kAgent}},
      {"is_ego_driving_steady", {kAgent}},
      {"in_lane", {kAgent, kText}},
      {"at_intersection", {kAgent}},
      {"property_is", {kAgent, kText, kText}},
      {"gnss_error_exceeds", {kAgent, kNumber}},
  };
  return lib;
}

const PredicateSpec* find_predicate(std::string_view name) {
  for (const auto& p : predicate_library()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::set<std::string> PredicateExpr::predicate_names() const {
  std::set<std::string> out;
  for (const auto& clause : clauses) {
    for (const auto& c : clause) out.insert(c.name);
  }
  return out;
}

std::set<std::string> PredicateExpr::agents() const {
  std::set<std::string> out;
  for (const auto& clause : clauses) {
    for (const auto& c : clause) {
      const PredicateSpec* spec = find_predicate(c.name);
      for (std::size_t i = 0; i < c.args.size(); ++i) {
        if (!spec || (i < spec->args.size() && spec->args[i] == ArgKind::kAgent)) out.insert(c.args[i]);
      }
    }
  }
  return out;
}

namespace {

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-' || c == '.';
}

class ExprParser {
 public:
  ExprParser(std::string_view text, std::string_view self) : text_(text), self_(self) {}

  PredicateExpr parse() {
    PredicateExpr expr;
    expr.clauses.push_back({});
    expr.clauses.back().push_back(call());
    while (true) {
      skip();
      if (at_end()) break;
      if (keyword("and") || symbol("&&")) {
        expr.clauses.back().push_back(call());
      } else if (keyword("or") || symbol("||")) {
        expr.clauses.push_back({call()});
      } else {
        error("expected 'and' or 'or'");
      }
    }
    return expr;
  }

 private:
  [[noreturn]] void error(const std::string& what) {
    fail(ErrorKind::kParse, "predicate expression '" + std::string(text_) + "': " + what +
                                " at offset " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool at_end() const { return pos_ >= text_.size(); }
  bool symbol(std::string_view s) {
    skip();
    if (text_.substr(pos_, s.size()) == s) {
      pos_ += s.size();
      return true;
    }
    return false;
  }
  bool keyword(std::string_view k) {
    skip();
    if (text_.substr(pos_, k.size()) != k) return false;
    std::size_t end = pos_ + k.size();
    if (end < text_.size() && ident_char(text_[end])) return false;
    pos_ = end;
    return true;
  }
  std::string identifier() {
    skip();
    std::size_t start = pos_;
    while (pos_ < text_.size() && ident_char(text_[pos_])) ++pos_;
    if (pos_ == start) error("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }
  std::string argument() {
    skip();
    if (pos_ < text_.size() && (text_[pos_] == '"' || text_[pos_] == '\'')) {
      char q = text_[pos_++];
      std::size_t start = pos_;
      while (pos_ < text_.size() && text_[pos_] != q) ++pos_;
      if (at_end()) error("unterminated string");
      std::string out(text_.substr(start, pos_ - start));
      ++pos_;
      return out;
    }
    std::string id = identifier();
    if (id == "agent_name" && !self_.empty()) return std::string(self_);
    return id;
  }
  PredicateCall call() {
    PredicateCall c;
    c.name = identifier();
    if (!symbol("(")) error("expected '('");
    if (!symbol(")")) {
      do {
        c.args.push_back(argument());
      } while (symbol(","));
      if (!symbol(")")) error("expected ')'");
    }
    return c;
  }

  std::string_view text_;
  std::string_view self_;
  std::size_t pos_ = 0;
};

bool plain(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  }
  return true;
}

}  // namespace

PredicateExpr parse_expression(std::string_view text, std::string_view self_agent) {
  return ExprParser(text, self_agent).parse();
}

std::string to_string(const PredicateCall& call) {
  std::string out = call.name + "(";
  for (std::size_t i = 0; i < call.args.size(); ++i) {
    if (i > 0) out += ", ";
    out += plain(call.args[i]) ? call.args[i] : "\"" + call.args[i] + "\"";
  }
  return out + ")";
}

std::string to_string(const PredicateExpr& expr) {
  std::string out;
  for (std::size_t i = 0; i < expr.clauses.size(); ++i) {
    if (i > 0) out += " or ";
    for (std::size_t j = 0; j < expr.clauses[i].size(); ++j) {
      if (j > 0) out += " and ";
      out += to_string(expr.clauses[i][j]);
    }
  }
  return out;
}

std::vector<std::string> check_expression(const PredicateExpr& expr,
                                          const std::set<std::string>& known_agents) {
  std::vector<std::string> problems;
  for (const auto& clause : expr.clauses) {
    for (const auto& c : clause) {
      const PredicateSpec* spec = find_predicate(c.name);
      if (!spec) {
        problems.push_back("unknown predicate '" + c.name + "'");
        continue;
      }
      if (spec->args.size() != c.args.size()) {
        problems.push_back("predicate '" + c.name + "' takes " + std::to_string(spec->args.size()) +
                           " arguments, got " + std::to_string(c.args.size()));
        continue;
      }
      for (std::size_t i = 0; i < c.args.size(); ++i) {
        const std::string& a = c.args[i];
        if (spec->args[i] == ArgKind::kAgent && !known_agents.count(a)) {
          problems.push_back("predicate '" + c.name + "' references unknown agent '" + a + "'");
        }
        if (spec->args[i] == ArgKind::kNumber) {
          double v = 0;
          auto r = std::from_chars(a.data(), a.data() + a.size(), v);
          if (r.ec != std::errc() || r.ptr != a.data() + a.size()) {
            problems.push_back("predicate '" + c.name + "' expects a number, got '" + a + "'");
          }
        }
      }
    }
  }
  return problems;
}

}  // namespace regen

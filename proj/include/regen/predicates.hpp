#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace regen {

enum class ArgKind { kAgent, kText, kNumber };

struct PredicateSpec {
  std::string_view name;
  std::vector<ArgKind> args;
};

// The closed predicate library, in a fixed order.
const std::vector<PredicateSpec>& predicate_library();
const PredicateSpec* find_predicate(std::string_view name);

struct PredicateCall {
  std::string name;
  std::vector<std::string> args;
  friend bool operator==(const PredicateCall&, const PredicateCall&) = default;
};

// Disjunctive normal form: OR over clauses, each an AND of calls.
struct PredicateExpr {
  std::vector<std::vector<PredicateCall>> clauses;
  friend bool operator==(const PredicateExpr&, const PredicateExpr&) = default;

  std::set<std::string> predicate_names() const;
  std::set<std::string> agents() const;  // arguments in agent positions
};

// Accepts `and`/`or` (or `&&`/`||`); arguments are bare identifiers or quoted
// strings. Occurrences of the bare identifier `agent_name` are replaced by
// `self_agent` when it is non-empty. Throws kParse with the offending text.
PredicateExpr parse_expression(std::string_view text, std::string_view self_agent = {});

// Canonical text; arguments with characters outside [A-Za-z0-9_] are
// double-quoted.
std::string to_string(const PredicateExpr& expr);
std::string to_string(const PredicateCall& call);

// Unknown predicates, arity mismatches, unknown agents and non-numeric numeric
// arguments, one message per problem.
std::vector<std::string> check_expression(const PredicateExpr& expr,
                                          const std::set<std::string>& known_agents);

}  // namespace regen

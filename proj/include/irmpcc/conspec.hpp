#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irmpcc/assertion.hpp"
#include "irmpcc/bytecode.hpp"
#include "irmpcc/value.hpp"

namespace irm {

enum class StateType { Boolean, Int, String };

struct StateDecl {
  std::string name;
  StateType type = StateType::Int;
  Value initial = make_int(0);
};

enum class Modifier { Before, After, Exceptional };
std::string_view modifier_name(Modifier m);

/// Guard and update expressions. Comparisons `>`/`>=` are normalized away at
/// parse time.
enum class CKind { Lit, StateVar, Param, Ret, Not, And, Or, Eq, Ne, Lt, Le, Add, Sub, Mul };

struct CExpr;
using CExprPtr = std::shared_ptr<const CExpr>;

struct CExpr {
  CKind kind = CKind::Lit;
  Value lit;
  std::string name;       ///< StateVar/Param/Ret
  std::size_t index = 0;  ///< StateVar: declaration index; Param: 0-based position
  bool boolean = false;   ///< statically a truth value
  std::vector<CExprPtr> kids;
};

struct Assignment {
  std::string var;
  std::size_t var_index = 0;
  CExprPtr value;
};

struct GuardedCommand {
  CExprPtr guard;
  std::vector<Assignment> updates;
};

struct ClauseParam {
  std::string type;
  std::string name;
};

struct EventClause {
  Modifier modifier = Modifier::Before;
  std::string owner;
  std::string method;
  std::vector<ClauseParam> params;
  std::optional<std::string> ret;
  std::vector<GuardedCommand> commands;
  std::size_t line = 0;

  std::string qualified() const { return owner + "." + method; }
};

struct Contract {
  std::vector<StateDecl> state;
  std::vector<EventClause> clauses;

  const EventClause* find(Modifier m, std::string_view owner, std::string_view method) const;
  std::optional<std::size_t> state_index(std::string_view name) const;
  /// Every (owner, method) mentioned by some clause.
  std::vector<MethodRef> methods() const;
  bool mentions(std::string_view owner, std::string_view method) const;
};

/// Parses and validates. Syntax errors raise ParseError; undeclared names,
/// non-default initializers, duplicate clauses and non-exhaustive return
/// clauses raise ValidationError.
Contract parse_contract(std::string_view text);
std::string print_contract(const Contract& k);
std::string to_string(const CExprPtr& e);

/// Checks that every clause names an API method of `p` with matching arity,
/// and that AFTER return bindings only appear on value-returning methods.
void check_contract_against(const Contract& k, const Program& p);

/// Classes whose definition of the invoked method an instanceof cascade must
/// distinguish, most-derived first, when the call is security relevant;
/// empty otherwise. Static calls yield their single resolved definer.
std::vector<std::string> relevant_dispatch(const Contract& k, const Program& p, const Instruction& invoke);

/// One security-relevant action.
enum class ActionKind { Pre, Post, Exn };

struct SecurityAction {
  ActionKind kind = ActionKind::Pre;
  MethodRef method;
  std::vector<Value> args;
  std::optional<Value> ret;  ///< Post actions of value-returning methods only

  friend bool operator==(const SecurityAction& a, const SecurityAction& b);
};

/// `PRE c.m(1,"a")`, `POST c.m(1)=@3`, `EXN c.m()`.
std::string to_string(const SecurityAction& a);
SecurityAction parse_action(std::string_view line);
std::vector<SecurityAction> parse_trace(std::string_view text);

/// Automaton state: a valuation of the security-state variables, or bottom.
struct MonitorState {
  bool violated = false;
  std::vector<Value> vars;
  friend bool operator==(const MonitorState& a, const MonitorState& b);
};

std::string to_string(const MonitorState& q, const Contract& k);

MonitorState initial_state(const Contract& k);
/// First guard that holds fires its update; a matching clause with no
/// holding guard, or a bottom input, yields bottom. Unmentioned methods are
/// the identity. Throws ValidationError on an arity mismatch.
MonitorState delta(const Contract& k, const MonitorState& q, const SecurityAction& a);
bool accepts(const Contract& k, const std::vector<SecurityAction>& trace);

/// Direct evaluation of a contract expression over a state and an action.
Value eval_cexpr(const CExprPtr& e, const std::vector<Value>& vars, const std::vector<Value>& args,
                 const std::optional<Value>& ret);
/// Truth of a value in guard position: anything but 0.
bool truthy(const Value& v);

/// Translation into the assertion language. The callback supplies the term
/// for each state variable, parameter or return binding.
using CVarTerm = std::function<Term(const CExpr&)>;
Term cexpr_condition(const CExprPtr& e, const CVarTerm& var);
Term cexpr_value(const CExprPtr& e, const CVarTerm& var);

}  // namespace irm

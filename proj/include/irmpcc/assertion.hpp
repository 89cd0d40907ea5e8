#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "irmpcc/value.hpp"

namespace irm {

/// Node kinds. The first group are expressions, the second formulas.
enum class Kind : std::uint8_t {
  Lit,
  Field,   // e.f
  Static,  // c.f
  Stack,   // s_i
  Local,   // l_i
  Ghost,   // x#g
  Fresh,   // generalization variable introduced by the checker
  Bin,
  Cond,  // (a -> e1 | e2)
  Pair,
  True,
  False,
  Eq,
  Lt,
  Not,
  And,
  Or,
  Implies,
  Is,  // e : c
};

enum class BinOp : std::uint8_t { Add, Sub, Mul };

struct Node;
using Term = std::shared_ptr<const Node>;

/// Immutable AST node shared freely between terms. Hash and tree size are
/// computed once at construction.
struct Node {
  Kind kind = Kind::True;
  BinOp op = BinOp::Add;
  std::int64_t index = 0;  ///< Stack/Local/Fresh
  std::string name;        ///< Field/Static field name, Ghost name, Is class
  std::string owner;       ///< Static owner class
  Value lit;
  std::vector<Term> kids;
  std::size_t hash = 0;
  std::uint64_t size = 1;  ///< saturating tree size
};

bool is_formula_kind(Kind k);
/// Atomic references that substitution can target.
bool is_atom(const Term& t);

// Expression factories.
Term lit(Value v);
Term int_lit(std::int64_t v);
Term bot_lit();
Term field(Term obj, std::string f);
Term static_ref(std::string cls, std::string f);
Term stack(std::int64_t i);
Term local(std::int64_t i);
Term ghost(std::string name);
Term fresh(std::int64_t n);
Term bin(BinOp op, Term a, Term b);
Term cond(Term g, Term a, Term b);
Term pair(Term a, Term b);

// Formula factories. These build exactly the requested node; simplification
// lives in the checker.
Term tt();
Term ff();
Term eq(Term a, Term b);
Term ne(Term a, Term b);
Term lt(Term a, Term b);
Term not_(Term a);
Term and_(Term a, Term b);
Term or_(Term a, Term b);
Term implies(Term a, Term b);
Term is(Term e, std::string cls);
/// Right-nested conjunction; tt when empty.
Term conj(const std::vector<Term>& parts);
/// Flattens nested And nodes into their conjuncts (tt yields nothing).
std::vector<Term> conjuncts(const Term& a);

/// IF(g, a, b) = (g => a) and (not g => b).
Term if_macro(Term g, Term a, Term b);
/// SELECT(g1..gn, b1..bn, e) = IF(g1, b1, IF(g2, b2, ... e)). Throws on length mismatch.
Term select_macro(const std::vector<Term>& guards, const std::vector<Term>& bodies, Term otherwise);

/// Copy of `src` with its children replaced.
Term with_kids(const Node& src, std::vector<Term> kids);
/// Two's-complement wrapping arithmetic.
std::int64_t wrap(BinOp op, std::int64_t a, std::int64_t b);

bool term_equal(const Term& a, const Term& b);
std::strong_ordering term_compare(const Term& a, const Term& b);

struct TermHash {
  std::size_t operator()(const Term& t) const { return t->hash; }
};
struct TermEq {
  bool operator()(const Term& a, const Term& b) const { return term_equal(a, b); }
};

std::string to_string(const Term& t);
/// Parses the prefix syntax; throws ParseError.
Term parse_assertion(std::string_view text);
Term parse_expression(std::string_view text);

/// Simultaneous replacement of atomic targets. Targets must be atoms.
Term subst(const Term& a, const std::vector<std::pair<Term, Term>>& map);
Term subst(const Term& a, const Term& target, const Term& replacement);

/// Adds k to every stack index. Throws irm::Error if an index would go negative.
Term shift_k(const Term& a, std::int64_t k);
inline Term shift(const Term& a) { return shift_k(a, 1); }
inline Term unshift(const Term& a) { return shift_k(a, -1); }

/// Visits every node once (DAG-aware).
void visit(const Term& a, const std::function<void(const Node&)>& f);
bool mentions(const Term& a, const std::function<bool(const Node&)>& pred);
bool mentions_stack(const Term& a);
bool mentions_ghost(const Term& a);
bool mentions_stack_index(const Term& a, std::int64_t i);
/// Highest Fresh index in use, or -1.
std::int64_t max_fresh(const Term& a);

/// What evaluation needs from a machine state. The defaults yield bottom.
class StateView {
 public:
  virtual ~StateView() = default;
  virtual Value stack(std::int64_t) const { return bottom(); }
  virtual Value local(std::int64_t) const { return bottom(); }
  virtual Value static_field(const std::string&, const std::string&) const { return bottom(); }
  virtual Value field(Loc, const std::string&) const { return bottom(); }
  virtual Value ghost(const std::string&) const { return bottom(); }
  virtual Value fresh(std::int64_t) const { return bottom(); }
  virtual bool instance_of(Loc, const std::string&) const { return false; }
};

Value eval_expr(const Term& e, const StateView& s);
bool eval_assert(const Term& a, const StateView& s);

}  // namespace irm

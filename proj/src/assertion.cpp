#include "irmpcc/assertion.hpp"

#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "irmpcc/error.hpp"
#include "lexer.hpp"

namespace irm {

namespace {

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r = a + b;
  return r < a ? UINT64_MAX : r;
}

Term build(Node n) {
  std::size_t h = static_cast<std::size_t>(n.kind) * 31 + static_cast<std::size_t>(n.op);
  h = mix(h, std::hash<std::int64_t>{}(n.index));
  if (!n.name.empty()) h = mix(h, std::hash<std::string>{}(n.name));
  if (!n.owner.empty()) h = mix(h, std::hash<std::string>{}(n.owner));
  if (n.kind == Kind::Lit) h = mix(h, std::hash<std::string>{}(to_string(n.lit)));
  std::uint64_t size = 1;
  for (const auto& k : n.kids) {
    h = mix(h, k->hash);
    size = sat_add(size, k->size);
  }
  n.hash = h;
  n.size = size;
  return std::make_shared<const Node>(std::move(n));
}

Term node(Kind k, std::vector<Term> kids = {}) {
  Node n;
  n.kind = k;
  n.kids = std::move(kids);
  return build(std::move(n));
}

}  // namespace

Term with_kids(const Node& src, std::vector<Term> kids) {
  Node n;
  n.kind = src.kind;
  n.op = src.op;
  n.index = src.index;
  n.name = src.name;
  n.owner = src.owner;
  n.lit = src.lit;
  n.kids = std::move(kids);
  return build(std::move(n));
}

bool is_formula_kind(Kind k) { return k >= Kind::True; }

bool is_atom(const Term& t) {
  switch (t->kind) {
    case Kind::Static:
    case Kind::Stack:
    case Kind::Local:
    case Kind::Ghost:
    case Kind::Fresh:
      return true;
    default:
      return false;
  }
}

Term lit(Value v) {
  Node n;
  n.kind = Kind::Lit;
  n.lit = std::move(v);
  return build(std::move(n));
}
Term int_lit(std::int64_t v) { return lit(make_int(v)); }
Term bot_lit() { return lit(bottom()); }

Term field(Term obj, std::string f) {
  Node n;
  n.kind = Kind::Field;
  n.name = std::move(f);
  n.kids = {std::move(obj)};
  return build(std::move(n));
}

Term static_ref(std::string cls, std::string f) {
  Node n;
  n.kind = Kind::Static;
  n.owner = std::move(cls);
  n.name = std::move(f);
  return build(std::move(n));
}

namespace {
Term indexed(Kind k, std::int64_t i) {
  Node n;
  n.kind = k;
  n.index = i;
  return build(std::move(n));
}
}  // namespace

Term stack(std::int64_t i) { return indexed(Kind::Stack, i); }
Term local(std::int64_t i) { return indexed(Kind::Local, i); }
Term fresh(std::int64_t i) { return indexed(Kind::Fresh, i); }

Term ghost(std::string name) {
  Node n;
  n.kind = Kind::Ghost;
  n.name = std::move(name);
  return build(std::move(n));
}

Term bin(BinOp op, Term a, Term b) {
  Node n;
  n.kind = Kind::Bin;
  n.op = op;
  n.kids = {std::move(a), std::move(b)};
  return build(std::move(n));
}

Term cond(Term g, Term a, Term b) { return node(Kind::Cond, {std::move(g), std::move(a), std::move(b)}); }
Term pair(Term a, Term b) { return node(Kind::Pair, {std::move(a), std::move(b)}); }

Term tt() {
  static const Term t = node(Kind::True);
  return t;
}
Term ff() {
  static const Term t = node(Kind::False);
  return t;
}
Term eq(Term a, Term b) { return node(Kind::Eq, {std::move(a), std::move(b)}); }
Term ne(Term a, Term b) { return not_(eq(std::move(a), std::move(b))); }
Term lt(Term a, Term b) { return node(Kind::Lt, {std::move(a), std::move(b)}); }
Term not_(Term a) { return node(Kind::Not, {std::move(a)}); }
Term and_(Term a, Term b) { return node(Kind::And, {std::move(a), std::move(b)}); }
Term or_(Term a, Term b) { return node(Kind::Or, {std::move(a), std::move(b)}); }
Term implies(Term a, Term b) { return node(Kind::Implies, {std::move(a), std::move(b)}); }

Term is(Term e, std::string cls) {
  Node n;
  n.kind = Kind::Is;
  n.name = std::move(cls);
  n.kids = {std::move(e)};
  return build(std::move(n));
}

Term conj(const std::vector<Term>& parts) {
  if (parts.empty()) return tt();
  Term acc = parts.back();
  for (std::size_t i = parts.size() - 1; i-- > 0;) acc = and_(parts[i], acc);
  return acc;
}

std::vector<Term> conjuncts(const Term& a) {
  std::vector<Term> out;
  std::vector<Term> work{a};
  while (!work.empty()) {
    Term t = work.back();
    work.pop_back();
    if (t->kind == Kind::And) {
      work.push_back(t->kids[1]);
      work.push_back(t->kids[0]);
    } else if (t->kind != Kind::True) {
      out.push_back(t);
    }
  }
  return out;
}

Term if_macro(Term g, Term a, Term b) {
  return and_(implies(g, std::move(a)), implies(not_(g), std::move(b)));
}

Term select_macro(const std::vector<Term>& guards, const std::vector<Term>& bodies, Term otherwise) {
  if (guards.size() != bodies.size()) throw Error("SELECT: guard and body counts differ");
  Term acc = std::move(otherwise);
  for (std::size_t i = guards.size(); i-- > 0;) acc = if_macro(guards[i], bodies[i], acc);
  return acc;
}

std::strong_ordering term_compare(const Term& a, const Term& b) {
  if (a == b) return std::strong_ordering::equal;
  if (auto c = a->kind <=> b->kind; c != 0) return c;
  if (auto c = a->op <=> b->op; c != 0) return c;
  if (auto c = a->index <=> b->index; c != 0) return c;
  if (auto c = a->name <=> b->name; c != 0) return c;
  if (auto c = a->owner <=> b->owner; c != 0) return c;
  if (a->kind == Kind::Lit)
    if (auto c = value_compare(a->lit, b->lit); c != 0) return c;
  if (auto c = a->kids.size() <=> b->kids.size(); c != 0) return c;
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (auto c = term_compare(a->kids[i], b->kids[i]); c != 0) return c;
  return std::strong_ordering::equal;
}

bool term_equal(const Term& a, const Term& b) {
  if (a == b) return true;
  if (a->hash != b->hash || a->size != b->size) return false;
  return term_compare(a, b) == 0;
}

// ---- printing ----

namespace {

void print(const Term& t, std::string& out) {
  auto kids = [&](const char* head) {
    out += '(';
    out += head;
    for (const auto& k : t->kids) {
      out += ' ';
      print(k, out);
    }
    out += ')';
  };
  switch (t->kind) {
    case Kind::Lit:
      out += to_string(t->lit);
      return;
    case Kind::Field:
      out += "(field ";
      print(t->kids[0], out);
      out += ' ' + t->name + ')';
      return;
    case Kind::Static:
      out += "(static " + t->owner + ' ' + t->name + ')';
      return;
    case Kind::Stack:
      out += 's' + std::to_string(t->index);
      return;
    case Kind::Local:
      out += 'l' + std::to_string(t->index);
      return;
    case Kind::Ghost:
      out += "(ghost " + t->name + ')';
      return;
    case Kind::Fresh:
      out += "(var " + std::to_string(t->index) + ')';
      return;
    case Kind::Bin:
      kids(t->op == BinOp::Add ? "+" : t->op == BinOp::Sub ? "-" : "*");
      return;
    case Kind::Cond:
      kids("cond");
      return;
    case Kind::Pair:
      kids("pair");
      return;
    case Kind::True:
      out += "tt";
      return;
    case Kind::False:
      out += "ff";
      return;
    case Kind::Eq:
      kids("=");
      return;
    case Kind::Lt:
      kids("lt");
      return;
    case Kind::Not:
      kids("not");
      return;
    case Kind::And:
      kids("and");
      return;
    case Kind::Or:
      kids("or");
      return;
    case Kind::Implies:
      kids("implies");
      return;
    case Kind::Is:
      out += "(is ";
      print(t->kids[0], out);
      out += ' ' + t->name + ')';
      return;
  }
}

}  // namespace

std::string to_string(const Term& t) {
  std::string out;
  print(t, out);
  return out;
}

// ---- parsing ----

namespace {

using detail::TokenStream;
using detail::TokKind;

class Parser {
 public:
  explicit Parser(std::string_view text) : ts_(detail::tokenize(text, {0, false, true})) {}

  Term formula() {
    if (ts_.accept("tt")) return tt();
    if (ts_.accept("ff")) return ff();
    if (!ts_.is("(")) ts_.error("expected assertion");
    ts_.next();
    const auto& head = ts_.next();
    Term r;
    if (head.text == "and" || head.text == "or") {
      std::vector<Term> parts{formula(), formula()};
      while (!ts_.is(")")) parts.push_back(formula());
      r = parts.back();
      for (std::size_t i = parts.size() - 1; i-- > 0;)
        r = head.text == "and" ? and_(parts[i], r) : or_(parts[i], r);
    } else if (head.text == "not") {
      r = not_(formula());
    } else if (head.text == "implies") {
      auto a = formula();
      r = implies(a, formula());
    } else if (head.text == "=") {
      auto a = expr();
      r = eq(a, expr());
    } else if (head.text == "lt") {
      auto a = expr();
      r = lt(a, expr());
    } else if (head.text == "is") {
      auto e = expr();
      r = is(e, ts_.expect(TokKind::Ident, "class name").text);
    } else {
      throw ParseError("unknown assertion form '" + head.text + "'", head.line, head.column);
    }
    ts_.expect(")");
    return r;
  }

  Term expr() {
    const auto& t = ts_.peek();
    if (t.kind == TokKind::Int || t.kind == TokKind::String) {
      ts_.next();
      try {
        return lit(parse_value(t.text));
      } catch (const Error& e) {
        throw ParseError(e.what(), t.line, t.column);
      }
    }
    if (t.kind == TokKind::Ident) {
      ts_.next();
      if (t.text == "null") return lit(Null{});
      if (t.text == "bot") return bot_lit();
      if ((t.text[0] == 's' || t.text[0] == 'l') && t.text.size() > 1 &&
          t.text.find_first_not_of("0123456789", 1) == std::string::npos) {
        auto i = std::stoll(t.text.substr(1));
        return t.text[0] == 's' ? stack(i) : local(i);
      }
      throw ParseError("unknown expression '" + t.text + "'", t.line, t.column);
    }
    ts_.expect("(");
    const auto& head = ts_.next();
    Term r;
    if (head.text == "static") {
      auto c = ts_.expect(TokKind::Ident, "class name").text;
      r = static_ref(c, ts_.expect(TokKind::Ident, "field name").text);
    } else if (head.text == "field") {
      auto e = expr();
      r = field(e, ts_.expect(TokKind::Ident, "field name").text);
    } else if (head.text == "ghost") {
      r = ghost(ts_.expect(TokKind::Ident, "ghost name").text);
    } else if (head.text == "var") {
      const auto& n = ts_.expect(TokKind::Int, "variable number");
      r = fresh(std::stoll(n.text));
    } else if (head.text == "+" || head.text == "-" || head.text == "*") {
      auto a = expr();
      auto b = expr();
      r = bin(head.text == "+" ? BinOp::Add : head.text == "-" ? BinOp::Sub : BinOp::Mul, a, b);
    } else if (head.text == "cond") {
      auto g = formula();
      auto a = expr();
      r = cond(g, a, expr());
    } else if (head.text == "pair") {
      auto a = expr();
      r = pair(a, expr());
    } else {
      throw ParseError("unknown expression form '" + head.text + "'", head.line, head.column);
    }
    ts_.expect(")");
    return r;
  }

  void finish() {
    if (!ts_.at_end()) ts_.error("trailing input");
  }

 private:
  TokenStream ts_;
};

}  // namespace

Term parse_assertion(std::string_view text) {
  Parser p(text);
  auto t = p.formula();
  p.finish();
  return t;
}

Term parse_expression(std::string_view text) {
  Parser p(text);
  auto t = p.expr();
  p.finish();
  return t;
}

// ---- structural transforms ----

namespace {

template <class Leaf>
Term rewrite_dag(const Term& root, Leaf&& leaf) {
  std::unordered_map<const Node*, Term> memo;
  std::function<Term(const Term&)> go = [&](const Term& t) -> Term {
    if (auto it = memo.find(t.get()); it != memo.end()) return it->second;
    Term r;
    if (auto replaced = leaf(t)) {
      r = *replaced;
    } else if (t->kids.empty()) {
      r = t;
    } else {
      std::vector<Term> kids;
      kids.reserve(t->kids.size());
      bool changed = false;
      for (const auto& k : t->kids) {
        kids.push_back(go(k));
        changed |= kids.back() != k;
      }
      r = changed ? with_kids(*t, std::move(kids)) : t;
    }
    memo.emplace(t.get(), r);
    return r;
  };
  return go(root);
}

}  // namespace

Term subst(const Term& a, const std::vector<std::pair<Term, Term>>& map) {
  for (const auto& [target, _] : map)
    if (!is_atom(target)) throw Error("subst target is not atomic: " + to_string(target));
  if (map.empty()) return a;
  return rewrite_dag(a, [&](const Term& t) -> std::optional<Term> {
    if (!is_atom(t)) return std::nullopt;
    for (const auto& [target, repl] : map)
      if (term_equal(t, target)) return repl;
    return t;
  });
}

Term subst(const Term& a, const Term& target, const Term& replacement) {
  return subst(a, {{target, replacement}});
}

Term shift_k(const Term& a, std::int64_t k) {
  if (k == 0) return a;
  return rewrite_dag(a, [&](const Term& t) -> std::optional<Term> {
    if (t->kind != Kind::Stack) return std::nullopt;
    if (t->index + k < 0) throw Error("unshift of an assertion mentioning s" + std::to_string(t->index));
    return stack(t->index + k);
  });
}

void visit(const Term& a, const std::function<void(const Node&)>& f) {
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> work{a.get()};
  while (!work.empty()) {
    const Node* n = work.back();
    work.pop_back();
    if (!seen.insert(n).second) continue;
    f(*n);
    for (const auto& k : n->kids) work.push_back(k.get());
  }
}

bool mentions(const Term& a, const std::function<bool(const Node&)>& pred) {
  bool found = false;
  visit(a, [&](const Node& n) { found = found || pred(n); });
  return found;
}

bool mentions_stack(const Term& a) {
  return mentions(a, [](const Node& n) { return n.kind == Kind::Stack; });
}
bool mentions_ghost(const Term& a) {
  return mentions(a, [](const Node& n) { return n.kind == Kind::Ghost; });
}
bool mentions_stack_index(const Term& a, std::int64_t i) {
  return mentions(a, [i](const Node& n) { return n.kind == Kind::Stack && n.index == i; });
}

std::int64_t max_fresh(const Term& a) {
  std::int64_t m = -1;
  visit(a, [&](const Node& n) {
    if (n.kind == Kind::Fresh) m = std::max(m, n.index);
  });
  return m;
}

// ---- evaluation ----

std::int64_t wrap(BinOp op, std::int64_t a, std::int64_t b) {
  auto ua = static_cast<std::uint64_t>(a), ub = static_cast<std::uint64_t>(b);
  switch (op) {
    case BinOp::Add:
      return static_cast<std::int64_t>(ua + ub);
    case BinOp::Sub:
      return static_cast<std::int64_t>(ua - ub);
    case BinOp::Mul:
      return static_cast<std::int64_t>(ua * ub);
  }
  return 0;
}

Value eval_expr(const Term& e, const StateView& s) {
  switch (e->kind) {
    case Kind::Lit:
      return e->lit;
    case Kind::Field: {
      Value obj = eval_expr(e->kids[0], s);
      if (!is_loc(obj)) return bottom();
      return s.field(std::get<Loc>(obj), e->name);
    }
    case Kind::Static:
      return s.static_field(e->owner, e->name);
    case Kind::Stack:
      return s.stack(e->index);
    case Kind::Local:
      return s.local(e->index);
    case Kind::Ghost:
      return s.ghost(e->name);
    case Kind::Fresh:
      return s.fresh(e->index);
    case Kind::Bin: {
      Value a = eval_expr(e->kids[0], s), b = eval_expr(e->kids[1], s);
      if (!is_int(a) || !is_int(b)) return bottom();
      return make_int(wrap(e->op, std::get<std::int64_t>(a), std::get<std::int64_t>(b)));
    }
    case Kind::Cond:
      return eval_assert(e->kids[0], s) ? eval_expr(e->kids[1], s) : eval_expr(e->kids[2], s);
    case Kind::Pair: {
      auto p = std::make_shared<PairValue>();
      p->first = eval_expr(e->kids[0], s);
      p->second = eval_expr(e->kids[1], s);
      return Value{std::shared_ptr<const PairValue>(std::move(p))};
    }
    default:
      throw Error("eval_expr on a formula: " + to_string(e));
  }
}

bool eval_assert(const Term& a, const StateView& s) {
  switch (a->kind) {
    case Kind::True:
      return true;
    case Kind::False:
      return false;
    case Kind::Eq:
      return value_equal(eval_expr(a->kids[0], s), eval_expr(a->kids[1], s));
    case Kind::Lt: {
      Value x = eval_expr(a->kids[0], s), y = eval_expr(a->kids[1], s);
      return is_int(x) && is_int(y) && std::get<std::int64_t>(x) < std::get<std::int64_t>(y);
    }
    case Kind::Not:
      return !eval_assert(a->kids[0], s);
    case Kind::And:
      return eval_assert(a->kids[0], s) && eval_assert(a->kids[1], s);
    case Kind::Or:
      return eval_assert(a->kids[0], s) || eval_assert(a->kids[1], s);
    case Kind::Implies:
      return !eval_assert(a->kids[0], s) || eval_assert(a->kids[1], s);
    case Kind::Is: {
      Value v = eval_expr(a->kids[0], s);
      return is_loc(v) && s.instance_of(std::get<Loc>(v), a->name);
    }
    default:
      throw Error("eval_assert on an expression: " + to_string(a));
  }
}

}  // namespace irm

#include "irmpcc/rewrite.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <unordered_map>

namespace irm {

namespace {

std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) { return a + b < a ? UINT64_MAX : a + b; }

bool is_atomic_formula(Kind k) { return k == Kind::Eq || k == Kind::Lt || k == Kind::Is; }

bool elim_atom(const Term& t) {
  switch (t->kind) {
    case Kind::Stack:
    case Kind::Local:
    case Kind::Static:
    case Kind::Ghost:
    case Kind::Fresh:
      return true;
    default:
      return false;
  }
}

bool eliminable(const Term& f) {
  if (f->kind != Kind::Eq) return false;
  const Term& a = f->kids[0];
  const Term& b = f->kids[1];
  if (term_equal(a, b)) return false;
  return (elim_atom(a) && (elim_atom(b) || b->kind == Kind::Lit)) || (elim_atom(b) && a->kind == Kind::Lit);
}

Term make_eq(Term a, Term b) {
  if (term_compare(b, a) < 0) std::swap(a, b);
  return eq(std::move(a), std::move(b));
}

Term negate(const Term& g) {
  if (g->kind == Kind::True) return ff();
  if (g->kind == Kind::False) return tt();
  if (g->kind == Kind::Not) return g->kids[0];
  return not_(g);
}

bool is_lit_int(const Term& t) { return t->kind == Kind::Lit && is_int(t->lit); }

// First conditional reachable through expression constructors.
const Term* find_cond(const Term& e) {
  if (e->kind == Kind::Cond) return &e;
  if (e->kind == Kind::Bin || e->kind == Kind::Field || e->kind == Kind::Pair) {
    for (const auto& k : e->kids)
      if (const Term* c = find_cond(k)) return c;
  }
  return nullptr;
}

Term replace(const Term& t, const Term& target, const Term& repl,
             std::unordered_map<const Node*, Term>& memo) {
  if (term_equal(t, target)) return repl;
  if (t->kids.empty()) return t;
  auto it = memo.find(t.get());
  if (it != memo.end()) return it->second;
  std::vector<Term> kids;
  bool changed = false;
  for (const auto& k : t->kids) {
    kids.push_back(replace(k, target, repl, memo));
    changed = changed || kids.back() != k;
  }
  Term r = changed ? with_kids(*t, std::move(kids)) : t;
  memo.emplace(t.get(), r);
  return r;
}

Term replace(const Term& t, const Term& target, const Term& repl) {
  std::unordered_map<const Node*, Term> memo;
  return replace(t, target, repl, memo);
}

struct MemoKey {
  std::size_t env;
  const Node* node;
  bool operator==(const MemoKey& o) const { return env == o.env && node == o.node; }
};
struct MemoKeyHash {
  std::size_t operator()(const MemoKey& k) const {
    return std::hash<const void*>()(k.node) * 31 + k.env;
  }
};

/// Contextual simplifier. Assumptions live in a scoped substitution from
/// terms to their known values; results are memoized per scope.
class Simplifier {
 public:
  void assume(const Term& g) {
    switch (g->kind) {
      case Kind::True:
        return;
      case Kind::And:
        assume(g->kids[0]);
        assume(g->kids[1]);
        return;
      case Kind::Not: {
        const Term& h = g->kids[0];
        bind(h, ff());
        if (h->kind == Kind::Or) {
          assume(negate(h->kids[0]));
          assume(negate(h->kids[1]));
        } else if (h->kind == Kind::Implies) {
          assume(h->kids[0]);
          assume(negate(h->kids[1]));
        }
        return;
      }
      case Kind::Eq: {
        bind(g, tt());
        const Term& a = g->kids[0];
        const Term& b = g->kids[1];
        if (b->kind == Kind::Lit && a->kind != Kind::Lit) bind_value(a, b);
        else if (a->kind == Kind::Lit && b->kind != Kind::Lit) bind_value(b, a);
        return;
      }
      default:
        bind(g, tt());
    }
  }

  bool inconsistent() const { return inconsistent_; }

  Term simp(const Term& t) {
    if (auto hit = lookup(t)) return *hit;
    MemoKey key{env_id_, t.get()};
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second.second;
    Term r = compute(t);
    if (auto hit = lookup(r)) r = *hit;
    memo_.emplace(key, std::make_pair(t, r));
    return r;
  }

  void push() {
    scopes_.push_back({undo_.size(), env_id_});
    env_id_ = ++next_id_;
  }
  void pop() {
    auto [mark, id] = scopes_.back();
    scopes_.pop_back();
    while (undo_.size() > mark) {
      auto& [k, old] = undo_.back();
      if (old) env_[k] = *old;
      else env_.erase(k);
      undo_.pop_back();
    }
    env_id_ = id;
  }

 private:
  void bind(const Term& k, const Term& v) {
    auto it = env_.find(k);
    undo_.emplace_back(k, it == env_.end() ? std::nullopt : std::optional<Term>(it->second));
    env_[k] = v;
    env_id_ = ++next_id_;
  }

  // Binds e to a literal and re-evaluates the formulas already assumed that
  // mention e; one that flips marks the context inconsistent.
  void bind_value(const Term& e, const Term& v) {
    std::vector<std::pair<Term, bool>> facts;
    for (const auto& [k, val] : env_)
      if (is_formula_kind(k->kind) && (val->kind == Kind::True || val->kind == Kind::False) && has_subterm(k, e))
        facts.emplace_back(k, val->kind == Kind::True);
    bind(e, v);
    for (const auto& [k, truth] : facts) {
      Term r = simp(replace(k, e, v));
      if ((r->kind == Kind::True && !truth) || (r->kind == Kind::False && truth)) inconsistent_ = true;
    }
  }

  static bool has_subterm(const Term& t, const Term& e) {
    if (t->size < e->size) return false;
    if (term_equal(t, e)) return true;
    for (const auto& k : t->kids)
      if (has_subterm(k, e)) return true;
    return false;
  }

  std::optional<Term> lookup(const Term& t) const {
    if (env_.empty()) return std::nullopt;
    auto it = env_.find(t);
    if (it == env_.end()) return std::nullopt;
    return it->second;
  }

  // nullopt when the assumption contradicts the current context.
  std::optional<Term> under(const Term& assumption, const Term& t) {
    push();
    bool saved = inconsistent_;
    inconsistent_ = false;
    assume(assumption);
    std::optional<Term> r;
    if (!inconsistent_) r = simp(t);
    inconsistent_ = saved;
    pop();
    return r;
  }

  Term rebuild(const Term& t, std::vector<Term> kids) {
    bool same = true;
    for (std::size_t i = 0; i < kids.size(); ++i) same = same && kids[i] == t->kids[i];
    return same ? t : with_kids(*t, std::move(kids));
  }

  Term lift(const Term& p) {
    for (const auto& k : p->kids) {
      if (const Term* c = find_cond(k)) {
        Term cnd = *c;
        Term g = cnd->kids[0];
        Term yes = replace(p, cnd, cnd->kids[1]);
        Term no = replace(p, cnd, cnd->kids[2]);
        return simp(and_(implies(g, yes), implies(negate(g), no)));
      }
    }
    return p;
  }

  Term compute(const Term& t) {
    switch (t->kind) {
      case Kind::Lit:
      case Kind::Stack:
      case Kind::Local:
      case Kind::Static:
      case Kind::Ghost:
      case Kind::Fresh:
      case Kind::True:
      case Kind::False:
        return t;
      case Kind::Field: {
        Term o = simp(t->kids[0]);
        if (o->kind == Kind::Lit && !is_loc(o->lit)) return bot_lit();
        return rebuild(t, {o});
      }
      case Kind::Bin: {
        Term a = simp(t->kids[0]), b = simp(t->kids[1]);
        if ((a->kind == Kind::Lit && !is_int(a->lit)) || (b->kind == Kind::Lit && !is_int(b->lit))) return bot_lit();
        if (is_lit_int(a) && is_lit_int(b))
          return int_lit(wrap(t->op, std::get<std::int64_t>(a->lit), std::get<std::int64_t>(b->lit)));
        return rebuild(t, {a, b});
      }
      case Kind::Pair:
        return rebuild(t, {simp(t->kids[0]), simp(t->kids[1])});
      case Kind::Cond: {
        Term g = simp(t->kids[0]);
        if (g->kind == Kind::True) return simp(t->kids[1]);
        if (g->kind == Kind::False) return simp(t->kids[2]);
        auto ya = under(g, t->kids[1]);
        if (!ya) return simp(t->kids[2]);
        auto nb = under(negate(g), t->kids[2]);
        if (!nb) return *ya;
        Term a = *ya, b = *nb;
        if (term_equal(a, b)) return a;
        return rebuild(t, {g, a, b});
      }
      case Kind::Eq: {
        Term a = simp(t->kids[0]), b = simp(t->kids[1]);
        if (term_equal(a, b)) return tt();
        if (a->kind == Kind::Lit && b->kind == Kind::Lit) return value_equal(a->lit, b->lit) ? tt() : ff();
        Term p = make_eq(a, b);
        if (auto hit = lookup(p)) return *hit;
        return lift(p);
      }
      case Kind::Lt: {
        Term a = simp(t->kids[0]), b = simp(t->kids[1]);
        if (term_equal(a, b)) return ff();
        if ((a->kind == Kind::Lit && !is_int(a->lit)) || (b->kind == Kind::Lit && !is_int(b->lit))) return ff();
        if (is_lit_int(a) && is_lit_int(b))
          return std::get<std::int64_t>(a->lit) < std::get<std::int64_t>(b->lit) ? tt() : ff();
        Term p = rebuild(t, {a, b});
        if (auto hit = lookup(p)) return *hit;
        return lift(p);
      }
      case Kind::Is: {
        Term e = simp(t->kids[0]);
        if (e->kind == Kind::Lit && !is_loc(e->lit)) return ff();
        Term p = rebuild(t, {e});
        if (auto hit = lookup(p)) return *hit;
        return lift(p);
      }
      case Kind::Not: {
        Term a = simp(t->kids[0]);
        Term r = negate(a);
        if (auto hit = lookup(r)) return *hit;
        return r;
      }
      case Kind::And: {
        Term a = simp(t->kids[0]);
        if (a->kind == Kind::False) return ff();
        auto ub = under(a, t->kids[1]);
        if (!ub) return ff();
        Term b = *ub;
        if (a->kind == Kind::True) return b;
        if (b->kind == Kind::True) return a;
        if (b->kind == Kind::False) return ff();
        if (term_equal(a, b)) return a;
        // IF-collapse: (g => p) and (not g => p) is p.
        if (a->kind == Kind::Implies && b->kind == Kind::Implies && term_equal(a->kids[1], b->kids[1]) &&
            (term_equal(b->kids[0], negate(a->kids[0])) || term_equal(a->kids[0], negate(b->kids[0])))) {
          return a->kids[1];
        }
        return rebuild(t, {a, b});
      }
      case Kind::Or: {
        Term a = simp(t->kids[0]);
        if (a->kind == Kind::True) return tt();
        auto ub = under(negate(a), t->kids[1]);
        if (!ub) return tt();
        Term b = *ub;
        if (a->kind == Kind::False) return b;
        if (b->kind == Kind::False) return a;
        if (b->kind == Kind::True) return tt();
        if (term_equal(a, b)) return a;
        return rebuild(t, {a, b});
      }
      case Kind::Implies: {
        Term g = simp(t->kids[0]);
        if (g->kind == Kind::False) return tt();
        auto up = under(g, t->kids[1]);
        if (!up) return tt();
        Term p = *up;
        if (g->kind == Kind::True) return p;
        if (p->kind == Kind::True) return tt();
        if (p->kind == Kind::False) return negate(g);
        return rebuild(t, {g, p});
      }
    }
    return t;
  }

  std::unordered_map<Term, Term, TermHash, TermEq> env_;
  std::vector<std::pair<Term, std::optional<Term>>> undo_;
  std::vector<std::pair<std::size_t, std::size_t>> scopes_;
  std::size_t env_id_ = 0;
  std::size_t next_id_ = 0;
  std::unordered_map<MemoKey, std::pair<Term, Term>, MemoKeyHash> memo_;
  bool inconsistent_ = false;
};

// ---- measure ----

using WeightKey = std::pair<std::uint64_t, std::uint64_t>;
using WeightMap = std::map<WeightKey, std::uint64_t>;

std::uint64_t atom_count(const Term& t, std::unordered_map<const Node*, std::uint64_t>& memo) {
  switch (t->kind) {
    case Kind::Stack:
    case Kind::Local:
    case Kind::Static:
    case Kind::Ghost:
    case Kind::Fresh:
      return 1;
    case Kind::Lit:
    case Kind::True:
    case Kind::False:
      return 0;
    default:
      break;
  }
  auto it = memo.find(t.get());
  if (it != memo.end()) return it->second;
  std::uint64_t n = 0;
  for (const auto& k : t->kids) n = sat_add(n, atom_count(k, memo));
  memo.emplace(t.get(), n);
  return n;
}

struct MeasureBuilder {
  std::unordered_map<const Node*, std::uint64_t> atoms;
  std::unordered_map<const Node*, WeightMap> memo;

  const WeightMap& of(const Term& t) {
    auto it = memo.find(t.get());
    if (it != memo.end()) return it->second;
    WeightMap m;
    if (is_atomic_formula(t->kind)) {
      m[{t->size, atom_count(t, atoms)}] = 1;
    } else {
      m[{0, 0}] = 1;
      for (const auto& k : t->kids) {
        for (const auto& [w, c] : of(k)) m[w] = sat_add(m[w], c);
      }
    }
    return memo.emplace(t.get(), std::move(m)).first->second;
  }
};

}  // namespace

Term canonical(const Term& t) {
  std::unordered_map<const Node*, Term> memo;
  std::function<Term(const Term&)> go = [&](const Term& x) -> Term {
    if (x->kids.empty()) return x;
    auto it = memo.find(x.get());
    if (it != memo.end()) return it->second;
    std::vector<Term> kids;
    bool changed = false;
    for (const auto& k : x->kids) {
      kids.push_back(go(k));
      changed = changed || kids.back() != k;
    }
    Term r;
    if (x->kind == Kind::Eq && term_compare(kids[1], kids[0]) < 0) r = eq(kids[1], kids[0]);
    else r = changed ? with_kids(*x, std::move(kids)) : x;
    memo.emplace(x.get(), r);
    return r;
  };
  return go(t);
}

Term simplify(const Term& t, const std::vector<Term>& assumptions) {
  Simplifier s;
  for (const auto& a : assumptions) s.assume(s.simp(canonical(a)));
  return s.simp(canonical(t));
}

RewriteMeasure measure_of(const std::vector<Term>& facts, const Term& goal) {
  RewriteMeasure r;
  MeasureBuilder b;
  WeightMap total;
  auto add = [&](const Term& t) {
    for (const auto& [w, c] : b.of(t)) total[w] = sat_add(total[w], c);
  };
  for (const auto& f : facts) {
    if (eliminable(f)) ++r.eliminable;
    add(f);
  }
  add(goal);
  for (auto it = total.rbegin(); it != total.rend(); ++it) {
    r.weights.push_back({it->first.first, it->first.second, it->second});
  }
  return r;
}

bool measure_less(const RewriteMeasure& a, const RewriteMeasure& b) {
  std::size_t n = std::min(a.weights.size(), b.weights.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = a.weights[i];
    const auto& y = b.weights[i];
    if (x.size != y.size || x.atoms != y.atoms) {
      return std::make_pair(x.size, x.atoms) < std::make_pair(y.size, y.atoms);
    }
    if (x.count != y.count) return x.count < y.count;
  }
  return a.weights.size() < b.weights.size();
}

DischargeResult rewrite_discharge(const Term& ante, const Term& succ, const RewriteOptions& opts) {
  DischargeResult res;
  if (term_equal(ante, succ)) {
    ++res.stats.applications;
    res.discharged = true;
    res.residual = tt();
    return res;
  }
  std::vector<Term> facts;
  for (const auto& f : conjuncts(canonical(ante))) facts.push_back(f);
  Term goal = canonical(succ);
  std::int64_t next_fresh = std::max(max_fresh(ante), max_fresh(succ)) + 1;

  RewriteMeasure current;
  if (opts.track_measure) current = measure_of(facts, goal);
  auto step = [&](const std::vector<Term>& nf, const Term& ng) {
    ++res.stats.applications;
    if (!opts.track_measure) return;
    RewriteMeasure next = measure_of(nf, ng);
    if (!measure_less(next, current)) ++res.stats.measure_violations;
    current = std::move(next);
  };

  for (std::size_t round = 0; round < opts.max_sweeps; ++round) {
    // Equality elimination.
    for (;;) {
      auto it = std::find_if(facts.begin(), facts.end(), eliminable);
      if (it == facts.end()) break;
      Term a = (*it)->kids[0], b = (*it)->kids[1];
      std::vector<std::pair<Term, Term>> map;
      if (a->kind == Kind::Lit) map = {{b, a}};
      else if (b->kind == Kind::Lit) map = {{a, b}};
      else {
        Term z = fresh(next_fresh++);
        map = {{a, z}, {b, z}};
      }
      facts.erase(it);
      for (auto& f : facts) f = canonical(subst(f, map));
      goal = canonical(subst(goal, map));
      ++res.stats.eliminations;
      step(facts, goal);
    }

    ++res.stats.sweeps;
    Simplifier s;
    std::vector<Term> nf;
    bool contradiction = false;
    for (const auto& f : facts) {
      Term g = s.simp(f);
      if (g->kind == Kind::False) contradiction = true;
      if (g->kind == Kind::True) continue;
      for (const auto& c : conjuncts(g)) {
        nf.push_back(c);
        s.assume(c);
      }
    }
    if (s.inconsistent()) contradiction = true;
    if (contradiction) {
      step({ff()}, tt());
      res.discharged = true;
      res.residual = tt();
      return res;
    }
    Term ng = s.simp(goal);
    bool unchanged = term_equal(ng, goal) && nf.size() == facts.size() &&
                     std::equal(nf.begin(), nf.end(), facts.begin(), [](const Term& x, const Term& y) { return term_equal(x, y); });
    if (unchanged) break;
    step(nf, ng);
    facts = std::move(nf);
    goal = std::move(ng);
    if (goal->kind == Kind::True) break;
  }
  res.residual = goal;
  res.discharged = goal->kind == Kind::True;
  return res;
}

}  // namespace irm

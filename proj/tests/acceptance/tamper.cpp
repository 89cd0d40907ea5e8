#include <algorithm>
#include <array>
#include <functional>
#include <set>
#include <sstream>

#include "criteria.hpp"
#include "irmpcc/checker.hpp"
#include "irmpcc/error.hpp"
#include "irmpcc/inliner.hpp"
#include "irmpcc/proofgen.hpp"
#include "irmpcc/rewrite.hpp"
#include "irmpcc/wp.hpp"
#include "map_state.hpp"
#include "mutate.hpp"

namespace irm::acceptance {

namespace {

constexpr std::size_t kPerClass = 100;
constexpr std::size_t kPerScenario = 2;  // per class
constexpr std::size_t kMaxScenarios = 2000;

enum MutationClass { GuardBlock, StateUpdate, RoguePut, Weakened, Stricter, kClasses };
const char* const kClassNames[] = {"guard-block", "state-update", "rogue-putstatic", "weakened", "stricter-contract"};

struct Subject {
  Program program;
  ProofBundle proof;
  Contract contract;

  MethodDef& method(const std::string& q) { return testing::method_of(program, ref(q)); }
  std::vector<Term>& annotations(const std::string& q) {
    for (auto& m : proof.methods)
      if (m.ref.qualified() == q) return m.annotations;
    throw Error("no proof for " + q);
  }
  static MethodRef ref(const std::string& q) {
    auto dot = q.rfind('.');
    return {q.substr(0, dot), q.substr(dot + 1)};
  }
  void erase(const std::string& q, std::size_t lo, std::size_t hi) {  // [lo, hi)
    for (std::size_t l = hi; l-- > lo;) {
      testing::delete_instruction(method(q), l);
      auto& a = annotations(q);
      a.erase(a.begin() + static_cast<std::ptrdiff_t>(l));
    }
  }
  void insert(const std::string& q, std::size_t at, const std::vector<Instruction>& code, const Term& ann) {
    testing::insert_instructions(method(q), at, code);
    auto& a = annotations(q);
    a.insert(a.begin() + static_cast<std::ptrdiff_t>(at), code.size(), ann);
  }
};

bool is_state_put(const Instruction& ins) {
  return ins.op == Opcode::PutStatic && ins.owner == kStateClass;
}

// Net stack effect of the straight-line opcodes guard and update code uses.
std::optional<int> push_effect(const Instruction& ins) {
  switch (ins.op) {
    case Opcode::IConst:
    case Opcode::Ldc:
    case Opcode::ALoad:
    case Opcode::GetStatic:
    case Opcode::Dup:
      return 1;
    case Opcode::IAdd:
    case Opcode::ISub:
    case Opcode::IMul:
    case Opcode::PutStatic:
    case Opcode::AStore:
      return -1;
    default:
      return std::nullopt;
  }
}

bool is_target(const MethodDef& m, std::size_t l) {
  for (const auto& ins : m.instructions)
    if (ins.is_branch() && static_cast<std::size_t>(ins.number) == l) return true;
  for (const auto& h : m.handlers)
    if (h.target == l) return true;
  return false;
}

// Evaluates `a` over random small states built from the atoms it mentions;
// true when one of them falsifies it.
bool falsifiable(const Term& a, std::mt19937_64& rng) {
  testing::MapState base;
  std::vector<Value> domain{make_int(0), make_int(1), make_int(2), make_int(-1), make_str(""), make_str("a"),
                            bottom()};
  std::uniform_int_distribution<std::size_t> pick(0, domain.size() - 1);
  for (int attempt = 0; attempt < 400; ++attempt) {
    testing::MapState s;
    visit(a, [&](const Node& n) {
      switch (n.kind) {
        case Kind::Stack:
          if (s.stack_.size() <= static_cast<std::size_t>(n.index)) s.stack_.resize(n.index + 1, bottom());
          s.stack_[n.index] = domain[pick(rng)];
          break;
        case Kind::Local: s.locals[n.index] = domain[pick(rng)]; break;
        case Kind::Static: s.statics[{n.owner, n.name}] = domain[pick(rng)]; break;
        case Kind::Ghost: s.ghosts[n.name] = domain[pick(rng)]; break;
        case Kind::Fresh: s.vars[n.index] = domain[pick(rng)]; break;
        default: break;
      }
    });
    for (auto& v : s.stack_)
      if (std::holds_alternative<Bottom>(v)) v = domain[pick(rng)];
    if (!eval_assert(a, s)) return true;
  }
  return false;
}

CExprPtr state_test(const Contract& k, std::size_t i, CKind op) {
  auto var = std::make_shared<CExpr>();
  var->kind = CKind::StateVar;
  var->name = k.state[i].name;
  var->index = i;
  var->boolean = k.state[i].type == StateType::Boolean;
  auto init = std::make_shared<CExpr>();
  init->kind = CKind::Lit;
  init->lit = k.state[i].initial;
  init->boolean = var->boolean;
  auto t = std::make_shared<CExpr>();
  t->kind = op;
  t->boolean = true;
  t->kids = {var, init};
  return t;
}

CExprPtr conjoin(const CExprPtr& g, const CExprPtr& extra) {
  auto both = std::make_shared<CExpr>();
  both->kind = CKind::And;
  both->boolean = true;
  both->kids = {g, extra};
  return both;
}

std::vector<Value> small_domain(std::string_view type) {
  if (type == "string" || type == "String") return {make_str(""), make_str("a"), make_str("b")};
  if (type == "boolean") return {make_int(0), make_int(1)};
  return {make_int(-1), make_int(0), make_int(1), make_int(2), make_int(3)};
}

void product(const std::vector<std::vector<Value>>& doms, std::vector<Value>& cur,
             const std::function<bool(const std::vector<Value>&)>& f, bool& found) {
  if (found) return;
  if (cur.size() == doms.size()) {
    found = f(cur);
    return;
  }
  for (const auto& v : doms[cur.size()]) {
    cur.push_back(v);
    product(doms, cur, f, found);
    cur.pop_back();
    if (found) return;
  }
}

// A state and call the original automaton allows but `stricter` rejects.
bool strictly_stricter(const Contract& orig, const Contract& stricter, const MethodRef& m, std::size_t arity,
                       const std::vector<ClauseParam>& params) {
  std::vector<std::vector<Value>> doms;
  for (const auto& v : orig.state)
    doms.push_back(small_domain(v.type == StateType::String ? "String" : v.type == StateType::Boolean ? "boolean" : "int"));
  for (std::size_t i = 0; i < arity; ++i) doms.push_back(small_domain(i < params.size() ? params[i].type : "int"));
  std::vector<Value> cur;
  bool found = false;
  product(doms, cur, [&](const std::vector<Value>& vals) {
    MonitorState q;
    q.vars.assign(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(orig.state.size()));
    SecurityAction a{ActionKind::Pre, m, {vals.begin() + static_cast<std::ptrdiff_t>(orig.state.size()), vals.end()}, std::nullopt};
    return !delta(orig, q, a).violated && delta(stricter, q, a).violated;
  }, found);
  return found;
}

// Some state and call that the contract's BEFORE clause for `m` rejects.
bool can_violate(const Contract& k, const MethodRef& m, std::size_t arity) {
  const EventClause* c = k.find(Modifier::Before, m.owner, m.name);
  if (!c) return false;
  Contract none = k;
  none.clauses.clear();
  return strictly_stricter(none, k, m, arity, c->params);
}

struct Tally {
  std::array<std::size_t, kClasses> made{}, rejected{}, malformed{};
  std::size_t weakened_at_label = 0;
  std::string first_accepted;
};

class Tamperer {
 public:
  Tamperer(const testing::Scenario& s, std::size_t id, Tally& t, std::mt19937_64& rng)
      : s_(s), id_(id), t_(t), rng_(rng), ip_(inline_program(s.program, s.contract)),
        proof_(generate_proof(ip_, s.contract)), layer_(embed_ghost(ip_.program, s.contract)) {}

  void all() {
    guard_blocks();
    state_updates();
    rogue_puts();
    weakened();
    stricter();
  }

 private:
  Subject fresh() const { return {ip_.program, proof_, s_.contract}; }
  bool room(MutationClass c, std::size_t done) const { return done < kPerScenario && t_.made[c] < kPerClass; }

  void verdict(MutationClass c, Subject& m, const std::string& what) {
    ++t_.made[c];
    try {
      CheckResult r = check_bundle(m.program, m.proof, m.contract);
      if (!r.valid) {
        ++t_.rejected[c];
        return;
      }
    } catch (const Error&) {
      ++t_.rejected[c];
      ++t_.malformed[c];
      return;
    }
    if (t_.first_accepted.empty())
      t_.first_accepted = std::string(kClassNames[c]) + " scenario " + std::to_string(id_) + " " + what;
  }

  // The VC succedent at label l of a mutant, as the checker computes it.
  Term succedent(const Subject& m, const MethodRef& ref, std::size_t l) const {
    const MethodProof* mp = m.proof.find(ref);
    ExtendedMethod em;
    em.ref = ref;
    em.def = &m.program.method(ref);
    em.annotations = mp->annotations;
    em.pre = mp->pre;
    em.post = mp->post;
    auto g = layer_.find(ref.qualified());
    em.ghosts = g == layer_.end() ? nullptr : &g->second;
    VcContext ctx{&m.program, &m.contract, monitor_invariant(m.contract), {}};
    return wp(em, l, ctx);
  }

  bool inside(const std::string& q, std::size_t l) const {
    auto it = ip_.inlined_labels.find(q);
    if (it == ip_.inlined_labels.end()) return false;
    for (const auto& [lo, hi] : it->second)
      if (lo <= l && l <= hi) return true;
    return false;
  }

  // The BEFORE cascade: from the first instruction after the argument
  // stores through the last exit before the call.
  void guard_blocks() {
    std::size_t done = 0;
    for (const auto& [q, sites] : ip_.call_sites) {
      const MethodDef& def = ip_.program.method(Subject::ref(q));
      for (const auto& site : sites) {
        if (!room(GuardBlock, done)) return;
        std::size_t g0 = site.begin;
        while (g0 < site.invoke && def.instructions[g0].op == Opcode::AStore) ++g0;
        std::optional<std::size_t> exit;
        for (std::size_t l = g0; l < site.invoke; ++l)
          if (def.instructions[l].op == Opcode::Exit) exit = l;
        if (!exit) continue;
        // Deleting a cascade whose guards always hold changes nothing.
        bool harmful = false;
        for (const auto& cls : relevant_dispatch(s_.contract, ip_.program, def.instructions[site.invoke]))
          harmful = harmful || can_violate(s_.contract, {cls, def.instructions[site.invoke].member}, site.arg_locals.size());
        if (!harmful) continue;
        Subject m = fresh();
        m.erase(q, g0, *exit + 1);
        verdict(GuardBlock, m, q + ":" + std::to_string(g0) + "-" + std::to_string(*exit));
        ++done;
      }
    }
  }

  // Deletes an inlined putstatic SS.x together with the code computing its
  // value, or retargets it to another field.
  void state_updates() {
    std::size_t done = 0;
    for (const auto& [q, ranges] : ip_.inlined_labels) {
      const MethodDef& def = ip_.program.method(Subject::ref(q));
      for (std::size_t l = 0; l < def.instructions.size(); ++l) {
        if (!room(StateUpdate, done)) return;
        if (!inside(q, l) || !is_state_put(def.instructions[l])) continue;
        if (done % 2 == 0) {
          int need = 1;
          std::size_t j = l;
          bool ok = true;
          while (need > 0 && ok) {
            if (j == 0) break;
            --j;
            auto e = push_effect(def.instructions[j]);
            ok = e.has_value() && (j == l - 1 || !is_target(def, j + 1));
            if (ok) need -= *e;
          }
          if (!ok || need != 0 || is_target(def, l)) continue;
          Subject m = fresh();
          m.erase(q, j, l + 1);
          verdict(StateUpdate, m, "delete " + q + ":" + std::to_string(l));
        } else {
          Subject m = fresh();
          Instruction& ins = m.method(q).instructions[l];
          std::string other;
          for (const auto& v : s_.contract.state)
            if (v.name != ins.member) other = v.name;
          if (other.empty()) ins = Instruction::with_ref(Opcode::PutStatic, "Main", "g");
          else ins.member = other;
          verdict(StateUpdate, m, "retarget " + q + ":" + std::to_string(l));
        }
        ++done;
      }
    }
  }

  void rogue_puts() {
    std::size_t done = 0;
    Term psi = monitor_invariant(s_.contract);
    for (const auto& mp : proof_.methods) {
      std::string q = mp.ref.qualified();
      const MethodDef& def = ip_.program.method(mp.ref);
      std::vector<std::size_t> outside;
      for (std::size_t l = 0; l < def.instructions.size(); ++l)
        if (!inside(q, l)) outside.push_back(l);
      std::shuffle(outside.begin(), outside.end(), rng_);
      for (std::size_t l : outside) {
        if (!room(RoguePut, done)) return;
        const auto& var = s_.contract.state[done % s_.contract.state.size()];
        std::vector<Instruction> code;
        if (done % 2 == 0) {
          code = {var.type == StateType::String ? Instruction::ldc(make_str("z")) : Instruction::with_number(Opcode::IConst, 1)};
        } else {
          code = {Instruction::with_ref(Opcode::GetStatic, std::string(kStateClass), var.name)};
          if (var.type != StateType::String) {
            code.push_back(Instruction::with_number(Opcode::IConst, 1));
            code.push_back(Instruction::make(Opcode::IAdd));
          }
        }
        code.push_back(Instruction::with_ref(Opcode::PutStatic, std::string(kStateClass), var.name));
        // A getstatic/putstatic of the same value changes nothing; skip those.
        if (code.size() == 2 && code[0].op == Opcode::GetStatic) continue;
        Subject m = fresh();
        m.insert(q, l, code, psi);
        verdict(RoguePut, m, q + ":" + std::to_string(l));
        ++done;
      }
    }
  }

  void weakened() {
    std::size_t done = 0;
    for (const auto& mp : proof_.methods) {
      std::string q = mp.ref.qualified();
      std::vector<std::size_t> cands;
      for (std::size_t l = 0; l < mp.annotations.size(); ++l)
        if (inside(q, l) && mp.annotations[l]->kind != Kind::True) cands.push_back(l);
      std::shuffle(cands.begin(), cands.end(), rng_);
      for (std::size_t l : cands) {
        if (!room(Weakened, done)) return;
        Subject m = fresh();
        m.annotations(q)[l] = tt();
        Term succ = succedent(m, mp.ref, l);
        if (!falsifiable(succ, rng_)) continue;
        if (!rewrite_discharge(tt(), succ).discharged) ++t_.weakened_at_label;
        verdict(Weakened, m, q + ":" + std::to_string(l));
        ++done;
      }
    }
  }

  // Conjoins a test of one state variable against its initial value to
  // every BEFORE guard of a called method, adding the clause when missing.
  // Only contracts that reject a call the original allows count.
  void stricter() {
    std::size_t done = 0;
    // A stricter rule for a method the program never calls changes nothing.
    std::set<std::pair<std::string, std::string>> called;
    for (const auto& c : s_.program.classes())
      for (const auto& m : c.methods)
        for (const auto& ins : m.instructions)
          if (ins.op == Opcode::InvokeStatic || ins.op == Opcode::InvokeVirtual) called.emplace(ins.owner, ins.member);
    for (const auto& c : s_.program.classes()) {
      if (!c.is_api) continue;
      for (const auto& api : c.methods) {
        if (!room(Stricter, done)) return;
        if (!called.count({c.name, api.name})) continue;
        std::vector<ClauseParam> params;
        for (std::size_t i = 0; i < api.arity; ++i) params.push_back({"int", "q" + std::to_string(i)});
        for (const auto& other : s_.contract.clauses)
          if (other.owner == c.name && other.method == api.name) params = other.params;
        for (std::size_t var = 0; var < s_.contract.state.size(); ++var) {
          bool made = false;
          for (CKind op : {CKind::Ne, CKind::Eq}) {
            Contract k = s_.contract;
            CExprPtr extra = state_test(k, var, op);
            EventClause* before = nullptr;
            for (auto& cl : k.clauses)
              if (cl.modifier == Modifier::Before && cl.owner == c.name && cl.method == api.name) before = &cl;
            if (before) {
              for (auto& cmd : before->commands) cmd.guard = conjoin(cmd.guard, extra);
            } else {
              EventClause cl;
              cl.modifier = Modifier::Before;
              cl.owner = c.name;
              cl.method = api.name;
              cl.params = params;
              cl.commands.push_back({extra, {}});
              k.clauses.push_back(std::move(cl));
            }
            k = parse_contract(print_contract(k));
            if (!strictly_stricter(s_.contract, k, {c.name, api.name}, api.arity, params)) continue;
            Subject m = fresh();
            m.contract = std::move(k);
            verdict(Stricter, m, c.name + "." + api.name);
            made = true;
            break;
          }
          if (made) {
            ++done;
            break;
          }
        }
      }
    }
  }

  const testing::Scenario& s_;
  std::size_t id_;
  Tally& t_;
  std::mt19937_64& rng_;
  InlinedProgram ip_;
  ProofBundle proof_;
  GhostLayer layer_;
};

}  // namespace

// Every mutant of a valid bundle in the five tamper classes is rejected.
Verdict tamper_rejection() {
  Tally t;
  std::mt19937_64 rng(42);
  for (std::size_t i = 0; i < kMaxScenarios; ++i) {
    bool full = true;
    for (std::size_t c = 0; c < kClasses; ++c) full = full && t.made[c] >= kPerClass;
    if (full) break;
    Tamperer(corpus_scenario(i), i, t, rng).all();
  }
  std::size_t made = 0, rejected = 0;
  bool each = true;
  std::ostringstream d;
  for (std::size_t c = 0; c < kClasses; ++c) {
    made += t.made[c];
    rejected += t.rejected[c];
    each = each && t.made[c] >= kPerClass;
    d << (c ? ", " : "") << kClassNames[c] << " " << t.rejected[c] << "/" << t.made[c];
    if (t.malformed[c]) d << " (" << t.malformed[c] << " malformed)";
  }
  std::ostringstream out;
  out << rejected << "/" << made << " mutants rejected: " << d.str() << "; weakened label's own VC undischarged "
      << t.weakened_at_label << "/" << t.made[Weakened];
  if (!t.first_accepted.empty()) out << "; first accepted: " << t.first_accepted;
  return {each && made >= 200 && rejected == made && t.weakened_at_label == t.made[Weakened], out.str()};
}

}  // namespace irm::acceptance

#include "irmpcc/wp.hpp"

#include <sstream>

#include "irmpcc/inliner.hpp"

namespace irm {

namespace {

const Instruction& instr(const ExtendedMethod& m, std::size_t label) {
  if (!m.def || label >= m.def->instructions.size()) {
    throw WpError("label out of range", label);
  }
  return m.def->instructions[label];
}

const GhostSlot* slot(const ExtendedMethod& m, std::size_t label) {
  if (!m.ghosts) return nullptr;
  auto it = m.ghosts->slots.find(label);
  return it == m.ghosts->slots.end() ? nullptr : &it->second;
}

const Term& annotation(const ExtendedMethod& m, std::size_t label) {
  if (label >= m.annotations.size() || !m.annotations[label]) {
    throw WpError("missing annotation", label);
  }
  return m.annotations[label];
}

std::size_t target_label(const ExtendedMethod& m, std::int64_t target, std::size_t at) {
  if (target < 0 || static_cast<std::size_t>(target) >= m.def->instructions.size()) {
    throw WpError("branch target out of range", at);
  }
  return static_cast<std::size_t>(target);
}

std::size_t next_label(const ExtendedMethod& m, std::size_t label) {
  if (label + 1 >= m.def->instructions.size()) throw WpError("falls off the end", label);
  return label + 1;
}

// Handlers that may receive an exception raised at `label`, in match order,
// stopping at the first catch-all. The flag tells whether one was found.
std::pair<std::vector<const Handler*>, bool> covering(const ExtendedMethod& m, std::size_t label) {
  std::vector<const Handler*> out;
  auto l = static_cast<std::int64_t>(label);
  for (const auto& h : m.def->handlers) {
    if (h.begin <= l && l < h.end) {
      out.push_back(&h);
      if (h.catch_class == kThrowable) return {out, true};
    }
  }
  return {out, false};
}

bool is_frame_term(const Node& n, bool allow_ghosts) {
  switch (n.kind) {
    case Kind::Stack:
    case Kind::Static:
    case Kind::Field:
    case Kind::Fresh:
      return false;
    case Kind::Ghost:
      return allow_ghosts;
    default:
      return true;
  }
}

bool relevant_call(const Instruction& ins, const VcContext& ctx) {
  return ins.is_invoke() && ctx.contract && ctx.program &&
         !relevant_dispatch(*ctx.contract, *ctx.program, ins).empty();
}

// Conjuncts of `a` that are not part of the invariant; each must survive a call.
void collect_frame(const Term& a, const std::vector<Term>& psi, bool allow_ghosts, std::size_t label,
                   std::vector<Term>& out) {
  for (const auto& c : conjuncts(a)) {
    bool in_psi = false;
    for (const auto& p : psi) {
      if (term_equal(c, p)) {
        in_psi = true;
        break;
      }
    }
    if (in_psi || c->kind == Kind::True) continue;
    bool ok = !mentions(c, [&](const Node& n) { return !is_frame_term(n, allow_ghosts); });
    if (!ok) throw WpError("unsupported post-call annotation", label);
    bool dup = false;
    for (const auto& o : out) dup = dup || term_equal(o, c);
    if (!dup) out.push_back(c);
  }
}

}  // namespace

Term entry_assertion(const ExtendedMethod& m, std::size_t label) {
  const Term& a = annotation(m, label);
  const GhostSlot* s = slot(m, label);
  return s ? ghost_wp(s->pre, a) : a;
}

Term wp_invoke(const ExtendedMethod& m, std::size_t label, const VcContext& ctx) {
  if (!ctx.program || !ctx.invariant) throw WpError("no program context", label);
  const Instruction& ins = instr(m, label);
  bool api = ctx.program->is_api_invoke(ins);
  auto psi = conjuncts(ctx.invariant);
  std::vector<Term> frame;
  collect_frame(entry_assertion(m, next_label(m, label)), psi, api, label, frame);
  for (const Handler* h : covering(m, label).first) {
    collect_frame(entry_assertion(m, target_label(m, h->target, label)), psi, api, label, frame);
  }
  // Uncaught exceptions and the callee's own contract both use the invariant
  // as pre/post, so those need nothing beyond Psi.
  psi.insert(psi.end(), frame.begin(), frame.end());
  return conj(psi);
}

Term wp(const ExtendedMethod& m, std::size_t label, const VcContext& ctx) {
  const Instruction& ins = instr(m, label);
  auto succ = [&]() { return entry_assertion(m, next_label(m, label)); };
  auto at = [&](std::int64_t t) { return entry_assertion(m, target_label(m, t, label)); };
  auto unshifted = [&](const Term& a) {
    try {
      return unshift(a);
    } catch (const Error&) {
      throw WpError("successor reads a popped stack slot", label);
    }
  };
  Term body;
  switch (ins.op) {
    case Opcode::InstanceOf:
      body = subst(succ(), stack(0), cond(is(stack(0), ins.owner), int_lit(1), int_lit(0)));
      break;
    case Opcode::ALoad:
      body = unshifted(subst(succ(), stack(0), local(ins.number)));
      break;
    case Opcode::AStore:
      if (ctx.options.conjunctive_astore) {
        body = and_(shift(succ()), eq(stack(0), local(ins.number)));
      } else {
        body = subst(shift(succ()), local(ins.number), stack(0));
      }
      break;
    case Opcode::AThrow: {
      std::vector<Term> guards, bodies;
      for (const Handler* h : covering(m, label).first) {
        Term t = at(h->target);
        if (mentions(t, [](const Node& n) { return n.kind == Kind::Stack && n.index != 0; })) {
          throw WpError("handler annotation reads below the exception", label);
        }
        guards.push_back(is(stack(0), h->catch_class));
        bodies.push_back(t);
      }
      if (!m.post) throw WpError("missing postcondition", label);
      body = select_macro(guards, bodies, m.post);
      break;
    }
    case Opcode::Dup:
      body = unshifted(subst(succ(), stack(0), stack(1)));
      break;
    case Opcode::GetField:
      body = subst(succ(), stack(0), field(stack(0), ins.member));
      break;
    case Opcode::GetStatic:
      body = unshifted(subst(succ(), stack(0), static_ref(ins.owner, ins.member)));
      break;
    case Opcode::PutStatic:
      body = subst(shift(succ()), static_ref(ins.owner, ins.member), stack(0));
      break;
    case Opcode::Goto:
      body = at(ins.number);
      break;
    case Opcode::IConst:
      body = unshifted(subst(succ(), stack(0), int_lit(ins.number)));
      break;
    case Opcode::Ldc:
      body = unshifted(subst(succ(), stack(0), lit(ins.literal)));
      break;
    case Opcode::IfIcmpEq:
      body = if_macro(eq(stack(0), stack(1)), shift_k(at(ins.number), 2), shift_k(succ(), 2));
      break;
    case Opcode::IfIcmpNe:
      body = if_macro(ne(stack(0), stack(1)), shift_k(at(ins.number), 2), shift_k(succ(), 2));
      break;
    case Opcode::IfIcmpLt:
      body = if_macro(lt(stack(1), stack(0)), shift_k(at(ins.number), 2), shift_k(succ(), 2));
      break;
    case Opcode::IfIcmpGe:
      body = if_macro(not_(lt(stack(1), stack(0))), shift_k(at(ins.number), 2), shift_k(succ(), 2));
      break;
    case Opcode::IfEq:
      body = if_macro(eq(stack(0), int_lit(0)), shift(at(ins.number)), shift(succ()));
      break;
    case Opcode::IfNe:
      body = if_macro(ne(stack(0), int_lit(0)), shift(at(ins.number)), shift(succ()));
      break;
    case Opcode::InvokeVirtual:
    case Opcode::InvokeStatic:
      body = wp_invoke(m, label, ctx);
      break;
    case Opcode::Return:
      if (!m.post) throw WpError("missing postcondition", label);
      body = m.post;
      break;
    case Opcode::Exit:
      body = tt();
      break;
    case Opcode::IAdd:
    case Opcode::ISub:
    case Opcode::IMul: {
      BinOp op = ins.op == Opcode::IAdd ? BinOp::Add : ins.op == Opcode::ISub ? BinOp::Sub : BinOp::Mul;
      body = subst(shift(succ()), stack(1), bin(op, stack(1), stack(0)));
      break;
    }
    case Opcode::Nop:
    case Opcode::Pop:
    case Opcode::Swap:
    case Opcode::PutField:
      throw WpError("no wp rule for " + std::string(mnemonic(ins.op)), label);
  }
  const GhostSlot* s = slot(m, label);
  return s ? ghost_wp(s->post, body) : body;
}

std::vector<std::optional<std::size_t>> control_successors(const ExtendedMethod& m, std::size_t label,
                                                           const VcContext& ctx) {
  (void)ctx;
  const Instruction& ins = instr(m, label);
  std::vector<std::optional<std::size_t>> out;
  if (ins.falls_through()) out.emplace_back(next_label(m, label));
  if (ins.is_branch()) out.emplace_back(target_label(m, ins.number, label));
  if (ins.op == Opcode::Return) out.emplace_back(std::nullopt);
  if (ins.op == Opcode::AThrow || ins.is_invoke()) {
    auto [hs, total] = covering(m, label);
    for (const Handler* h : hs) out.emplace_back(target_label(m, h->target, label));
    if (!total) out.emplace_back(std::nullopt);
  }
  return out;
}

bool fallback_preservation_check(const ExtendedMethod& m, std::size_t label, const VcContext& ctx) {
  if (!ctx.invariant || !m.def || label >= m.def->instructions.size()) return false;
  if (label < m.inlined.size() && m.inlined[label]) return false;
  if (label >= m.annotations.size() || !m.annotations[label]) return false;
  if (!term_equal(m.annotations[label], ctx.invariant)) return false;
  if (const GhostSlot* s = slot(m, label); s && !s->post.empty()) return false;
  const Instruction& ins = m.def->instructions[label];
  if (ins.op == Opcode::PutStatic && ins.owner == kStateClass) return false;
  if (ins.is_invoke() && (!ctx.contract || !ctx.program || relevant_call(ins, ctx))) return false;
  try {
    for (const auto& s : control_successors(m, label, ctx)) {
      const Term& a = s ? entry_assertion(m, *s) : m.post;
      if (!a || !term_equal(a, ctx.invariant)) return false;
    }
  } catch (const WpError&) {
    return false;
  }
  return true;
}

std::vector<VerificationCondition> vcgen(const ExtendedMethod& m, const VcContext& ctx) {
  std::vector<VerificationCondition> out;
  if (!m.def || m.def->instructions.empty()) throw WpError("empty method", 0);
  if (!m.pre) throw WpError("missing precondition", 0);
  out.push_back({m.ref, std::nullopt, m.pre, entry_assertion(m, 0)});
  for (std::size_t l = 0; l < m.def->instructions.size(); ++l) {
    out.push_back({m.ref, l, annotation(m, l), wp(m, l, ctx)});
  }
  return out;
}

std::string to_string(const VerificationCondition& vc) {
  std::ostringstream os;
  os << vc.method.qualified() << ":" << (vc.label ? std::to_string(*vc.label) : std::string("pre"))
     << " |- " << to_string(vc.antecedent) << " ==> " << to_string(vc.succedent);
  return os.str();
}

}  // namespace irm

#include "irmpcc/inliner.hpp"

#include <sstream>

#include "irmpcc/error.hpp"

namespace irm {

namespace {

/// Code with symbolic forward labels, relocated when appended to a method.
class CodeBuffer {
 public:
  int new_label() {
    bound_.push_back(std::nullopt);
    return static_cast<int>(bound_.size()) - 1;
  }
  void bind(int label) { bound_[label] = code_.size(); }
  void emit(Instruction ins) { code_.push_back(std::move(ins)); }
  void jump(Opcode op, int label) {
    fixups_.emplace_back(code_.size(), label);
    code_.push_back(Instruction::with_number(op, 0));
  }
  std::size_t size() const { return code_.size(); }

  /// Resolves labels as if the buffer starts at `base`.
  std::vector<Instruction> finish(std::size_t base) const {
    auto out = code_;
    for (auto [at, label] : fixups_) {
      if (!bound_[label]) throw Error("internal: unbound label");
      out[at].number = static_cast<std::int64_t>(base + *bound_[label]);
    }
    return out;
  }

 private:
  std::vector<Instruction> code_;
  std::vector<std::optional<std::size_t>> bound_;
  std::vector<std::pair<std::size_t, int>> fixups_;
};

Instruction push_literal(const Value& v) {
  if (is_int(v)) return Instruction::with_number(Opcode::IConst, std::get<std::int64_t>(v));
  return Instruction::ldc(v);
}

void jump_if(CodeBuffer& b, const CExprPtr& e, bool sense, int target, const GuardEnv& env);

void push_value(CodeBuffer& b, const CExprPtr& e, const GuardEnv& env) {
  switch (e->kind) {
    case CKind::Lit:
      b.emit(push_literal(e->lit));
      return;
    case CKind::StateVar:
      b.emit(Instruction::with_ref(Opcode::GetStatic, std::string(kStateClass), e->name));
      return;
    case CKind::Param:
      if (e->index >= env.arg_locals.size()) throw ValidationError("guard parameter " + e->name + " is unmapped");
      b.emit(Instruction::with_number(Opcode::ALoad, static_cast<std::int64_t>(env.arg_locals[e->index])));
      return;
    case CKind::Ret:
      if (!env.result_local) throw ValidationError("return binding " + e->name + " is unmapped");
      b.emit(Instruction::with_number(Opcode::ALoad, static_cast<std::int64_t>(*env.result_local)));
      return;
    case CKind::Add:
    case CKind::Sub:
    case CKind::Mul:
      push_value(b, e->kids[0], env);
      push_value(b, e->kids[1], env);
      b.emit(Instruction::make(e->kind == CKind::Add   ? Opcode::IAdd
                               : e->kind == CKind::Sub ? Opcode::ISub
                                                       : Opcode::IMul));
      return;
    default: {
      int f = b.new_label(), done = b.new_label();
      jump_if(b, e, false, f, env);
      b.emit(Instruction::with_number(Opcode::IConst, 1));
      b.jump(Opcode::Goto, done);
      b.bind(f);
      b.emit(Instruction::with_number(Opcode::IConst, 0));
      b.bind(done);
    }
  }
}

/// Jumps to `target` iff the condition's truth equals `sense`; falls through otherwise.
void jump_if(CodeBuffer& b, const CExprPtr& e, bool sense, int target, const GuardEnv& env) {
  auto cmp = [&](const CExprPtr& x, const CExprPtr& y, Opcode when_true, Opcode when_false) {
    push_value(b, x, env);
    push_value(b, y, env);
    b.jump(sense ? when_true : when_false, target);
  };
  switch (e->kind) {
    case CKind::Lit:
      if (e->boolean) {
        if (truthy(e->lit) == sense) b.jump(Opcode::Goto, target);
        return;
      }
      break;
    case CKind::Not:
      return jump_if(b, e->kids[0], !sense, target, env);
    case CKind::And:
    case CKind::Or: {
      // For And, a false operand decides; for Or, a true one does.
      bool decisive = e->kind == CKind::Or;
      if (sense == decisive) {
        jump_if(b, e->kids[0], sense, target, env);
        jump_if(b, e->kids[1], sense, target, env);
      } else {
        int skip = b.new_label();
        jump_if(b, e->kids[0], decisive, skip, env);
        jump_if(b, e->kids[1], sense, target, env);
        b.bind(skip);
      }
      return;
    }
    case CKind::Eq:
      return cmp(e->kids[0], e->kids[1], Opcode::IfIcmpEq, Opcode::IfIcmpNe);
    case CKind::Ne:
      return cmp(e->kids[0], e->kids[1], Opcode::IfIcmpNe, Opcode::IfIcmpEq);
    case CKind::Lt:
      return cmp(e->kids[0], e->kids[1], Opcode::IfIcmpLt, Opcode::IfIcmpGe);
    case CKind::Le:
      return cmp(e->kids[1], e->kids[0], Opcode::IfIcmpGe, Opcode::IfIcmpLt);
    default:
      break;
  }
  push_value(b, e, env);
  b.jump(sense ? Opcode::IfNe : Opcode::IfEq, target);
}

void emit_updates(CodeBuffer& b, const std::vector<Assignment>& stmts, const GuardEnv& env) {
  for (const auto& a : stmts) {
    push_value(b, a.value, env);
    b.emit(Instruction::with_ref(Opcode::PutStatic, std::string(kStateClass), a.var));
  }
}

void emit_fail(CodeBuffer& b) {
  b.emit(Instruction::with_number(Opcode::IConst, 1));
  b.emit(Instruction::make(Opcode::Exit));
}

bool ends_with_true(const EventClause& c) {
  if (c.commands.empty()) return false;
  const auto& g = c.commands.back().guard;
  return g->kind == CKind::Lit && g->boolean && truthy(g->lit);
}

/// Guarded commands of one clause; control reaches `done` after an update or
/// stops at exit when no guard holds.
void emit_clause(CodeBuffer& b, const EventClause& c, int done, const GuardEnv& env) {
  for (const auto& gc : c.commands) {
    int next = b.new_label();
    jump_if(b, gc.guard, false, next, env);
    emit_updates(b, gc.updates, env);
    b.jump(Opcode::Goto, done);
    b.bind(next);
  }
  if (!ends_with_true(c)) emit_fail(b);
}

/// The instanceof cascade of one modifier. Returns false when no candidate
/// has a clause, in which case nothing is emitted.
bool emit_cascade(CodeBuffer& b, const Contract& k, Modifier mod, const std::string& method,
                  const std::vector<std::string>& cands, bool is_virtual, std::optional<std::size_t> recv,
                  const GuardEnv& env) {
  bool any = false;
  for (const auto& c : cands) any = any || k.find(mod, c, method);
  if (!any) return false;
  int done = b.new_label();
  if (!is_virtual) {
    emit_clause(b, *k.find(mod, cands[0], method), done, env);
  } else {
    for (const auto& c : cands) {
      const EventClause* clause = k.find(mod, c, method);
      b.emit(Instruction::with_number(Opcode::ALoad, static_cast<std::int64_t>(*recv)));
      b.emit(Instruction::with_ref(Opcode::InstanceOf, c));
      if (!clause) {
        b.jump(Opcode::IfNe, done);
        continue;
      }
      int next = b.new_label();
      b.jump(Opcode::IfEq, next);
      emit_clause(b, *clause, done, env);
      b.bind(next);
    }
  }
  b.bind(done);
  return true;
}

}  // namespace

std::vector<Instruction> compile_guard(const CExprPtr& g, const GuardEnv& env) {
  CodeBuffer b;
  if (g->boolean || g->kind == CKind::Ret) {
    int f = b.new_label(), done = b.new_label();
    jump_if(b, g, false, f, env);
    b.emit(Instruction::with_number(Opcode::IConst, 1));
    b.jump(Opcode::Goto, done);
    b.bind(f);
    b.emit(Instruction::with_number(Opcode::IConst, 0));
    b.bind(done);
  } else {
    push_value(b, g, env);
  }
  return b.finish(0);
}

std::vector<Instruction> compile_update(const std::vector<Assignment>& stmts, const Contract& k,
                                        const GuardEnv& env) {
  for (const auto& a : stmts)
    if (!k.state_index(a.var)) throw ValidationError("assignment to non-state name " + a.var);
  CodeBuffer b;
  emit_updates(b, stmts, env);
  return b.finish(0);
}

InlinedProgram inline_program(const Program& p, const Contract& k) {
  if (p.find_class(kStateClass))
    throw ValidationError("program already defines a class named " + std::string(kStateClass));
  check_contract_against(k, p);

  InlinedProgram out;
  out.program = p;
  for (auto& cls : out.program.mutable_classes()) {
    if (cls.is_api || cls.builtin) continue;
    for (auto& m : cls.methods) {
      if (m.is_api) continue;
      const std::string qname = cls.name + "." + m.name;
      const MethodDef orig = m;
      const std::size_t base = orig.num_locals;
      std::vector<std::size_t> pos(orig.instructions.size() + 1);
      std::vector<Instruction> code;
      std::vector<Handler> dedicated;
      std::vector<bool> copied;  // true for instructions carried over unchanged

      for (std::size_t lbl = 0; lbl < orig.instructions.size(); ++lbl) {
        pos[lbl] = code.size();
        const Instruction& ins = orig.instructions[lbl];
        auto cands = relevant_dispatch(k, p, ins);
        if (cands.empty()) {
          code.push_back(ins);
          copied.push_back(true);
          continue;
        }
        const MethodDef& target = p.static_target(ins);
        const bool is_virtual = ins.op == Opcode::InvokeVirtual;
        CallSite site;
        GuardEnv env;
        std::size_t next_local = base;
        if (is_virtual) site.receiver_local = next_local++;
        for (std::size_t i = 0; i < target.arity; ++i) site.arg_locals.push_back(next_local++);
        if (target.returns_value) site.result_local = next_local++;
        env.arg_locals = site.arg_locals;
        env.result_local = site.result_local;

        CodeBuffer b;
        for (std::size_t i = target.arity; i-- > 0;)
          b.emit(Instruction::with_number(Opcode::AStore, static_cast<std::int64_t>(site.arg_locals[i])));
        if (is_virtual)
          b.emit(Instruction::with_number(Opcode::AStore, static_cast<std::int64_t>(*site.receiver_local)));
        emit_cascade(b, k, Modifier::Before, ins.member, cands, is_virtual, site.receiver_local, env);
        if (is_virtual)
          b.emit(Instruction::with_number(Opcode::ALoad, static_cast<std::int64_t>(*site.receiver_local)));
        for (auto l : site.arg_locals) b.emit(Instruction::with_number(Opcode::ALoad, static_cast<std::int64_t>(l)));
        std::size_t invoke_off = b.size();
        b.emit(ins);
        int end = b.new_label();
        {
          bool after = false;
          for (const auto& c : cands) after = after || k.find(Modifier::After, c, ins.member);
          if (after && site.result_local)
            b.emit(Instruction::with_number(Opcode::AStore, static_cast<std::int64_t>(*site.result_local)));
          emit_cascade(b, k, Modifier::After, ins.member, cands, is_virtual, site.receiver_local, env);
          if (after && site.result_local)
            b.emit(Instruction::with_number(Opcode::ALoad, static_cast<std::int64_t>(*site.result_local)));
          if (!after) site.result_local.reset();
        }
        b.jump(Opcode::Goto, end);
        std::size_t handler_off = b.size();
        emit_cascade(b, k, Modifier::Exceptional, ins.member, cands, is_virtual, site.receiver_local, env);
        b.emit(Instruction::make(Opcode::AThrow));
        b.bind(end);

        std::size_t start = code.size();
        for (auto& i : b.finish(start)) {
          code.push_back(std::move(i));
          copied.push_back(false);
        }
        site.begin = start;
        site.invoke = start + invoke_off;
        site.handler = start + handler_off;
        site.end = code.size();
        dedicated.push_back(Handler{static_cast<std::int64_t>(site.invoke), static_cast<std::int64_t>(site.invoke + 1),
                                    static_cast<std::int64_t>(site.handler), std::string(kThrowable)});
        out.inlined_labels[qname].emplace_back(site.begin, site.end - 1);
        out.call_sites[qname].push_back(std::move(site));
      }
      pos[orig.instructions.size()] = code.size();
      if (!out.call_sites.count(qname)) continue;

      for (std::size_t i = 0; i < code.size(); ++i)
        if (copied[i] && code[i].is_branch()) code[i].number = static_cast<std::int64_t>(pos[code[i].number]);
      std::vector<Handler> handlers = dedicated;
      for (const auto& h : orig.handlers)
        handlers.push_back(Handler{static_cast<std::int64_t>(pos[h.begin]), static_cast<std::int64_t>(pos[h.end]),
                                   static_cast<std::int64_t>(pos[h.target]), h.catch_class});
      m.instructions = std::move(code);
      m.handlers = std::move(handlers);
    }
  }

  ClassDecl ss;
  ss.name = std::string(kStateClass);
  ss.is_final = true;
  for (const auto& d : k.state) ss.fields.push_back(FieldDecl{d.name, true, d.initial});
  out.program.add_class(std::move(ss));
  out.program.finalize();
  return out;
}

InlinedProgram recover_inlined(Program inlined, const Contract& k,
                               std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> ranges) {
  InlinedProgram ip;
  ip.program = std::move(inlined);
  ip.inlined_labels = std::move(ranges);
  const Program& p = ip.program;
  for (const auto& [q, rs] : ip.inlined_labels) {
    auto dot = q.rfind('.');
    if (dot == std::string::npos) throw ValidationError("bad method name " + q);
    const MethodDef& def = p.method({q.substr(0, dot), q.substr(dot + 1)});
    const auto& code = def.instructions;
    for (const auto& [b, e] : rs) {
      auto bad = [&](const std::string& why) {
        return ValidationError(q + ": inlined range " + std::to_string(b) + "-" + std::to_string(e) + " " + why);
      };
      if (b > e || e >= code.size()) throw bad("out of bounds");
      CallSite cs;
      cs.begin = b;
      cs.end = e + 1;
      bool found = false;
      for (std::size_t l = b; l <= e; ++l) {
        if (!code[l].is_invoke() || relevant_dispatch(k, p, code[l]).empty()) continue;
        if (found) throw bad("holds more than one relevant call");
        found = true;
        cs.invoke = l;
      }
      if (!found) throw bad("holds no relevant call");
      const Handler* h = nullptr;
      for (const auto& hd : def.handlers) {
        if (hd.begin <= static_cast<std::int64_t>(cs.invoke) && static_cast<std::int64_t>(cs.invoke) < hd.end) {
          h = &hd;
          break;
        }
      }
      if (!h || h->target < 0 || static_cast<std::size_t>(h->target) > e) throw bad("has no dedicated handler");
      cs.handler = static_cast<std::size_t>(h->target);
      const Instruction& call = code[cs.invoke];
      const MethodDef& target = p.static_target(call);
      bool is_virtual = call.op == Opcode::InvokeVirtual;
      std::size_t n = target.arity + (is_virtual ? 1 : 0);
      if (cs.invoke < b + n) throw bad("does not load the call's operands");
      for (std::size_t i = 0; i < n; ++i) {
        const Instruction& ld = code[cs.invoke - n + i];
        if (ld.op != Opcode::ALoad) throw bad("does not load the call's operands");
        auto local = static_cast<std::size_t>(ld.number);
        if (is_virtual && i == 0) cs.receiver_local = local;
        else cs.arg_locals.push_back(local);
      }
      if (cs.invoke + 1 <= e && code[cs.invoke + 1].op == Opcode::AStore)
        cs.result_local = static_cast<std::size_t>(code[cs.invoke + 1].number);
      ip.call_sites[q].push_back(std::move(cs));
    }
  }
  return ip;
}

std::string print_inlined_labels(const InlinedProgram& ip) {
  std::ostringstream out;
  for (const auto& [m, ranges] : ip.inlined_labels)
    for (const auto& [a, b] : ranges) out << m << ": " << a << "-" << b << "\n";
  return out.str();
}

std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> parse_inlined_labels(std::string_view text) {
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto colon = line.rfind(':');
    std::size_t a = 0, b = 0;
    char dash = 0;
    std::istringstream rs(colon == std::string::npos ? std::string() : line.substr(colon + 1));
    if (colon == std::string::npos || !(rs >> a >> dash >> b) || dash != '-' || b < a)
      throw ParseError("expected `method: L1-L2`", no, 1);
    auto name = line.substr(0, colon);
    name.erase(0, name.find_first_not_of(" \t"));
    out[name].emplace_back(a, b);
  }
  return out;
}

}  // namespace irm

#include "irmpcc/interpreter.hpp"

#include <sstream>

#include "irmpcc/error.hpp"

namespace irm {

// ---- configuration ----

Loc Configuration::allocate(const std::string& cls) {
  HeapObject o;
  o.cls = cls;
  for (const ClassDecl* c = &program->get_class(cls);;) {
    for (const auto& f : c->fields)
      if (!f.is_static) o.fields.emplace(f.name, make_int(0));
    if (!c->superclass) break;
    c = &program->get_class(*c->superclass);
  }
  heap.push_back(std::move(o));
  return Loc{static_cast<std::uint32_t>(heap.size())};
}

const HeapObject& Configuration::object(Loc l) const {
  if (l.id == 0 || l.id > heap.size()) throw MachineFault("dangling location @" + std::to_string(l.id));
  return heap[l.id - 1];
}

HeapObject& Configuration::object(Loc l) {
  return const_cast<HeapObject&>(static_cast<const Configuration&>(*this).object(l));
}

Value Configuration::stack(std::int64_t i) const {
  if (!top_is_normal() || i < 0) return bottom();
  return frames.back().s(static_cast<std::size_t>(i));
}

Value Configuration::local(std::int64_t i) const {
  if (!top_is_normal() || i < 0) return bottom();
  const auto& l = frames.back().locals;
  if (static_cast<std::size_t>(i) >= l.size() || !l[i]) return bottom();
  return *l[i];
}

Value Configuration::static_field(const std::string& c, const std::string& f) const {
  auto it = statics.find({c, f});
  return it == statics.end() ? bottom() : it->second;
}

Value Configuration::field(Loc l, const std::string& f) const {
  if (l.id == 0 || l.id > heap.size()) return bottom();
  const auto& fs = heap[l.id - 1].fields;
  auto it = fs.find(f);
  return it == fs.end() ? bottom() : it->second;
}

Value Configuration::ghost(const std::string& g) const {
  auto it = ghosts.find(g);
  return it == ghosts.end() ? bottom() : it->second;
}

bool Configuration::instance_of(Loc l, const std::string& c) const {
  if (l.id == 0 || l.id > heap.size()) return false;
  return program->subclass_of(heap[l.id - 1].cls, c);
}

// ---- oracles ----

SeededOracle::SeededOracle(std::uint64_t seed) : SeededOracle(seed, Options{}) {}
SeededOracle::SeededOracle(std::uint64_t seed, Options opts) : rng_(seed), opts_(std::move(opts)) {}

OracleOutcome SeededOracle::call(const MethodRef&, const MethodDef& def, const std::vector<Value>&,
                                 Configuration& c) {
  const Program& p = *c.program;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> ints(opts_.int_min, opts_.int_max);
  auto pick_string = [&] {
    return opts_.strings[std::uniform_int_distribution<std::size_t>(0, opts_.strings.size() - 1)(rng_)];
  };
  auto scramble = [&](Value& v) {
    if (coin(rng_) >= opts_.scramble_rate) return;
    if (is_int(v)) v = make_int(ints(rng_));
    else if (std::holds_alternative<std::string>(v)) v = make_str(pick_string());
  };
  for (auto& o : c.heap)
    for (auto& [_, v] : o.fields) scramble(v);
  for (auto& [key, v] : c.statics)
    if (!p.get_class(key.first).is_final) scramble(v);

  auto pick_class = [&](std::string_view base) {
    std::vector<std::string> cands;
    for (const auto& cls : p.classes())
      if (p.subclass_of(cls.name, base)) cands.push_back(cls.name);
    return cands[std::uniform_int_distribution<std::size_t>(0, cands.size() - 1)(rng_)];
  };

  OracleOutcome out;
  if (coin(rng_) < opts_.exception_rate) {
    out.throws = true;
    out.exn_class = pick_class(kThrowable);
    return out;
  }
  if (!def.returns_value) return out;
  const auto& t = def.return_type;
  if (t == "int") out.ret = make_int(ints(rng_));
  else if (t == "boolean") out.ret = make_bool(coin(rng_) < 0.5);
  else if (t == "String" || t == "string") out.ret = make_str(pick_string());
  else out.new_class = pick_class(t);
  return out;
}

OracleOutcome ScriptedOracle::call(const MethodRef& resolved, const MethodDef&, const std::vector<Value>&,
                                   Configuration&) {
  if (next_ >= script_.size())
    throw Error("oracle script exhausted at call " + std::to_string(next_ + 1) + " (" +
                resolved.qualified() + ")");
  return script_[next_++];
}

std::vector<OracleOutcome> parse_oracle_script(std::string_view text) {
  std::vector<OracleOutcome> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (auto semi = line.find(';'); semi != std::string::npos && line.find('"') == std::string::npos)
      line.erase(semi);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    std::string rest;
    std::getline(ls, rest);
    auto b = rest.find_first_not_of(" \t");
    auto e = rest.find_last_not_of(" \t\r");
    rest = b == std::string::npos ? "" : rest.substr(b, e - b + 1);
    OracleOutcome o;
    if (kw == "throw" && !rest.empty()) {
      o.throws = true;
      o.exn_class = rest;
    } else if (kw == "ret" && rest.rfind("new ", 0) == 0) {
      o.new_class = rest.substr(4);
    } else if (kw == "ret") {
      if (!rest.empty()) {
        try {
          o.ret = parse_value(rest);
        } catch (const Error& err) {
          throw ParseError(err.what(), no, 1);
        }
      }
    } else {
      throw ParseError("expected `ret <value>`, `ret new <Class>` or `throw <Class>`", no, 1);
    }
    out.push_back(std::move(o));
  }
  return out;
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Running:
      return "running";
    case RunStatus::Returned:
      return "returned";
    case RunStatus::Exited:
      return "exited";
    case RunStatus::Uncaught:
      return "uncaught-exception";
    case RunStatus::FuelExhausted:
      return "fuel-exhausted";
  }
  return "?";
}

// ---- machine ----

namespace {

Frame make_frame(const Program& p, const MethodRef& ref) {
  Frame f;
  f.ref = ref;
  f.method = &p.method(ref);
  f.locals.resize(f.method->num_locals);
  return f;
}

Value pop(Frame& f) {
  if (f.stack.empty()) throw MachineFault("operand stack underflow in " + f.ref.qualified() + " at " + std::to_string(f.pc));
  Value v = std::move(f.stack.back());
  f.stack.pop_back();
  return v;
}

std::int64_t as_int(const Value& v, const Frame& f) {
  if (!is_int(v)) throw MachineFault("integer operand expected in " + f.ref.qualified() + " at " + std::to_string(f.pc) + ", got " + to_string(v));
  return std::get<std::int64_t>(v);
}

Loc as_loc(const Value& v, const Frame& f, const char* what) {
  if (!is_loc(v))
    throw MachineFault(std::string(what) + " on non-object " + to_string(v) + " in " + f.ref.qualified() + " at " +
                       std::to_string(f.pc));
  return std::get<Loc>(v);
}

}  // namespace

Machine::Machine(const Program& p, ApiOracle& oracle) : p_(p), oracle_(oracle) {
  c_.program = &p;
  for (const auto& cls : p.classes())
    for (const auto& f : cls.fields)
      if (f.is_static) c_.statics[{cls.name, f.name}] = f.initial;
  c_.frames.push_back(make_frame(p, p.main()));
}

void Machine::throw_from_top(Loc l) {
  Frame f;
  f.exceptional = true;
  f.exn = l;
  c_.frames.push_back(std::move(f));
}

void Machine::unwind(StepInfo&) {
  Loc l = c_.frames.back().exn;
  c_.frames.pop_back();
  if (c_.frames.empty()) {
    throw_from_top(l);
    status_ = RunStatus::Uncaught;
    return;
  }
  Frame& f = c_.frames.back();
  const auto& cls = c_.object(l).cls;
  for (const auto& h : f.method->handlers) {
    if (h.begin <= static_cast<std::int64_t>(f.pc) && static_cast<std::int64_t>(f.pc) < h.end &&
        p_.subclass_of(cls, h.catch_class)) {
      f.pc = static_cast<std::size_t>(h.target);
      f.stack.assign(1, Value{l});
      return;
    }
  }
  c_.frames.pop_back();
  throw_from_top(l);
  if (c_.frames.size() == 1) status_ = RunStatus::Uncaught;
}

void Machine::invoke(const Instruction& ins, StepInfo& info) {
  Frame& f = c_.frames.back();
  const MethodDef& declared = p_.static_target(ins);
  std::vector<Value> args(declared.arity);
  for (std::size_t i = declared.arity; i-- > 0;) args[i] = pop(f);
  std::optional<Value> receiver;
  std::string dyn_class = ins.owner;
  if (ins.op == Opcode::InvokeVirtual) {
    receiver = pop(f);
    dyn_class = c_.object(as_loc(*receiver, f, "invokevirtual")).cls;
  }
  MethodRef target{p_.resolve_definition(dyn_class, ins.member), ins.member};
  const MethodDef& def = p_.method(target);
  if (!def.is_api) {
    Frame callee = make_frame(p_, target);
    std::size_t base = 0;
    if (receiver) {
      callee.locals[0] = *receiver;
      base = 1;
    }
    for (std::size_t i = 0; i < args.size(); ++i) callee.locals[base + i] = args[i];
    c_.frames.push_back(std::move(callee));
    return;
  }
  info.pre = SecurityAction{ActionKind::Pre, target, args, std::nullopt};
  OracleOutcome out = oracle_.call(target, def, args, c_);
  Frame& caller = c_.frames.back();
  if (out.throws) {
    if (!p_.subclass_of(out.exn_class, kThrowable))
      throw MachineFault("oracle threw non-Throwable " + out.exn_class);
    throw_from_top(c_.allocate(out.exn_class));
    info.post = SecurityAction{ActionKind::Exn, target, args, std::nullopt};
    return;
  }
  std::optional<Value> r;
  if (def.returns_value) {
    r = out.new_class.empty() ? out.ret : Value{c_.allocate(out.new_class)};
    caller.stack.push_back(*r);
  }
  caller.pc++;
  info.post = SecurityAction{ActionKind::Post, target, args, r};
}

StepInfo Machine::step() {
  if (status_ != RunStatus::Running) throw Error("step on a terminated machine");
  StepInfo info;
  Frame& top = c_.frames.back();
  info.method = top.ref;
  info.pc = top.pc;
  if (top.exceptional) {
    info.from_exceptional = true;
    info.method = c_.frames.size() > 1 ? c_.frames[c_.frames.size() - 2].ref : MethodRef{};
    unwind(info);
    return info;
  }

  std::vector<std::pair<std::pair<std::string, std::string>, Value>> finals;
  const Instruction& ins = top.method->instructions.at(top.pc);
  if (check_finals_) {
    for (const auto& [k, v] : c_.statics)
      if (p_.get_class(k.first).is_final) finals.emplace_back(k, v);
  }

  Frame& f = top;
  auto next = [&] { f.pc++; };
  switch (ins.op) {
    case Opcode::Nop:
      next();
      break;
    case Opcode::ALoad: {
      auto n = static_cast<std::size_t>(ins.number);
      if (n >= f.locals.size() || !f.locals[n])
        throw MachineFault("read of uninitialized local " + std::to_string(n) + " in " + f.ref.qualified() + " at " + std::to_string(f.pc));
      f.stack.push_back(*f.locals[n]);
      next();
      break;
    }
    case Opcode::AStore: {
      auto n = static_cast<std::size_t>(ins.number);
      Value v = pop(f);
      if (n >= f.locals.size()) f.locals.resize(n + 1);
      f.locals[n] = std::move(v);
      next();
      break;
    }
    case Opcode::IConst:
      f.stack.push_back(make_int(ins.number));
      next();
      break;
    case Opcode::Ldc:
      f.stack.push_back(ins.literal);
      next();
      break;
    case Opcode::Dup: {
      if (f.stack.empty()) pop(f);
      f.stack.push_back(f.stack.back());
      next();
      break;
    }
    case Opcode::Pop:
      pop(f);
      next();
      break;
    case Opcode::Swap: {
      Value a = pop(f), b = pop(f);
      f.stack.push_back(a);
      f.stack.push_back(b);
      next();
      break;
    }
    case Opcode::InstanceOf: {
      Value v = pop(f);
      f.stack.push_back(make_bool(is_loc(v) && c_.instance_of(std::get<Loc>(v), ins.owner)));
      next();
      break;
    }
    case Opcode::GetField: {
      Loc l = as_loc(pop(f), f, "getfield");
      const auto& fs = c_.object(l).fields;
      auto it = fs.find(ins.member);
      if (it == fs.end()) throw MachineFault("object @" + std::to_string(l.id) + " has no field " + ins.member);
      f.stack.push_back(it->second);
      next();
      break;
    }
    case Opcode::PutField: {
      Value v = pop(f);
      Loc l = as_loc(pop(f), f, "putfield");
      auto& fs = c_.object(l).fields;
      auto it = fs.find(ins.member);
      if (it == fs.end()) throw MachineFault("object @" + std::to_string(l.id) + " has no field " + ins.member);
      it->second = std::move(v);
      next();
      break;
    }
    case Opcode::GetStatic:
      f.stack.push_back(c_.statics.at({ins.owner, ins.member}));
      next();
      break;
    case Opcode::PutStatic:
      c_.statics.at({ins.owner, ins.member}) = pop(f);
      next();
      break;
    case Opcode::IAdd:
    case Opcode::ISub:
    case Opcode::IMul: {
      auto b = static_cast<std::uint64_t>(as_int(pop(f), f));
      auto a = static_cast<std::uint64_t>(as_int(pop(f), f));
      std::uint64_t r = ins.op == Opcode::IAdd ? a + b : ins.op == Opcode::ISub ? a - b : a * b;
      f.stack.push_back(make_int(static_cast<std::int64_t>(r)));
      next();
      break;
    }
    case Opcode::Goto:
      f.pc = static_cast<std::size_t>(ins.number);
      break;
    case Opcode::IfEq:
    case Opcode::IfNe: {
      bool zero = value_equal(pop(f), make_int(0));
      bool jump = ins.op == Opcode::IfEq ? zero : !zero;
      f.pc = jump ? static_cast<std::size_t>(ins.number) : f.pc + 1;
      break;
    }
    case Opcode::IfIcmpEq:
    case Opcode::IfIcmpNe:
    case Opcode::IfIcmpLt:
    case Opcode::IfIcmpGe: {
      Value v2 = pop(f), v1 = pop(f);
      bool jump;
      if (ins.op == Opcode::IfIcmpEq || ins.op == Opcode::IfIcmpNe) {
        bool same = value_equal(v1, v2);
        jump = ins.op == Opcode::IfIcmpEq ? same : !same;
      } else {
        bool less = is_int(v1) && is_int(v2) && std::get<std::int64_t>(v1) < std::get<std::int64_t>(v2);
        jump = ins.op == Opcode::IfIcmpLt ? less : !less;
      }
      f.pc = jump ? static_cast<std::size_t>(ins.number) : f.pc + 1;
      break;
    }
    case Opcode::InvokeVirtual:
    case Opcode::InvokeStatic:
      invoke(ins, info);
      break;
    case Opcode::Return: {
      std::optional<Value> r;
      if (f.method->returns_value) r = pop(f);
      c_.frames.pop_back();
      if (c_.frames.empty()) {
        status_ = RunStatus::Returned;
        result_ = r ? *r : Value{};
      } else {
        Frame& caller = c_.frames.back();
        if (r) caller.stack.push_back(*r);
        caller.pc++;
      }
      break;
    }
    case Opcode::AThrow: {
      Loc l = as_loc(pop(f), f, "athrow");
      throw_from_top(l);
      break;
    }
    case Opcode::Exit:
      exit_code_ = as_int(pop(f), f);
      status_ = RunStatus::Exited;
      break;
  }

  if (check_finals_) {
    bool put_final = ins.op == Opcode::PutStatic && p_.get_class(ins.owner).is_final;
    for (const auto& [k, v] : finals) {
      if (put_final && k.first == ins.owner && k.second == ins.member) continue;
      if (!value_equal(c_.statics.at(k), v))
        throw MachineFault("static field " + k.first + "." + k.second + " of a final class changed without putstatic");
    }
  }
  return info;
}

Execution run(const Program& p, ApiOracle& oracle, const RunOptions& opts) {
  Machine m(p, oracle);
  m.check_final_statics(opts.check_finals);
  Execution e;
  if (opts.keep_configs) e.configs.push_back(m.config());
  while (m.status() == RunStatus::Running) {
    if (e.steps >= opts.fuel) {
      e.status = RunStatus::FuelExhausted;
      break;
    }
    StepInfo info = m.step();
    ++e.steps;
    if (info.pre) e.api_actions.push_back(*info.pre);
    if (info.post) e.api_actions.push_back(*info.post);
    e.records.push_back(std::move(info));
    if (opts.keep_configs) e.configs.push_back(m.config());
  }
  if (e.status != RunStatus::FuelExhausted) e.status = m.status();
  e.result = m.result();
  e.exit_code = m.exit_code();
  return e;
}

std::vector<SecurityAction> srt(const Execution& e, const Contract& k) {
  std::vector<SecurityAction> out;
  for (const auto& a : e.api_actions)
    if (k.mentions(a.method.owner, a.method.name)) out.push_back(a);
  return out;
}

}  // namespace irm

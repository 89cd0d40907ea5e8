#include "irmpcc/bytecode.hpp"

#include <algorithm>
#include <array>
#include <set>
#include <utility>

#include "irmpcc/error.hpp"

namespace irm {

namespace {

constexpr std::array<std::pair<Opcode, std::string_view>, 28> kMnemonics{{
    {Opcode::InstanceOf, "instanceof"},
    {Opcode::ALoad, "aload"},
    {Opcode::AStore, "astore"},
    {Opcode::AThrow, "athrow"},
    {Opcode::Dup, "dup"},
    {Opcode::GetField, "getfield"},
    {Opcode::GetStatic, "getstatic"},
    {Opcode::PutStatic, "putstatic"},
    {Opcode::Goto, "goto"},
    {Opcode::IConst, "iconst"},
    {Opcode::IfIcmpEq, "if_icmpeq"},
    {Opcode::IfIcmpNe, "if_icmpne"},
    {Opcode::IfIcmpLt, "if_icmplt"},
    {Opcode::IfIcmpGe, "if_icmpge"},
    {Opcode::IfEq, "ifeq"},
    {Opcode::IfNe, "ifne"},
    {Opcode::InvokeVirtual, "invokevirtual"},
    {Opcode::InvokeStatic, "invokestatic"},
    {Opcode::Return, "return"},
    {Opcode::Ldc, "ldc"},
    {Opcode::Exit, "exit"},
    {Opcode::IAdd, "iadd"},
    {Opcode::ISub, "isub"},
    {Opcode::IMul, "imul"},
    {Opcode::Nop, "nop"},
    {Opcode::Pop, "pop"},
    {Opcode::Swap, "swap"},
    {Opcode::PutField, "putfield"},
}};

}  // namespace

std::string_view mnemonic(Opcode op) {
  for (const auto& [o, name] : kMnemonics)
    if (o == op) return name;
  return "?";
}

std::optional<Opcode> opcode_from_mnemonic(std::string_view text) {
  for (const auto& [o, name] : kMnemonics)
    if (name == text) return o;
  return std::nullopt;
}

bool Instruction::is_branch() const {
  switch (op) {
    case Opcode::Goto:
    case Opcode::IfIcmpEq:
    case Opcode::IfIcmpNe:
    case Opcode::IfIcmpLt:
    case Opcode::IfIcmpGe:
    case Opcode::IfEq:
    case Opcode::IfNe:
      return true;
    default:
      return false;
  }
}

bool Instruction::falls_through() const {
  switch (op) {
    case Opcode::Goto:
    case Opcode::AThrow:
    case Opcode::Return:
    case Opcode::Exit:
      return false;
    default:
      return true;
  }
}

bool operator==(const Instruction& a, const Instruction& b) {
  return a.op == b.op && a.number == b.number && a.owner == b.owner && a.member == b.member &&
         value_equal(a.literal, b.literal);
}

std::string to_string(const Instruction& ins) {
  std::string out(mnemonic(ins.op));
  switch (ins.op) {
    case Opcode::InstanceOf:
      return out + " " + ins.owner;
    case Opcode::GetField:
    case Opcode::PutField:
      return out + " " + ins.member;
    case Opcode::GetStatic:
    case Opcode::PutStatic:
    case Opcode::InvokeVirtual:
    case Opcode::InvokeStatic:
      return out + " " + ins.owner + "." + ins.member;
    case Opcode::Ldc:
      return out + " " + to_string(ins.literal);
    case Opcode::Exit:
      return "invokestatic System.exit";
    default:
      break;
  }
  if (ins.is_branch() || ins.op == Opcode::ALoad || ins.op == Opcode::AStore ||
      ins.op == Opcode::IConst)
    out += " " + std::to_string(ins.number);
  return out;
}

const MethodDef* ClassDecl::find_method(std::string_view m) const {
  for (const auto& def : methods)
    if (def.name == m) return &def;
  return nullptr;
}

MethodDef* ClassDecl::find_method(std::string_view m) {
  for (auto& def : methods)
    if (def.name == m) return &def;
  return nullptr;
}

const FieldDecl* ClassDecl::find_field(std::string_view f) const {
  for (const auto& fd : fields)
    if (fd.name == f) return &fd;
  return nullptr;
}

const ClassDecl* Program::find_class(std::string_view name) const {
  for (const auto& c : classes_)
    if (c.name == name) return &c;
  return nullptr;
}

const ClassDecl& Program::get_class(std::string_view name) const {
  if (const auto* c = find_class(name)) return *c;
  throw ValidationError("unknown class " + std::string(name));
}

ClassDecl& Program::add_class(ClassDecl c) {
  if (find_class(c.name)) throw ValidationError("duplicate class " + c.name);
  classes_.push_back(std::move(c));
  return classes_.back();
}

bool Program::subclass_of(std::string_view sub, std::string_view super) const {
  get_class(super);
  std::size_t guard = 0;
  for (const ClassDecl* c = &get_class(sub); c != nullptr;) {
    if (c->name == super) return true;
    if (!c->superclass || ++guard > classes_.size()) return false;
    c = &get_class(*c->superclass);
  }
  return false;
}

std::size_t Program::depth(std::string_view cls) const {
  std::size_t d = 0;
  for (const ClassDecl* c = &get_class(cls); c->superclass; c = &get_class(*c->superclass)) {
    if (++d > classes_.size()) throw ValidationError("superclass cycle through " + c->name);
  }
  return d;
}

std::string Program::resolve_definition(std::string_view cls, std::string_view m) const {
  auto chain = defs(cls, m);
  if (chain.empty())
    throw ValidationError("no definition of " + std::string(m) + " above " + std::string(cls));
  return chain.front();
}

std::vector<std::string> Program::defs(std::string_view cls, std::string_view m) const {
  std::vector<std::string> out;
  std::size_t guard = 0;
  for (const ClassDecl* c = &get_class(cls); c != nullptr;) {
    if (c->find_method(m)) out.push_back(c->name);
    if (!c->superclass || ++guard > classes_.size()) break;
    c = &get_class(*c->superclass);
  }
  return out;
}

std::vector<std::string> Program::dispatch_candidates(std::string_view cls,
                                                      std::string_view m) const {
  std::vector<std::string> out;
  for (const auto& c : classes_) {
    if (!c.find_method(m)) continue;
    if (subclass_of(c.name, cls) || subclass_of(cls, c.name)) out.push_back(c.name);
  }
  std::sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    auto da = depth(a), db = depth(b);
    return da != db ? da > db : a < b;
  });
  return out;
}

const MethodDef& Program::method(const MethodRef& ref) const {
  const auto& c = get_class(ref.owner);
  if (const auto* m = c.find_method(ref.name)) return *m;
  throw ValidationError("unknown method " + ref.qualified());
}

const MethodDef& Program::static_target(const Instruction& invoke) const {
  return method(MethodRef{resolve_definition(invoke.owner, invoke.member), invoke.member});
}

bool Program::is_api_invoke(const Instruction& ins) const {
  return ins.is_invoke() && static_target(ins).is_api;
}

void recompute_num_locals(MethodDef& m) {
  std::size_t n = m.arity + 1;
  for (const auto& ins : m.instructions)
    if (ins.op == Opcode::ALoad || ins.op == Opcode::AStore)
      n = std::max(n, static_cast<std::size_t>(ins.number) + 1);
  m.num_locals = n;
}

namespace {

void ensure_builtin(std::vector<ClassDecl>& classes, std::string_view name,
                    std::optional<std::string> super) {
  for (const auto& c : classes)
    if (c.name == name) return;
  ClassDecl c;
  c.name = std::string(name);
  c.superclass = std::move(super);
  c.is_api = true;
  c.builtin = true;
  classes.insert(classes.begin(), std::move(c));
}

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

}  // namespace

void Program::finalize() {
  ensure_builtin(classes_, kThrowable, std::string(kObject));
  ensure_builtin(classes_, kObject, std::nullopt);

  std::set<std::string> names;
  for (const auto& c : classes_) {
    if (!names.insert(c.name).second) fail(c.name, "duplicate class");
    if (c.superclass && !find_class(*c.superclass))
      fail(c.name, "unknown superclass " + *c.superclass);
  }
  for (const auto& c : classes_) depth(c.name);  // rejects cycles
  for (const auto& c : classes_)
    if (c.superclass && get_class(*c.superclass).is_final)
      fail(c.name, "extends final class " + *c.superclass);

  std::optional<MethodRef> main;
  for (auto& c : classes_) {
    std::set<std::string> members;
    for (const auto& f : c.fields)
      if (!members.insert("f:" + f.name).second) fail(c.name, "duplicate field " + f.name);
    for (auto& m : c.methods) {
      if (!members.insert("m:" + m.name).second) fail(c.name, "duplicate method " + m.name);
      if (c.is_api != m.is_api) fail(c.name + "." + m.name, "api/program method mismatch");
      if (!m.is_api) recompute_num_locals(m);
      if (!m.is_api && !main && m.name == "main") main = MethodRef{c.name, m.name};
    }
  }
  if (!main) throw ValidationError("program has no main method");
  main_ = *main;
  if (method(main_).arity != 0) fail(main_.qualified(), "main must take no arguments");

  for (const auto& c : classes_) {
    if (c.is_api) continue;
    for (const auto& m : c.methods) {
      // Calls into API classes must stay atomic.
      if (c.superclass)
        for (const auto& d : defs(*c.superclass, m.name))
          if (get_class(d).is_api) fail(c.name + "." + m.name, "overrides API method " + d);
    }
  }

  for (const auto& c : classes_) {
    for (const auto& m : c.methods) {
      if (m.is_api) continue;
      const std::string where = c.name + "." + m.name;
      const auto size = static_cast<std::int64_t>(m.instructions.size());
      if (size == 0) fail(where, "empty method body");
      if (m.instructions.back().falls_through()) fail(where, "control falls off the end");
      for (std::int64_t pc = 0; pc < size; ++pc) {
        const auto& ins = m.instructions[static_cast<std::size_t>(pc)];
        const std::string at = where + ":" + std::to_string(pc);
        if (ins.is_branch() && (ins.number < 0 || ins.number >= size))
          fail(at, "dangling branch target " + std::to_string(ins.number));
        if ((ins.op == Opcode::ALoad || ins.op == Opcode::AStore) && ins.number < 0)
          fail(at, "negative local index");
        switch (ins.op) {
          case Opcode::InstanceOf:
            if (!find_class(ins.owner)) fail(at, "unknown class " + ins.owner);
            break;
          case Opcode::GetStatic:
          case Opcode::PutStatic: {
            const auto* owner = find_class(ins.owner);
            const auto* f = owner ? owner->find_field(ins.member) : nullptr;
            if (!f || !f->is_static)
              fail(at, "unresolved static field " + ins.owner + "." + ins.member);
            break;
          }
          case Opcode::GetField:
          case Opcode::PutField: {
            bool found = false;
            for (const auto& k : classes_)
              if (const auto* f = k.find_field(ins.member); f && !f->is_static) found = true;
            if (!found) fail(at, "unresolved field " + ins.member);
            break;
          }
          case Opcode::InvokeStatic:
          case Opcode::InvokeVirtual:
            if (!find_class(ins.owner)) fail(at, "unresolved method " + ins.owner + "." + ins.member);
            if (defs(ins.owner, ins.member).empty())
              fail(at, "unresolved method " + ins.owner + "." + ins.member);
            break;
          default:
            break;
        }
      }
      for (const auto& h : m.handlers) {
        if (!(0 <= h.begin && h.begin < h.end && h.end <= size))
          fail(where, "handler range out of bounds");
        if (h.target < 0 || h.target >= size) fail(where, "handler target out of bounds");
        if (!find_class(h.catch_class) || !subclass_of(h.catch_class, kThrowable))
          fail(where, "handler catches non-Throwable " + h.catch_class);
      }
    }
  }
}

}  // namespace irm

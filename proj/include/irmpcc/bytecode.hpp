#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irmpcc/value.hpp"

namespace irm {

enum class Opcode : std::uint8_t {
  InstanceOf,
  ALoad,
  AStore,
  AThrow,
  Dup,
  GetField,
  GetStatic,
  PutStatic,
  Goto,
  IConst,
  IfIcmpEq,
  IfIcmpNe,
  IfIcmpLt,
  IfIcmpGe,
  IfEq,
  IfNe,
  InvokeVirtual,
  InvokeStatic,
  Return,
  Ldc,
  Exit,
  IAdd,
  ISub,
  IMul,
  // No weakest-precondition row; legal only where the invariant-preservation
  // shortcut applies.
  Nop,
  Pop,
  Swap,
  PutField,
};

std::string_view mnemonic(Opcode op);
std::optional<Opcode> opcode_from_mnemonic(std::string_view text);

/// One instruction. Which operand fields are meaningful depends on the opcode:
/// `number` carries labels, local indices and iconst values; `owner`/`member`
/// carry class and field/method names; `literal` carries ldc operands.
struct Instruction {
  Opcode op = Opcode::Nop;
  std::int64_t number = 0;
  std::string owner;
  std::string member;
  Value literal;

  static Instruction make(Opcode op) { return Instruction{op, 0, {}, {}, {}}; }
  static Instruction with_number(Opcode op, std::int64_t n) { return Instruction{op, n, {}, {}, {}}; }
  static Instruction with_ref(Opcode op, std::string owner, std::string member = {}) {
    return Instruction{op, 0, std::move(owner), std::move(member), {}};
  }
  static Instruction ldc(Value v) { return Instruction{Opcode::Ldc, 0, {}, {}, std::move(v)}; }

  bool is_branch() const;   ///< Has a label operand.
  bool is_invoke() const { return op == Opcode::InvokeVirtual || op == Opcode::InvokeStatic; }
  bool falls_through() const;

  friend bool operator==(const Instruction& a, const Instruction& b);
};

/// Renders the operand part and mnemonic, e.g. `getstatic SS.haveRead`.
std::string to_string(const Instruction& ins);

struct Handler {
  std::int64_t begin = 0;  ///< inclusive
  std::int64_t end = 0;    ///< exclusive
  std::int64_t target = 0;
  std::string catch_class;  ///< "Throwable" for catch-all (written `any`)
  friend bool operator==(const Handler&, const Handler&) = default;
};

inline constexpr std::string_view kThrowable = "Throwable";
inline constexpr std::string_view kObject = "Object";

struct MethodDef {
  std::string name;
  std::size_t arity = 0;
  bool returns_value = false;
  /// Declared result type for API methods: "int", "boolean", "String" or a
  /// class name. Program methods leave it as "int".
  std::string return_type = "int";
  bool is_api = false;
  std::vector<Instruction> instructions;
  std::vector<Handler> handlers;
  /// Derived from the body: one past the highest local index in use, at least
  /// arity + 1 so a receiver fits.
  std::size_t num_locals = 0;

  friend bool operator==(const MethodDef&, const MethodDef&) = default;
};

struct FieldDecl {
  std::string name;
  bool is_static = false;
  Value initial = make_int(0);  ///< static fields only

  friend bool operator==(const FieldDecl& a, const FieldDecl& b) {
    return a.name == b.name && a.is_static == b.is_static && value_equal(a.initial, b.initial);
  }
};

struct ClassDecl {
  std::string name;
  std::optional<std::string> superclass;
  bool is_final = false;
  bool is_api = false;
  bool builtin = false;  ///< Object/Throwable supplied implicitly; never printed.
  std::vector<FieldDecl> fields;
  std::vector<MethodDef> methods;

  const MethodDef* find_method(std::string_view m) const;
  MethodDef* find_method(std::string_view m);
  const FieldDecl* find_field(std::string_view f) const;

  friend bool operator==(const ClassDecl&, const ClassDecl&) = default;
};

struct MethodRef {
  std::string owner;
  std::string name;
  std::string qualified() const { return owner + "." + name; }
  friend auto operator<=>(const MethodRef&, const MethodRef&) = default;
};

/// A whole program: classes plus the entry point. Construct through
/// parse_program or finalize() so derived data stays consistent.
class Program {
 public:
  Program() = default;

  /// Adds Object/Throwable when absent, recomputes num_locals, picks main and
  /// validates every structural invariant. Throws ValidationError.
  void finalize();

  const std::vector<ClassDecl>& classes() const { return classes_; }
  std::vector<ClassDecl>& mutable_classes() { return classes_; }
  const ClassDecl* find_class(std::string_view name) const;
  const ClassDecl& get_class(std::string_view name) const;  ///< throws on unknown
  ClassDecl& add_class(ClassDecl c);

  const MethodRef& main() const { return main_; }

  bool subclass_of(std::string_view sub, std::string_view super) const;
  std::size_t depth(std::string_view cls) const;

  /// The unique class on the superclass chain of `cls` that defines `m`.
  std::string resolve_definition(std::string_view cls, std::string_view m) const;
  /// All classes c' with cls <: c' defining m, most-derived first.
  std::vector<std::string> defs(std::string_view cls, std::string_view m) const;
  /// Every class related to `cls` (sub- or superclass) defining `m`, ordered
  /// so that an instanceof cascade picks the dynamic definition: deeper first,
  /// ties by name.
  std::vector<std::string> dispatch_candidates(std::string_view cls, std::string_view m) const;

  const MethodDef& method(const MethodRef& ref) const;
  /// Resolved target of an invoke instruction when dispatched on its static class.
  const MethodDef& static_target(const Instruction& invoke) const;
  bool is_api_invoke(const Instruction& ins) const;

  friend bool operator==(const Program&, const Program&) = default;

 private:
  std::vector<ClassDecl> classes_;
  MethodRef main_;
};

void recompute_num_locals(MethodDef& m);

}  // namespace irm

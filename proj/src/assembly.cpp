#include "irmpcc/assembly.hpp"

#include <sstream>

#include "irmpcc/error.hpp"
#include "lexer.hpp"

namespace irm {

using detail::TokenStream;
using detail::TokKind;

namespace {

std::int64_t parse_int(TokenStream& ts) {
  const auto& t = ts.expect(TokKind::Int, "integer");
  try {
    return std::stoll(t.text);
  } catch (const std::exception&) {
    throw ParseError("integer out of range", t.line, t.column);
  }
}

Value parse_literal(TokenStream& ts) {
  const auto& t = ts.peek();
  if (t.kind == TokKind::Int) return make_int(parse_int(ts));
  if (t.kind == TokKind::String || t.text == "null" || t.text == "true" || t.text == "false") {
    ts.next();
    return parse_value(t.text);
  }
  ts.error("expected literal");
}

std::pair<std::string, std::string> split_member(const detail::Token& t) {
  auto dot = t.text.rfind('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == t.text.size())
    throw ParseError("expected Class.member", t.line, t.column);
  return {t.text.substr(0, dot), t.text.substr(dot + 1)};
}

void parse_return_kind(TokenStream& ts, MethodDef& m) {
  const auto& t = ts.expect(TokKind::Ident, "return kind V or R");
  if (t.text == "V") {
    m.returns_value = false;
  } else if (t.text == "R") {
    m.returns_value = true;
    if (ts.accept(":")) m.return_type = ts.expect(TokKind::Ident, "return type").text;
  } else {
    throw ParseError("expected return kind V or R", t.line, t.column);
  }
}

Instruction parse_instruction(TokenStream& ts) {
  const auto& head = ts.expect(TokKind::Ident, "opcode");
  auto op = opcode_from_mnemonic(head.text);
  if (!op) throw ParseError("unknown opcode " + head.text, head.line, head.column);
  switch (*op) {
    case Opcode::InstanceOf:
      return Instruction::with_ref(*op, ts.expect(TokKind::Ident, "class name").text);
    case Opcode::GetField:
    case Opcode::PutField:
      return Instruction::with_ref(*op, {}, ts.expect(TokKind::Ident, "field name").text);
    case Opcode::GetStatic:
    case Opcode::PutStatic:
    case Opcode::InvokeVirtual: {
      auto [owner, member] = split_member(ts.expect(TokKind::Ident, "Class.member"));
      return Instruction::with_ref(*op, owner, member);
    }
    case Opcode::InvokeStatic: {
      auto [owner, member] = split_member(ts.expect(TokKind::Ident, "Class.member"));
      if (owner == "System" && member == "exit") return Instruction::make(Opcode::Exit);
      return Instruction::with_ref(*op, owner, member);
    }
    case Opcode::Ldc:
      return Instruction::ldc(parse_literal(ts));
    case Opcode::ALoad:
    case Opcode::AStore:
    case Opcode::IConst:
    case Opcode::Goto:
    case Opcode::IfIcmpEq:
    case Opcode::IfIcmpNe:
    case Opcode::IfIcmpLt:
    case Opcode::IfIcmpGe:
    case Opcode::IfEq:
    case Opcode::IfNe:
      return Instruction::with_number(*op, parse_int(ts));
    default:
      return Instruction::make(*op);
  }
}

void parse_body(TokenStream& ts, MethodDef& m) {
  ts.expect("{");
  while (!ts.accept("}")) {
    const auto& lbl = ts.peek();
    auto label = parse_int(ts);
    if (label != static_cast<std::int64_t>(m.instructions.size()))
      throw ParseError("labels must be consecutive from 0; expected " +
                           std::to_string(m.instructions.size()),
                       lbl.line, lbl.column);
    ts.expect(":");
    m.instructions.push_back(parse_instruction(ts));
  }
  if (ts.accept("handlers")) {
    ts.expect("{");
    while (!ts.accept("}")) {
      Handler h;
      h.begin = parse_int(ts);
      h.end = parse_int(ts);
      h.target = parse_int(ts);
      auto cls = ts.expect(TokKind::Ident, "catch class").text;
      h.catch_class = cls == "any" ? std::string(kThrowable) : cls;
      m.handlers.push_back(std::move(h));
    }
  }
}

ClassDecl parse_class(TokenStream& ts) {
  ts.expect("class");
  ClassDecl c;
  c.name = ts.expect(TokKind::Ident, "class name").text;
  if (ts.accept("extends")) c.superclass = ts.expect(TokKind::Ident, "superclass name").text;
  for (;;) {
    if (ts.accept("final")) c.is_final = true;
    else if (ts.accept("api")) c.is_api = true;
    else break;
  }
  ts.expect("{");
  while (!ts.accept("}")) {
    if (ts.is("static") || ts.is("field")) {
      FieldDecl f;
      f.is_static = ts.accept("static");
      ts.expect("field");
      f.name = ts.expect(TokKind::Ident, "field name").text;
      if (ts.accept("=")) {
        if (!f.is_static) ts.error("only static fields take initializers");
        f.initial = parse_literal(ts);
      }
      c.fields.push_back(std::move(f));
    } else if (ts.accept("method")) {
      MethodDef m;
      m.name = ts.expect(TokKind::Ident, "method name").text;
      ts.expect("(");
      m.arity = static_cast<std::size_t>(parse_int(ts));
      ts.expect(")");
      parse_return_kind(ts, m);
      parse_body(ts, m);
      c.methods.push_back(std::move(m));
    } else if (ts.accept("apimethod")) {
      MethodDef m;
      m.is_api = true;
      m.name = ts.expect(TokKind::Ident, "method name").text;
      ts.expect("(");
      m.arity = static_cast<std::size_t>(parse_int(ts));
      ts.expect(")");
      parse_return_kind(ts, m);
      c.methods.push_back(std::move(m));
    } else {
      ts.error("expected class member");
    }
  }
  return c;
}

}  // namespace

Program parse_program(std::string_view text) {
  TokenStream ts(detail::tokenize(text, {}));
  Program p;
  if (ts.at_end()) ts.error("expected at least one class");
  while (!ts.at_end()) p.add_class(parse_class(ts));
  p.finalize();
  return p;
}

std::string print_program(const Program& program) {
  std::ostringstream out;
  bool first = true;
  for (const auto& c : program.classes()) {
    if (c.builtin) continue;
    if (!first) out << "\n";
    first = false;
    out << "class " << c.name;
    if (c.superclass && !(*c.superclass == kObject)) out << " extends " << *c.superclass;
    if (c.is_final) out << " final";
    if (c.is_api) out << " api";
    out << " {\n";
    for (const auto& f : c.fields) {
      out << "  " << (f.is_static ? "static " : "") << "field " << f.name;
      if (f.is_static && !value_equal(f.initial, make_int(0)))
        out << " = " << to_string(f.initial);
      out << "\n";
    }
    for (const auto& m : c.methods) {
      out << "  " << (m.is_api ? "apimethod " : "method ") << m.name << "(" << m.arity << ") ";
      out << (m.returns_value ? "R" : "V");
      if (m.returns_value && m.return_type != "int") out << ":" << m.return_type;
      if (m.is_api) {
        out << "\n";
        continue;
      }
      out << " {\n";
      for (std::size_t i = 0; i < m.instructions.size(); ++i)
        out << "    " << i << ": " << to_string(m.instructions[i]) << "\n";
      out << "  }";
      if (!m.handlers.empty()) {
        out << " handlers {\n";
        for (const auto& h : m.handlers)
          out << "    " << h.begin << " " << h.end << " " << h.target << " "
              << (h.catch_class == kThrowable ? std::string("any") : h.catch_class) << "\n";
        out << "  }";
      }
      out << "\n";
    }
    out << "}\n";
  }
  return out.str();
}

}  // namespace irm

#include "irmpcc/conspec.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "irmpcc/error.hpp"
#include "lexer.hpp"

namespace irm {

using detail::Token;
using detail::TokenStream;
using detail::TokKind;

std::string_view modifier_name(Modifier m) {
  switch (m) {
    case Modifier::Before:
      return "BEFORE";
    case Modifier::After:
      return "AFTER";
    case Modifier::Exceptional:
      return "EXCEPTIONAL";
  }
  return "?";
}

const EventClause* Contract::find(Modifier m, std::string_view owner, std::string_view method) const {
  for (const auto& c : clauses)
    if (c.modifier == m && c.owner == owner && c.method == method) return &c;
  return nullptr;
}

std::optional<std::size_t> Contract::state_index(std::string_view name) const {
  for (std::size_t i = 0; i < state.size(); ++i)
    if (state[i].name == name) return i;
  return std::nullopt;
}

std::vector<MethodRef> Contract::methods() const {
  std::vector<MethodRef> out;
  for (const auto& c : clauses) {
    MethodRef r{c.owner, c.method};
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
  return out;
}

bool Contract::mentions(std::string_view owner, std::string_view method) const {
  for (const auto& c : clauses)
    if (c.owner == owner && c.method == method) return true;
  return false;
}

namespace {

CExprPtr mk(CKind k, std::vector<CExprPtr> kids, bool boolean) {
  auto e = std::make_shared<CExpr>();
  e->kind = k;
  e->kids = std::move(kids);
  e->boolean = boolean;
  return e;
}

bool is_modifier(const Token& t) {
  return t.kind == TokKind::Ident &&
         (t.text == "BEFORE" || t.text == "AFTER" || t.text == "EXCEPTIONAL");
}

class ContractParser {
 public:
  explicit ContractParser(std::string_view text) : ts_(detail::tokenize(text, {0, true, false})) {}

  Contract parse() {
    if (ts_.accept("SCOPE")) {
      const auto& s = ts_.expect(TokKind::Ident, "scope");
      if (s.text != "Session")
        throw ValidationError(at(s) + "unsupported scope " + s.text + " (only Session)");
    }
    while (ts_.is("SECURITY")) declaration();
    while (!ts_.at_end()) {
      if (!is_modifier(ts_.peek())) ts_.error("expected BEFORE, AFTER or EXCEPTIONAL");
      clause();
    }
    return std::move(k_);
  }

 private:
  static std::string at(const Token& t) { return "line " + std::to_string(t.line) + ": "; }

  Value literal() {
    const auto& t = ts_.peek();
    if (t.kind == TokKind::String || t.text == "true" || t.text == "false" || t.text == "null") {
      ts_.next();
      return parse_value(t.text);
    }
    bool neg = ts_.accept("-");
    const auto& n = ts_.expect(TokKind::Int, "literal");
    try {
      std::int64_t v = std::stoll(n.text);
      return make_int(neg ? -v : v);
    } catch (const std::exception&) {
      throw ParseError("integer out of range", n.line, n.column);
    }
  }

  void declaration() {
    const auto& head = ts_.expect("SECURITY");
    ts_.expect("STATE");
    const auto& ty = ts_.expect(TokKind::Ident, "state type");
    StateDecl d;
    if (ty.text == "boolean") d.type = StateType::Boolean;
    else if (ty.text == "int") d.type = StateType::Int;
    else if (ty.text == "String" || ty.text == "string") d.type = StateType::String;
    else throw ParseError("unknown state type " + ty.text, ty.line, ty.column);
    d.name = ts_.expect(TokKind::Ident, "state variable name").text;
    ts_.expect("=");
    d.initial = literal();
    ts_.expect(";");
    Value def = d.type == StateType::String ? make_str("") : make_int(0);
    if (!value_equal(d.initial, def))
      throw ValidationError(at(head) + "security state " + d.name +
                            " must be initialized to its default value");
    if (k_.state_index(d.name))
      throw ValidationError(at(head) + "duplicate security state " + d.name);
    k_.state.push_back(std::move(d));
  }

  std::string qualified_name() {
    std::string name = ts_.expect(TokKind::Ident, "qualified method name").text;
    while (ts_.is(".")) {
      ts_.next();
      name += "." + ts_.expect(TokKind::Ident, "name").text;
    }
    return name;
  }

  void clause() {
    const auto& head = ts_.next();
    EventClause c;
    c.line = head.line;
    c.modifier = head.text == "BEFORE"  ? Modifier::Before
                 : head.text == "AFTER" ? Modifier::After
                                        : Modifier::Exceptional;
    if (ts_.peek().kind == TokKind::Ident && ts_.peek(1).text == "=") {
      if (c.modifier != Modifier::After)
        throw ValidationError(at(head) + "only AFTER clauses bind a return value");
      c.ret = ts_.next().text;
      ts_.next();
    }
    const auto& qtok = ts_.peek();
    auto q = qualified_name();
    auto dot = q.rfind('.');
    if (dot == std::string::npos) throw ParseError("expected Class.method", qtok.line, qtok.column);
    c.owner = q.substr(0, dot);
    c.method = q.substr(dot + 1);
    ts_.expect("(");
    if (!ts_.is(")")) {
      do {
        ClauseParam p;
        p.type = ts_.expect(TokKind::Ident, "parameter type").text;
        p.name = ts_.expect(TokKind::Ident, "parameter name").text;
        c.params.push_back(std::move(p));
      } while (ts_.accept(","));
    }
    ts_.expect(")");
    ts_.expect("PERFORM");
    current_ = &c;
    while (!ts_.at_end() && !is_modifier(ts_.peek())) {
      if (!c.commands.empty()) ts_.accept("|");
      c.commands.push_back(command());
    }
    current_ = nullptr;
    validate(c, head);
    k_.clauses.push_back(std::move(c));
  }

  void validate(const EventClause& c, const Token& head) {
    std::set<std::string> names;
    for (const auto& p : c.params) {
      if (!names.insert(p.name).second)
        throw ValidationError(at(head) + "duplicate parameter " + p.name);
      if (k_.state_index(p.name))
        throw ValidationError(at(head) + "parameter " + p.name + " shadows a security state variable");
    }
    if (c.ret && (names.count(*c.ret) || k_.state_index(*c.ret)))
      throw ValidationError(at(head) + "return binding " + *c.ret + " clashes with another name");
    if (k_.find(c.modifier, c.owner, c.method))
      throw ValidationError(at(head) + "duplicate " + std::string(modifier_name(c.modifier)) +
                            " clause for " + c.qualified());
    for (const auto& other : k_.clauses)
      if (other.owner == c.owner && other.method == c.method && other.params.size() != c.params.size())
        throw ValidationError(at(head) + "inconsistent arity for " + c.qualified());
    if (c.modifier != Modifier::Before && !c.commands.empty()) {
      const auto& g = c.commands.back().guard;
      if (!(g->kind == CKind::Lit && value_equal(g->lit, make_int(1)) && g->boolean))
        throw ValidationError(at(head) + std::string(modifier_name(c.modifier)) + " clause for " +
                              c.qualified() + " is not exhaustive: last guard must be true");
    }
  }

  GuardedCommand command() {
    GuardedCommand gc;
    const auto& gt = ts_.peek();
    gc.guard = expr();
    if (!gc.guard->boolean) throw ParseError("guard is not a condition", gt.line, gt.column);
    ts_.expect("->");
    ts_.expect("{");
    while (!ts_.accept("}")) {
      const auto& v = ts_.expect(TokKind::Ident, "state variable");
      auto idx = k_.state_index(v.text);
      if (!idx) throw ValidationError(at(v) + "assignment to undeclared state variable " + v.text);
      ts_.expect("=");
      Assignment a{v.text, *idx, expr()};
      ts_.expect(";");
      gc.updates.push_back(std::move(a));
    }
    return gc;
  }

  // expr := or
  CExprPtr expr() { return disjunction(); }

  CExprPtr disjunction() {
    auto l = conjunction();
    while (ts_.is("||")) {
      const auto& op = ts_.next();
      auto r = conjunction();
      need_bool(l, op);
      need_bool(r, op);
      l = mk(CKind::Or, {l, r}, true);
    }
    return l;
  }

  CExprPtr conjunction() {
    auto l = negation();
    while (ts_.is("&&")) {
      const auto& op = ts_.next();
      auto r = negation();
      need_bool(l, op);
      need_bool(r, op);
      l = mk(CKind::And, {l, r}, true);
    }
    return l;
  }

  CExprPtr negation() {
    if (ts_.is("!")) {
      const auto& op = ts_.next();
      auto e = negation();
      need_bool(e, op);
      return mk(CKind::Not, {e}, true);
    }
    return comparison();
  }

  CExprPtr comparison() {
    auto l = additive();
    const auto& t = ts_.peek();
    if (t.kind != TokKind::Punct) return l;
    std::string op = t.text;
    if (op != "==" && op != "=" && op != "!=" && op != "<" && op != "<=" && op != ">" && op != ">=")
      return l;
    ts_.next();
    auto r = additive();
    if (op == "==" || op == "=") return mk(CKind::Eq, {l, r}, true);
    if (op == "!=") return mk(CKind::Ne, {l, r}, true);
    if (op == "<") return mk(CKind::Lt, {l, r}, true);
    if (op == "<=") return mk(CKind::Le, {l, r}, true);
    if (op == ">") return mk(CKind::Lt, {r, l}, true);
    return mk(CKind::Le, {r, l}, true);
  }

  CExprPtr additive() {
    auto l = multiplicative();
    while (ts_.is("+") || ts_.is("-")) {
      bool add = ts_.next().text == "+";
      auto r = multiplicative();
      l = mk(add ? CKind::Add : CKind::Sub, {l, r}, false);
    }
    return l;
  }

  CExprPtr multiplicative() {
    auto l = primary();
    while (ts_.accept("*")) l = mk(CKind::Mul, {l, primary()}, false);
    return l;
  }

  CExprPtr primary() {
    const auto& t = ts_.peek();
    if (ts_.accept("(")) {
      auto e = expr();
      ts_.expect(")");
      return e;
    }
    if (t.kind == TokKind::Int || t.kind == TokKind::String || ts_.is("-") || t.text == "null" ||
        t.text == "true" || t.text == "false") {
      bool boolean = t.text == "true" || t.text == "false";
      auto e = mk(CKind::Lit, {}, boolean);
      std::const_pointer_cast<CExpr>(e)->lit = literal();
      return e;
    }
    const auto& id = ts_.expect(TokKind::Ident, "expression");
    auto e = std::make_shared<CExpr>();
    e->name = id.text;
    if (auto idx = k_.state_index(id.text)) {
      e->kind = CKind::StateVar;
      e->index = *idx;
      e->boolean = k_.state[*idx].type == StateType::Boolean;
      return e;
    }
    for (std::size_t i = 0; i < current_->params.size(); ++i) {
      if (current_->params[i].name == id.text) {
        e->kind = CKind::Param;
        e->index = i;
        e->boolean = current_->params[i].type == "boolean";
        return e;
      }
    }
    if (current_->ret && *current_->ret == id.text) {
      e->kind = CKind::Ret;
      e->boolean = true;
      return e;
    }
    throw ValidationError(at(id) + "undeclared name " + id.text + " in " + current_->qualified());
  }

  void need_bool(const CExprPtr& e, const Token& op) {
    if (!e->boolean) throw ParseError("operand of " + op.text + " is not a condition", op.line, op.column);
  }

  TokenStream ts_;
  Contract k_;
  const EventClause* current_ = nullptr;
};

void print_expr(const CExprPtr& e, std::string& out) {
  auto binary = [&](const char* op) {
    out += '(';
    print_expr(e->kids[0], out);
    out += ' ';
    out += op;
    out += ' ';
    print_expr(e->kids[1], out);
    out += ')';
  };
  switch (e->kind) {
    case CKind::Lit:
      if (e->boolean) out += value_equal(e->lit, make_int(1)) ? "true" : "false";
      else out += to_string(e->lit);
      return;
    case CKind::StateVar:
    case CKind::Param:
    case CKind::Ret:
      out += e->name;
      return;
    case CKind::Not:
      out += "!";
      print_expr(e->kids[0], out);
      return;
    case CKind::And:
      return binary("&&");
    case CKind::Or:
      return binary("||");
    case CKind::Eq:
      return binary("==");
    case CKind::Ne:
      return binary("!=");
    case CKind::Lt:
      return binary("<");
    case CKind::Le:
      return binary("<=");
    case CKind::Add:
      return binary("+");
    case CKind::Sub:
      return binary("-");
    case CKind::Mul:
      return binary("*");
  }
}

}  // namespace

Contract parse_contract(std::string_view text) { return ContractParser(text).parse(); }

std::string to_string(const CExprPtr& e) {
  std::string out;
  print_expr(e, out);
  return out;
}

std::string print_contract(const Contract& k) {
  std::ostringstream out;
  out << "SCOPE Session\n\n";
  for (const auto& d : k.state) {
    out << "SECURITY STATE "
        << (d.type == StateType::Boolean ? "boolean" : d.type == StateType::Int ? "int" : "String")
        << " " << d.name << " = "
        << (d.type == StateType::Boolean ? "false" : to_string(d.initial)) << ";\n";
  }
  for (const auto& c : k.clauses) {
    out << "\n" << modifier_name(c.modifier) << " ";
    if (c.ret) out << *c.ret << " = ";
    out << c.qualified() << "(";
    for (std::size_t i = 0; i < c.params.size(); ++i)
      out << (i ? ", " : "") << c.params[i].type << " " << c.params[i].name;
    out << ")\n  PERFORM";
    for (std::size_t i = 0; i < c.commands.size(); ++i) {
      const auto& gc = c.commands[i];
      out << (i ? "\n  | " : "\n    ") << to_string(gc.guard) << " -> {";
      for (const auto& a : gc.updates) out << " " << a.var << " = " << to_string(a.value) << ";";
      out << " }";
    }
    out << "\n";
  }
  return out.str();
}

void check_contract_against(const Contract& k, const Program& p) {
  for (const auto& c : k.clauses) {
    const ClassDecl* cls = p.find_class(c.owner);
    const MethodDef* m = cls ? cls->find_method(c.method) : nullptr;
    if (!m || !m->is_api)
      throw ValidationError("contract references " + c.qualified() + ", which is not an API method of the program");
    if (m->arity != c.params.size())
      throw ValidationError("contract clause for " + c.qualified() + " has " +
                            std::to_string(c.params.size()) + " parameters; the method takes " +
                            std::to_string(m->arity));
    if (c.ret && !m->returns_value)
      throw ValidationError("AFTER clause binds the result of void method " + c.qualified());
  }
}

std::vector<std::string> relevant_dispatch(const Contract& k, const Program& p, const Instruction& invoke) {
  if (!invoke.is_invoke() || !p.is_api_invoke(invoke)) return {};
  std::vector<std::string> cands;
  if (invoke.op == Opcode::InvokeStatic) cands = {p.resolve_definition(invoke.owner, invoke.member)};
  else cands = p.dispatch_candidates(invoke.owner, invoke.member);
  for (const auto& c : cands)
    if (k.mentions(c, invoke.member)) return cands;
  return {};
}

// ---- actions and traces ----

bool operator==(const SecurityAction& a, const SecurityAction& b) {
  if (a.kind != b.kind || !(a.method == b.method) || a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!value_equal(a.args[i], b.args[i])) return false;
  if (a.ret.has_value() != b.ret.has_value()) return false;
  return !a.ret || value_equal(*a.ret, *b.ret);
}

std::string to_string(const SecurityAction& a) {
  std::string out = a.kind == ActionKind::Pre ? "PRE " : a.kind == ActionKind::Post ? "POST " : "EXN ";
  out += a.method.qualified() + "(";
  for (std::size_t i = 0; i < a.args.size(); ++i) out += (i ? "," : "") + to_string(a.args[i]);
  out += ")";
  if (a.ret) out += "=" + to_string(*a.ret);
  return out;
}

SecurityAction parse_action(std::string_view line) {
  TokenStream ts(detail::tokenize(line, {0, false, true}));
  SecurityAction a;
  const auto& k = ts.expect(TokKind::Ident, "PRE, POST or EXN");
  if (k.text == "PRE") a.kind = ActionKind::Pre;
  else if (k.text == "POST") a.kind = ActionKind::Post;
  else if (k.text == "EXN") a.kind = ActionKind::Exn;
  else throw ParseError("expected PRE, POST or EXN", k.line, k.column);
  const auto& q = ts.expect(TokKind::Ident, "Class.method");
  auto dot = q.text.rfind('.');
  if (dot == std::string::npos) throw ParseError("expected Class.method", q.line, q.column);
  a.method = {q.text.substr(0, dot), q.text.substr(dot + 1)};
  auto value = [&]() {
    const auto& t = ts.peek();
    std::string text = t.text;
    ts.next();
    if (t.kind == TokKind::Punct && text == "@") text += ts.expect(TokKind::Int, "location").text;
    try {
      return parse_value(text);
    } catch (const Error& e) {
      throw ParseError(e.what(), t.line, t.column);
    }
  };
  ts.expect("(");
  if (!ts.is(")")) {
    do a.args.push_back(value());
    while (ts.accept(","));
  }
  ts.expect(")");
  if (ts.accept("=")) {
    if (a.kind != ActionKind::Post) ts.error("only POST actions carry a result");
    a.ret = value();
  }
  if (!ts.at_end()) ts.error("trailing input");
  return a;
}

std::vector<SecurityAction> parse_trace(std::string_view text) {
  std::vector<SecurityAction> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(parse_action(line));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no, e.column());
    }
  }
  return out;
}

// ---- automaton ----

bool operator==(const MonitorState& a, const MonitorState& b) {
  if (a.violated || b.violated) return a.violated == b.violated;
  if (a.vars.size() != b.vars.size()) return false;
  for (std::size_t i = 0; i < a.vars.size(); ++i)
    if (!value_equal(a.vars[i], b.vars[i])) return false;
  return true;
}

std::string to_string(const MonitorState& q, const Contract& k) {
  if (q.violated) return "bot";
  std::string out = "{";
  for (std::size_t i = 0; i < q.vars.size(); ++i)
    out += (i ? ", " : "") + k.state[i].name + ":" + to_string(q.vars[i]);
  return out + "}";
}

MonitorState initial_state(const Contract& k) {
  MonitorState q;
  for (const auto& d : k.state) q.vars.push_back(d.initial);
  return q;
}

bool truthy(const Value& v) { return !value_equal(v, make_int(0)); }

Value eval_cexpr(const CExprPtr& e, const std::vector<Value>& vars, const std::vector<Value>& args,
                 const std::optional<Value>& ret) {
  auto val = [&](std::size_t i) { return eval_cexpr(e->kids[i], vars, args, ret); };
  auto ints = [](const Value& a, const Value& b) { return is_int(a) && is_int(b); };
  switch (e->kind) {
    case CKind::Lit:
      return e->lit;
    case CKind::StateVar:
      return e->index < vars.size() ? vars[e->index] : bottom();
    case CKind::Param:
      return e->index < args.size() ? args[e->index] : bottom();
    case CKind::Ret:
      return ret ? *ret : bottom();
    case CKind::Not:
      return make_bool(!truthy(val(0)));
    case CKind::And:
      return make_bool(truthy(val(0)) && truthy(val(1)));
    case CKind::Or:
      return make_bool(truthy(val(0)) || truthy(val(1)));
    case CKind::Eq:
      return make_bool(value_equal(val(0), val(1)));
    case CKind::Ne:
      return make_bool(!value_equal(val(0), val(1)));
    case CKind::Lt: {
      Value a = val(0), b = val(1);
      return make_bool(ints(a, b) && std::get<std::int64_t>(a) < std::get<std::int64_t>(b));
    }
    case CKind::Le: {
      Value a = val(0), b = val(1);
      return make_bool(!(ints(a, b) && std::get<std::int64_t>(b) < std::get<std::int64_t>(a)));
    }
    case CKind::Add:
    case CKind::Sub:
    case CKind::Mul: {
      Value a = val(0), b = val(1);
      if (!ints(a, b)) return bottom();
      auto x = static_cast<std::uint64_t>(std::get<std::int64_t>(a));
      auto y = static_cast<std::uint64_t>(std::get<std::int64_t>(b));
      std::uint64_t r = e->kind == CKind::Add ? x + y : e->kind == CKind::Sub ? x - y : x * y;
      return make_int(static_cast<std::int64_t>(r));
    }
  }
  return bottom();
}

MonitorState delta(const Contract& k, const MonitorState& q, const SecurityAction& a) {
  if (q.violated) return q;
  Modifier m = a.kind == ActionKind::Pre    ? Modifier::Before
               : a.kind == ActionKind::Post ? Modifier::After
                                            : Modifier::Exceptional;
  const EventClause* c = k.find(m, a.method.owner, a.method.name);
  if (!c) return q;
  if (c->params.size() != a.args.size())
    throw ValidationError("action " + to_string(a) + " does not match the arity of " + c->qualified());
  for (const auto& gc : c->commands) {
    if (!truthy(eval_cexpr(gc.guard, q.vars, a.args, a.ret))) continue;
    MonitorState next = q;
    for (const auto& u : gc.updates) next.vars[u.var_index] = eval_cexpr(u.value, next.vars, a.args, a.ret);
    return next;
  }
  MonitorState bad;
  bad.violated = true;
  return bad;
}

bool accepts(const Contract& k, const std::vector<SecurityAction>& trace) {
  MonitorState q = initial_state(k);
  for (const auto& a : trace) {
    q = delta(k, q, a);
    if (q.violated) return false;
  }
  return true;
}

// ---- translation into assertions ----

Term cexpr_condition(const CExprPtr& e, const CVarTerm& var) {
  switch (e->kind) {
    case CKind::Lit:
      if (e->boolean) return truthy(e->lit) ? tt() : ff();
      break;
    case CKind::Not:
      return not_(cexpr_condition(e->kids[0], var));
    case CKind::And:
      return and_(cexpr_condition(e->kids[0], var), cexpr_condition(e->kids[1], var));
    case CKind::Or:
      return or_(cexpr_condition(e->kids[0], var), cexpr_condition(e->kids[1], var));
    case CKind::Eq:
      return eq(cexpr_value(e->kids[0], var), cexpr_value(e->kids[1], var));
    case CKind::Ne:
      return ne(cexpr_value(e->kids[0], var), cexpr_value(e->kids[1], var));
    case CKind::Lt:
      return lt(cexpr_value(e->kids[0], var), cexpr_value(e->kids[1], var));
    case CKind::Le:
      return not_(lt(cexpr_value(e->kids[1], var), cexpr_value(e->kids[0], var)));
    default:
      break;
  }
  return not_(eq(cexpr_value(e, var), int_lit(0)));
}

Term cexpr_value(const CExprPtr& e, const CVarTerm& var) {
  switch (e->kind) {
    case CKind::Lit:
      return lit(e->lit);
    case CKind::StateVar:
    case CKind::Param:
    case CKind::Ret:
      return var(*e);
    case CKind::Add:
      return bin(BinOp::Add, cexpr_value(e->kids[0], var), cexpr_value(e->kids[1], var));
    case CKind::Sub:
      return bin(BinOp::Sub, cexpr_value(e->kids[0], var), cexpr_value(e->kids[1], var));
    case CKind::Mul:
      return bin(BinOp::Mul, cexpr_value(e->kids[0], var), cexpr_value(e->kids[1], var));
    default:
      return cond(cexpr_condition(e, var), int_lit(1), int_lit(0));
  }
}

}  // namespace irm

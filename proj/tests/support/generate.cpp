#include "generate.hpp"

#include <map>
#include <sstream>

#include "irmpcc/assembly.hpp"

namespace irm::testing {

namespace {

// Types in the generated API: int, string, object, void.
struct ApiMethod {
  std::string owner;
  std::string name;
  std::string params;  // one of 'i' / 's' per parameter
  char ret = 'v';      // 'v', 'i', 's', 'o'
  bool is_virtual = false;
};

const char* kNet = "api.Net";
const char* kStore = "api.Store";
const char* kRes = "api.Res";
const char* kRes2 = "api.Res2";

class Gen {
 public:
  Gen(std::mt19937_64& rng, const GenOptions& o) : rng_(rng), o_(o) {}

  Scenario build() {
    make_api();
    Scenario s;
    // The contract is drawn first so that it does not depend on program size.
    s.contract_text = contract();
    s.program_text = program();
    s.program = parse_program(s.program_text);
    s.contract = parse_contract(s.contract_text);
    return s;
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
  template <class T>
  const T& one_of(const std::vector<T>& v) { return v[pick(0, static_cast<int>(v.size()) - 1)]; }

  std::string random_params() {
    std::string p;
    for (int i = pick(0, 2); i > 0; --i) p += coin(0.65) ? 'i' : 's';
    return p;
  }
  char random_ret() { return one_of(std::vector<char>{'v', 'i', 'i', 's'}); }

  void make_api() {
    int n = pick(1, 3);
    for (int i = 0; i < n; ++i) api_.push_back({kNet, "m" + std::to_string(i), random_params(), random_ret(), false});
    n = pick(1, 2);
    for (int i = 0; i < n; ++i) api_.push_back({kStore, "s" + std::to_string(i), random_params(), random_ret(), false});
    if (o_.virtual_calls) {
      api_.push_back({kNet, "open", "", 'o', false});
      ApiMethod use{kRes, "use", random_params(), random_ret(), true};
      api_.push_back(use);
      use.owner = kRes2;
      api_.push_back(use);
    }
  }

  std::string sig(const ApiMethod& m) {
    std::string s = "apimethod " + m.name + "(" + std::to_string(m.params.size()) + ") ";
    switch (m.ret) {
      case 'v': return s + "V";
      case 'i': return s + "R";
      case 's': return s + "R:String";
      default: return s + "R:" + kRes;
    }
  }

  // ---- program ----

  struct Body {
    std::vector<std::string> code;  // "@n" stands for the label of mark n
    std::map<int, std::size_t> marks;
    struct H {
      int begin, end, target;
      std::string cls;
    };
    std::vector<H> handlers;
    int next_id = 0;

    int fresh() { return next_id++; }
    void mark(int id) { marks[id] = code.size(); }
    void emit(std::string s) { code.push_back(std::move(s)); }
    void jump(const std::string& op, int id) { code.push_back(op + " @" + std::to_string(id)); }

    std::string render(const std::string& head) const {
      std::ostringstream out;
      out << "  " << head << " {\n";
      for (std::size_t i = 0; i < code.size(); ++i) {
        std::string line = code[i];
        if (auto at = line.find(" @"); at != std::string::npos)
          line = line.substr(0, at + 1) + std::to_string(marks.at(std::stoi(line.substr(at + 2))));
        out << "    " << i << ": " << line << "\n";
      }
      out << "  }";
      if (!handlers.empty()) {
        out << " handlers {\n";
        for (const auto& h : handlers)
          out << "    " << marks.at(h.begin) << " " << marks.at(h.end) << " " << marks.at(h.target) << " " << h.cls
              << "\n";
        out << "  }";
      }
      out << "\n";
      return out.str();
    }
  };

  struct Ctx {
    Body* b;
    bool in_main;
    std::size_t helper;  // index of the current helper; main is helpers()
  };

  static constexpr int kStrLocal = 3;
  static constexpr int kObjLocal = 4;
  static constexpr int kExnLocal = 5;
  static constexpr int kCounterBase = 6;

  int int_local() { return pick(1, 2); }

  void push_arg(Body& b, char t) {
    if (t == 'i') {
      if (coin(0.5)) b.emit("iconst " + std::to_string(pick(0, 3)));
      else b.emit("aload " + std::to_string(int_local()));
    } else {
      if (coin(0.5)) b.emit("ldc " + one_of(std::vector<std::string>{"\"a\"", "\"b\"", "\"\""}));
      else b.emit("aload " + std::to_string(kStrLocal));
    }
  }

  void store_result(Body& b, char t) {
    if (t == 'i') b.emit(coin(0.7) ? "astore " + std::to_string(int_local()) : "pop");
    else if (t == 's') b.emit(coin(0.7) ? "astore " + std::to_string(kStrLocal) : "pop");
    else if (t == 'o') b.emit("pop");
  }

  void api_call(Ctx& c) {
    std::vector<const ApiMethod*> cands;
    for (const auto& m : api_)
      if (!m.is_virtual && m.ret != 'o') cands.push_back(&m);
    const ApiMethod& m = *one_of(cands);
    for (char t : m.params) push_arg(*c.b, t);
    c.b->emit("invokestatic " + m.owner + "." + m.name);
    store_result(*c.b, m.ret);
  }

  void virtual_call(Ctx& c) {
    const ApiMethod* use = nullptr;
    for (const auto& m : api_)
      if (m.is_virtual && m.owner == kRes) use = &m;
    c.b->emit("aload " + std::to_string(kObjLocal));
    for (char t : use->params) push_arg(*c.b, t);
    c.b->emit(std::string("invokevirtual ") + kRes + ".use");
    store_result(*c.b, use->ret);
  }

  void statement(Ctx& c, int depth) {
    Body& b = *c.b;
    int roll = pick(0, 99);
    bool nest = depth < o_.max_depth;
    if (roll < 35) {
      api_call(c);
    } else if (roll < 45 && c.in_main && o_.virtual_calls) {
      virtual_call(c);
    } else if (roll < 55 && nest) {
      int els = b.fresh(), end = b.fresh();
      if (coin(0.5)) {
        b.emit("aload " + std::to_string(int_local()));
        b.jump(coin(0.5) ? "ifeq" : "ifne", els);
      } else {
        b.emit("aload 1");
        b.emit("aload 2");
        b.jump(one_of(std::vector<std::string>{"if_icmpeq", "if_icmpne", "if_icmplt", "if_icmpge"}), els);
      }
      block(c, depth + 1);
      b.jump("goto", end);
      b.mark(els);
      block(c, depth + 1);
      b.mark(end);
    } else if (roll < 63 && nest) {
      int counter = kCounterBase + depth;
      int top = b.fresh(), end = b.fresh();
      b.emit("iconst " + std::to_string(pick(1, 3)));
      b.emit("astore " + std::to_string(counter));
      b.mark(top);
      b.emit("aload " + std::to_string(counter));
      b.jump("ifeq", end);
      block(c, depth + 1);
      b.emit("aload " + std::to_string(counter));
      b.emit("iconst 1");
      b.emit("isub");
      b.emit("astore " + std::to_string(counter));
      b.jump("goto", top);
      b.mark(end);
    } else if (roll < 73 && nest) {
      int begin = b.fresh(), handler = b.fresh(), end = b.fresh();
      b.mark(begin);
      block(c, depth + 1);
      b.jump("goto", end);
      b.mark(handler);
      b.emit("astore " + std::to_string(kExnLocal));
      if (coin(0.4)) statement(c, depth + 1);
      b.mark(end);
      b.handlers.push_back({begin, handler, handler, coin(0.75) ? "any" : "api.Err"});
    } else if (roll < 79) {
      int l = int_local();
      b.emit("aload " + std::to_string(l));
      b.emit("iconst " + std::to_string(pick(0, 3)));
      b.emit(one_of(std::vector<std::string>{"iadd", "isub", "imul"}));
      b.emit("astore " + std::to_string(l));
    } else if (std::size_t h = next_helper(c); roll < 85 && h < o_.helpers) {
      b.emit("aload " + std::to_string(int_local()));
      b.emit("invokestatic Main.h" + std::to_string(h));
    } else if (roll < 90) {
      if (coin(0.5)) {
        b.emit("aload " + std::to_string(int_local()));
        b.emit("putstatic Main.g");
      } else {
        b.emit("getstatic Main.g");
        b.emit("astore " + std::to_string(int_local()));
      }
    } else if (roll < 94 && c.in_main && o_.virtual_calls) {
      b.emit("aload " + std::to_string(kObjLocal));
      b.emit(std::string("instanceof ") + kRes2);
      b.emit("astore " + std::to_string(int_local()));
    } else if (roll < 97) {
      b.emit("iconst " + std::to_string(pick(0, 3)));
      b.emit("dup");
      b.emit("pop");
      b.emit("pop");
    } else {
      b.emit("nop");
    }
  }

  // Helpers only call later helpers, so there is no recursion.
  std::size_t next_helper(const Ctx& c) {
    std::size_t lo = c.in_main ? 0 : c.helper + 1;
    if (lo >= o_.helpers) return o_.helpers;
    return static_cast<std::size_t>(pick(static_cast<int>(lo), static_cast<int>(o_.helpers) - 1));
  }

  void block(Ctx& c, int depth) {
    for (int i = pick(1, 2); i > 0; --i) statement(c, depth);
  }

  void init_locals(Body& b) {
    b.emit("iconst 0");
    b.emit("astore 1");
    b.emit("iconst 1");
    b.emit("astore 2");
    b.emit("ldc \"a\"");
    b.emit("astore " + std::to_string(kStrLocal));
  }

  std::string method_main() {
    Body b;
    Ctx c{&b, true, o_.helpers};
    init_locals(b);
    if (o_.virtual_calls) {
      int begin = b.fresh(), handler = b.fresh(), start = b.fresh();
      b.mark(begin);
      b.emit(std::string("invokestatic ") + kNet + ".open");
      b.emit("astore " + std::to_string(kObjLocal));
      b.jump("goto", start);
      b.mark(handler);
      b.emit("astore " + std::to_string(kExnLocal));
      b.emit("return");
      b.mark(start);
      b.handlers.push_back({begin, handler, handler, "any"});
    }
    for (std::size_t i = 0; i < o_.statements; ++i) statement(c, 0);
    b.emit("return");
    return b.render("method main(0) V");
  }

  std::string method_helper(std::size_t h) {
    Body b;
    Ctx c{&b, false, h};
    b.emit("aload 0");
    b.emit("astore 1");
    b.emit("iconst 1");
    b.emit("astore 2");
    b.emit("ldc \"b\"");
    b.emit("astore " + std::to_string(kStrLocal));
    for (int i = pick(1, 3); i > 0; --i) statement(c, 1);
    b.emit("return");
    return b.render("method h" + std::to_string(h) + "(1) V");
  }

  std::string program() {
    std::ostringstream out;
    out << "class api.Err extends Throwable api {\n}\n";
    auto api_class = [&](const std::string& name, const std::string& head) {
      out << head << " {\n";
      for (const auto& m : api_)
        if (m.owner == name) out << "  " << sig(m) << "\n";
      out << "}\n";
    };
    api_class(kNet, std::string("class ") + kNet + " api");
    api_class(kStore, std::string("class ") + kStore + " api");
    if (o_.virtual_calls) {
      api_class(kRes, std::string("class ") + kRes + " api");
      api_class(kRes2, std::string("class ") + kRes2 + " extends " + kRes + " api");
    }
    out << "class Main {\n  static field g\n";
    out << method_main();
    for (std::size_t h = 0; h < o_.helpers; ++h) out << method_helper(h);
    out << "}\n";
    return out.str();
  }

  // ---- contract ----

  struct Var {
    std::string name;
    char type;  // 'i', 'b', 's'
  };
  std::vector<Var> state_;

  struct Scope {
    const ApiMethod* m;
    bool ret;
  };

  std::string int_lit() { return std::to_string(pick(0, 3)); }
  std::string str_lit() { return one_of(std::vector<std::string>{"\"a\"", "\"b\"", "\"\""}); }
  std::string cmp() { return one_of(std::vector<std::string>{"==", "!=", "<", "<=", ">", ">="}); }

  std::vector<std::pair<std::string, char>> names(const Scope& s) {
    std::vector<std::pair<std::string, char>> out;
    for (const auto& v : state_) out.emplace_back(v.name, v.type);
    for (std::size_t i = 0; i < s.m->params.size(); ++i) out.emplace_back("p" + std::to_string(i), s.m->params[i]);
    if (s.ret) out.emplace_back("r", s.m->ret);
    return out;
  }

  std::string atom(const Scope& s) {
    auto vs = names(s);
    const auto& [n, t] = one_of(vs);
    if (t == 'b') return coin(0.5) ? n : "!" + n;
    if (t == 's') {
      for (const auto& [n2, t2] : vs)
        if (t2 == 's' && n2 != n && coin(0.5)) return n + " == " + n2;
      return n + (coin(0.7) ? " == " : " != ") + str_lit();
    }
    for (const auto& [n2, t2] : vs)
      if (t2 == 'i' && n2 != n && coin(0.3)) return n + " " + cmp() + " " + n2;
    return n + " " + cmp() + " " + int_lit();
  }

  std::string guard(const Scope& s, int depth) {
    if (depth == 0 || coin(0.55)) return atom(s);
    switch (pick(0, 2)) {
      case 0: return "(" + guard(s, depth - 1) + " && " + guard(s, depth - 1) + ")";
      case 1: return "(" + guard(s, depth - 1) + " || " + guard(s, depth - 1) + ")";
      default: return "!(" + guard(s, depth - 1) + ")";
    }
  }

  std::string rhs(const Scope& s, const Var& v) {
    std::vector<std::string> opts;
    if (v.type == 'i') {
      opts = {int_lit(), v.name + " + 1", v.name + " - 1"};
    } else if (v.type == 'b') {
      opts = {"true", "false", "!" + v.name};
    } else {
      opts = {str_lit()};
    }
    for (const auto& [n, t] : names(s))
      if (t == v.type && n != v.name && (v.type != 'i' || coin(0.5))) opts.push_back(n);
    return one_of(opts);
  }

  std::string command(const Scope& s, bool last_true) {
    std::string out = last_true ? "true" : guard(s, 2);
    out += " -> {";
    for (const auto& v : state_)
      if (coin(0.5)) out += " " + v.name + " = " + rhs(s, v) + ";";
    return out + " }";
  }

  std::string header(const ApiMethod& m, bool bind) {
    std::string out = bind ? "r = " : "";
    out += m.owner + "." + m.name + "(";
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      if (i) out += ", ";
      out += (m.params[i] == 'i' ? "int p" : "string p") + std::to_string(i);
    }
    return out + ")";
  }

  std::string commands(const Scope& s, int n, bool exhaustive) {
    std::string out;
    for (int i = 0; i < n; ++i) {
      if (i) out += "\n    | ";
      out += command(s, exhaustive && i == n - 1);
    }
    return out;
  }

  std::string contract() {
    std::ostringstream out;
    int nvars = pick(1, 2);
    for (int i = 0; i < nvars; ++i) {
      char t = one_of(std::vector<char>{'i', 'i', 'b', 's'});
      state_.push_back({"st" + std::to_string(i), t});
      out << "SECURITY STATE " << (t == 'i' ? "int" : t == 'b' ? "boolean" : "String") << " st" << i << " = "
          << (t == 's' ? "\"\"" : t == 'b' ? "false" : "0") << ";\n";
    }
    std::size_t clauses = 0;
    for (int pass = 0; clauses == 0; ++pass) {
      for (const auto& m : api_) {
        if (coin(0.5)) {
          Scope s{&m, false};
          out << "\nBEFORE " << header(m, false) << " PERFORM\n    "
              << commands(s, pick(1, 3), coin(o_.permissive_before)) << "\n";
          ++clauses;
        }
        if (coin(0.35)) {
          bool bind = (m.ret == 'i' || m.ret == 's') && coin(0.6);
          Scope s{&m, bind};
          out << "\nAFTER " << header(m, bind) << " PERFORM\n    " << commands(s, pick(1, 2), true) << "\n";
          ++clauses;
        }
        if (coin(0.3)) {
          Scope s{&m, false};
          out << "\nEXCEPTIONAL " << header(m, false) << " PERFORM\n    " << commands(s, pick(1, 2), true) << "\n";
          ++clauses;
        }
      }
      if (pass > 8) break;
    }
    return out.str();
  }

  std::mt19937_64& rng_;
  const GenOptions& o_;
  std::vector<ApiMethod> api_;
};

}  // namespace

Scenario random_scenario(std::mt19937_64& rng, const GenOptions& opts) { return Gen(rng, opts).build(); }

}  // namespace irm::testing

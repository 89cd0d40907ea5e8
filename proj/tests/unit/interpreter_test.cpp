#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "irmpcc/assembly.hpp"
#include "irmpcc/error.hpp"
#include "irmpcc/interpreter.hpp"

namespace irm {
namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}


Program prog(const std::string& body) { return parse_program(body); }

TEST(Interpreter, ReturnIsOneStep) {
  auto p = prog("class A { method main(0) V { 0: return } }");
  ScriptedOracle o({});
  auto e = run(p, o);
  EXPECT_EQ(e.status, RunStatus::Returned);
  EXPECT_EQ(e.steps, 1u);
}

TEST(Interpreter, IconstPushesAndAdvances) {
  auto p = prog("class A { method main(0) V { 0: iconst 5 1: pop 2: return } }");
  ScriptedOracle o({});
  Machine m(p, o);
  m.step();
  EXPECT_TRUE(value_equal(m.config().stack(0), make_int(5)));
  EXPECT_EQ(m.config().frames.back().pc, 1u);
}

TEST(Interpreter, ExitEndsExecution) {
  auto p = prog("class A { method main(0) V { 0: iconst 1 1: invokestatic System.exit 2: return } }");
  ScriptedOracle o({});
  auto e = run(p, o);
  EXPECT_EQ(e.status, RunStatus::Exited);
  EXPECT_EQ(e.steps, 2u);
  EXPECT_EQ(e.exit_code, 1);
}

TEST(Interpreter, FuelExhaustion) {
  auto p = prog("class A { method main(0) V { 0: goto 0 } }");
  ScriptedOracle o({});
  RunOptions opts;
  opts.fuel = 100;
  opts.keep_configs = true;
  auto e = run(p, o, opts);
  EXPECT_EQ(e.status, RunStatus::FuelExhausted);
  EXPECT_EQ(e.steps, 100u);
  EXPECT_EQ(e.configs.size(), 101u);
}

const char* kConnProgram = R"(
class Err extends Throwable { }
class Conn api {
  apimethod open(1) R:Conn
  apimethod send(1) V
}
class Main {
  method main(0) V {
    0: ldc "u"
    1: invokestatic Conn.open
    2: astore 1
    3: aload 1
    4: iconst 7
    5: invokevirtual Conn.send
    6: return
    7: astore 2
    8: return
  } handlers {
    0 6 7 Err
  }
}
)";

TEST(Interpreter, ApiCallsProduceActions) {
  auto p = prog(kConnProgram);
  ScriptedOracle o(parse_oracle_script("ret new Conn\nret\n"));
  auto e = run(p, o);
  EXPECT_EQ(e.status, RunStatus::Returned);
  ASSERT_EQ(e.api_actions.size(), 4u);
  EXPECT_EQ(to_string(e.api_actions[0]), "PRE Conn.open(\"u\")");
  EXPECT_EQ(to_string(e.api_actions[1]), "POST Conn.open(\"u\")=@1");
  EXPECT_EQ(to_string(e.api_actions[2]), "PRE Conn.send(7)");
  EXPECT_EQ(to_string(e.api_actions[3]), "POST Conn.send(7)");
  auto k = parse_contract("BEFORE Conn.send(int x) PERFORM true -> { }");
  EXPECT_EQ(srt(e, k).size(), 2u);
  auto none = parse_contract("BEFORE Other.x() PERFORM true -> { }");
  EXPECT_TRUE(srt(e, none).empty());
}

TEST(Interpreter, ExceptionalOutcomeAndHandler) {
  auto p = prog(kConnProgram);
  ScriptedOracle o(parse_oracle_script("throw Err\n"));
  Machine m(p, o);
  m.step();
  auto info = m.step();
  ASSERT_TRUE(info.post);
  EXPECT_EQ(info.post->kind, ActionKind::Exn);
  ASSERT_EQ(m.config().frames.size(), 2u);
  EXPECT_TRUE(m.config().frames.back().exceptional);
  EXPECT_TRUE(m.config().instance_of(m.config().frames.back().exn, "Throwable"));
  m.step();
  const auto& f = m.config().frames.back();
  EXPECT_FALSE(f.exceptional);
  EXPECT_EQ(f.pc, 7u);
  ASSERT_EQ(f.stack.size(), 1u);
  EXPECT_TRUE(is_loc(f.stack[0]));
}

TEST(Interpreter, HandlerRangeMatching) {
  auto p = prog(R"(
class Err extends Throwable { }
class Other extends Throwable { }
class Api api { apimethod boom(0) V }
class Main {
  method main(0) R {
    0: nop
    1: invokestatic Api.boom
    2: iconst 0
    3: return
    4: pop
    5: iconst 4
    6: return
    7: pop
    8: iconst 7
    9: return
  } handlers {
    0 1 4 any
    1 2 7 Other
    1 2 4 Err
    1 2 7 any
  }
}
)");
  ScriptedOracle o(parse_oracle_script("throw Err"));
  auto e = run(p, o);
  EXPECT_EQ(e.status, RunStatus::Returned);
  EXPECT_TRUE(value_equal(e.result, make_int(4)));
  ScriptedOracle o2(parse_oracle_script("throw Other"));
  EXPECT_TRUE(value_equal(run(p, o2).result, make_int(7)));
  ScriptedOracle o3(parse_oracle_script("throw Throwable"));
  EXPECT_TRUE(value_equal(run(p, o3).result, make_int(7)));
}

TEST(Interpreter, UncaughtExceptionPropagates) {
  auto p = prog(R"(
class Err extends Throwable { }
class Api api { apimethod boom(0) V }
class Main {
  method main(0) V {
    0: invokestatic Main.helper
    1: return
  }
  method helper(0) V {
    0: invokestatic Api.boom
    1: return
  }
}
)");
  ScriptedOracle o(parse_oracle_script("throw Err"));
  auto e = run(p, o);
  EXPECT_EQ(e.status, RunStatus::Uncaught);
}

TEST(Interpreter, DynamicDispatchNamesActions) {
  auto p = prog(R"(
class C api { apimethod m(1) V  apimethod make(0) R:C }
class D extends C api { apimethod m(1) V }
class Main {
  method main(0) V {
    0: invokestatic C.make
    1: iconst 3
    2: invokevirtual C.m
    3: return
  }
}
)");
  ScriptedOracle o(parse_oracle_script("ret new D\nret\n"));
  auto e = run(p, o);
  ASSERT_EQ(e.api_actions.size(), 4u);
  EXPECT_EQ(e.api_actions[2].method.qualified(), "D.m");
}

TEST(Interpreter, FaultsAreDistinct) {
  ScriptedOracle o({});
  EXPECT_THROW(run(prog("class A { method main(0) V { 0: pop 1: return } }"), o), MachineFault);
  EXPECT_THROW(run(prog("class A { field f method main(0) V { 0: ldc null 1: getfield f 2: return } }"), o),
               MachineFault);
  EXPECT_THROW(run(prog("class A { method main(0) V { 0: ldc \"x\" 1: iconst 1 2: iadd 3: return } }"), o),
               MachineFault);
}

TEST(Interpreter, OracleScriptExhaustion) {
  auto p = prog(kConnProgram);
  ScriptedOracle o(parse_oracle_script("ret new Conn\n"));
  EXPECT_THROW(run(p, o), Error);
  EXPECT_THROW(parse_oracle_script("bogus 1"), ParseError);
}

TEST(Interpreter, SeededOracleRespectsFinalStatics) {
  auto p = prog(R"(
class Err extends Throwable { }
class SS final { static field x = 1 }
class G { static field y }
class Api api { apimethod poke(0) R }
class Main {
  method main(0) V {
    0: invokestatic Api.poke
    1: putstatic G.y
    2: goto 0
  } handlers {
    0 1 0 any
  }
}
)");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SeededOracle o(seed);
    RunOptions opts;
    opts.fuel = 500;
    auto e = run(p, o, opts);
    EXPECT_EQ(e.status, RunStatus::FuelExhausted);
  }
}

TEST(Interpreter, FinalStaticCheckCatchesRogueOracle) {
  struct Rogue : ApiOracle {
    OracleOutcome call(const MethodRef&, const MethodDef&, const std::vector<Value>&, Configuration& c) override {
      c.statics[{"SS", "x"}] = make_int(42);
      return {};
    }
  } rogue;
  auto p = prog(R"(
class SS final { static field x }
class Api api { apimethod poke(0) V }
class Main { method main(0) V { 0: invokestatic Api.poke 1: return } }
)");
  EXPECT_THROW(run(p, rogue), MachineFault);
}

TEST(Interpreter, SampleRuns) {
  auto p = parse_program(slurp(IRMPCC_SAMPLES_DIR "/file_api.mjb"));
  SeededOracle o(3);
  auto e = run(p, o);
  EXPECT_NE(e.status, RunStatus::Running);
}

}  // namespace
}  // namespace irm

#include <gtest/gtest.h>

#include "irmpcc/assembly.hpp"
#include "irmpcc/wp.hpp"

namespace irm {
namespace {

struct Fixture {
  Program program;
  Contract contract;
  ExtendedMethod m;
  VcContext ctx;

  Fixture(const std::string& body, const std::string& contract_text, const std::vector<std::string>& annots,
          const std::string& handlers = "", const std::string& members = "") {
    std::string src =
        "class File api { apimethod read(0) R:int\n apimethod close(0) V }\n"
        "class SS final { static field st = 0 }\n"
        "class Oops extends Throwable { }\n"
        "class Main {\n" + members + "\nmethod main(0) V {\n" + body + "\n}" + (handlers.empty() ? "" : " handlers {\n" + handlers + "\n}") + " }";
    program = parse_program(src);
    contract = parse_contract(contract_text);
    ctx.program = &program;
    ctx.contract = &contract;
    ctx.invariant = eq(static_ref("SS", "st"), ghost("st#g"));
    m.ref = {"Main", "main"};
    m.def = &program.method(m.ref);
    for (const auto& a : annots) m.annotations.push_back(parse_assertion(a));
    m.pre = ctx.invariant;
    m.post = ctx.invariant;
  }
};

const char* kContract = "SECURITY STATE int st = 0;\nBEFORE File.close() PERFORM true -> { st = 1; }";
const char* kPsi = "(= (static SS st) (ghost st#g))";

TEST(Wp, GotoTakesTargetAssertion) {
  Fixture f("0: goto 2\n 1: return\n 2: return", kContract, {"tt", kPsi, "(= l0 7)"});
  EXPECT_EQ(to_string(wp(f.m, 0, f.ctx)), "(= l0 7)");
}

TEST(Wp, ReturnTakesPost) {
  Fixture f("0: return", kContract, {kPsi});
  EXPECT_EQ(to_string(wp(f.m, 0, f.ctx)), kPsi);
}

TEST(Wp, ConstantIntoConditional) {
  Fixture f("0: iconst 0\n 1: if_icmpne 3\n 2: return\n 3: return", kContract,
            {"tt", "(implies (not (= s0 s1)) (= l1 1))", kPsi, kPsi});
  EXPECT_EQ(to_string(wp(f.m, 0, f.ctx)), "(implies (not (= 0 s0)) (= l1 1))");
}

TEST(Wp, SingleReturnMethodGivesTwoTrivialVcs) {
  Fixture f("0: return", kContract, {kPsi});
  auto vcs = vcgen(f.m, f.ctx);
  ASSERT_EQ(vcs.size(), 2u);
  for (const auto& vc : vcs) {
    EXPECT_TRUE(term_equal(vc.antecedent, f.ctx.invariant));
    EXPECT_TRUE(term_equal(vc.succedent, f.ctx.invariant));
  }
  EXPECT_EQ(to_string(vcs[0]), std::string("Main.main:pre |- ") + kPsi + " ==> " + kPsi);
  EXPECT_EQ(to_string(vcs[1]).substr(0, 12), "Main.main:0 ");
}

TEST(Wp, StackRows) {
  Fixture f("0: aload 1\n 1: astore 2\n 2: dup\n 3: iadd\n 4: return", kContract,
            {"tt", "tt", "tt", "(= (+ s1 s0) l2)", "(= s0 l2)"});
  EXPECT_EQ(to_string(wp(f.m, 3, f.ctx)), "(= (+ s1 s0) l2)");
  EXPECT_EQ(to_string(wp(f.m, 2, f.ctx)), "(= (+ s0 s0) l2)");
  f.m.annotations[2] = parse_assertion("(= l2 s0)");
  EXPECT_EQ(to_string(wp(f.m, 1, f.ctx)), "(= s0 s1)");
  f.ctx.options.conjunctive_astore = true;
  EXPECT_EQ(to_string(wp(f.m, 1, f.ctx)), "(and (= l2 s1) (= s0 l2))");
  f.m.annotations[1] = parse_assertion("(= s0 l1)");
  EXPECT_EQ(to_string(wp(f.m, 0, f.ctx)), "(= l1 l1)");
}

TEST(Wp, FieldAndStaticRows) {
  Fixture f("0: getstatic SS.st\n 1: getfield x\n 2: putstatic SS.st\n 3: return", kContract,
            {"tt", "(= (field s0 x) 1)", "(= s0 1)", kPsi}, "", "field x");
  EXPECT_EQ(to_string(wp(f.m, 2, f.ctx)), "(= s0 (ghost st#g))");
  EXPECT_EQ(to_string(wp(f.m, 1, f.ctx)), "(= (field s0 x) 1)");
  EXPECT_EQ(to_string(wp(f.m, 0, f.ctx)), "(= (field (static SS st) x) 1)");
}

TEST(Wp, AthrowSelectsMatchingHandler) {
  Fixture f("0: aload 0\n 1: athrow\n 2: return\n 3: return", kContract,
            {"tt", "tt", "(= l0 s0)", kPsi}, "1 2 2 Oops\n 1 2 3 any");
  auto w = wp(f.m, 1, f.ctx);
  Term expected = select_macro({is(stack(0), "Oops"), is(stack(0), "Throwable")},
                               {parse_assertion("(= l0 s0)"), f.ctx.invariant}, f.ctx.invariant);
  EXPECT_TRUE(term_equal(w, expected)) << to_string(w);
  f.m.annotations[2] = parse_assertion("(= l0 s1)");
  EXPECT_THROW(wp(f.m, 1, f.ctx), WpError);
}

TEST(Wp, InvokeKeepsFrameConjuncts) {
  Fixture f("0: invokestatic File.read\n 1: astore 1\n 2: return", kContract,
            {"tt", std::string("(and ") + kPsi + " (= l0 (ghost a#g)))", kPsi});
  EXPECT_EQ(to_string(wp(f.m, 0, f.ctx)), std::string("(and ") + kPsi + " (= l0 (ghost a#g)))");
  f.m.annotations[1] = parse_assertion("(= s0 1)");
  try {
    wp(f.m, 0, f.ctx);
    FAIL();
  } catch (const WpError& e) {
    EXPECT_EQ(std::string(e.what()), "unsupported post-call annotation");
    EXPECT_EQ(e.label(), 0u);
  }
}

TEST(Wp, ProgramCallMayNotCarryGhosts) {
  Fixture f("0: invokestatic Main.helper\n 1: return", kContract,
            {"tt", std::string("(and ") + kPsi + " (= l0 (ghost a#g)))"}, "",
            "method helper(0) V { 0: return }");
  EXPECT_THROW(wp(f.m, 0, f.ctx), WpError);
}

TEST(Wp, NoRowForNop) {
  Fixture f("0: nop\n 1: return", kContract, {kPsi, kPsi});
  EXPECT_THROW(wp(f.m, 0, f.ctx), WpError);
  EXPECT_TRUE(fallback_preservation_check(f.m, 0, f.ctx));
  f.m.annotations[1] = parse_assertion("tt");
  EXPECT_FALSE(fallback_preservation_check(f.m, 0, f.ctx));
}

TEST(Wp, FallbackRejectsStateWritesAndInlinedLabels) {
  Fixture f("0: iconst 1\n 1: putstatic SS.st\n 2: invokestatic File.close\n 3: return", kContract,
            {kPsi, kPsi, kPsi, kPsi});
  EXPECT_FALSE(fallback_preservation_check(f.m, 1, f.ctx));
  EXPECT_FALSE(fallback_preservation_check(f.m, 2, f.ctx));
  EXPECT_TRUE(fallback_preservation_check(f.m, 0, f.ctx));
  f.m.inlined = {true, false, false, false};
  EXPECT_FALSE(fallback_preservation_check(f.m, 0, f.ctx));
  EXPECT_TRUE(fallback_preservation_check(f.m, 3, f.ctx));
}

}  // namespace
}  // namespace irm

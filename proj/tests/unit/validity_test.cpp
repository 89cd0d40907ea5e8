#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "irmpcc/assembly.hpp"
#include "irmpcc/validity.hpp"

namespace irm {
namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Scenario {
  Contract k;
  InlinedProgram ip;
  ProofBundle proof;
  GhostLayer layer;
  Scenario(const std::string& program, const std::string& contract)
      : k(parse_contract(contract)), ip(inline_program(parse_program(program), k)) {
    proof = generate_proof(ip, k);
    layer = embed_ghost(ip.program, k);
  }
};

Scenario midlet() {
  return Scenario(slurp(IRMPCC_SAMPLES_DIR "/midlet.mjb"), slurp(IRMPCC_SAMPLES_DIR "/no_send_after_read.conspec"));
}

TEST(Validity, GeneratedProofHoldsOnSeededRuns) {
  auto s = midlet();
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SeededOracle o(seed);
    auto r = check_extended_validity(s.ip.program, s.proof, s.layer, s.k, o);
    EXPECT_TRUE(r.valid) << seed << " " << r.method << ":" << r.label << " " << r.reason;
    EXPECT_EQ(r.ghost_mismatches, 0u) << r.ghost_detail;
    EXPECT_GT(r.ghost_checks, 0u);
    EXPECT_TRUE(r.trace_accepted);
  }
}

TEST(Validity, AllTrueAnnotationsAreValid) {
  auto s = midlet();
  for (auto& mp : s.proof.methods) {
    mp.pre = mp.post = tt();
    for (auto& a : mp.annotations) a = tt();
  }
  SeededOracle o(3);
  EXPECT_TRUE(check_extended_validity(s.ip.program, s.proof, s.layer, s.k, o).valid);
}

TEST(Validity, FalseAnnotationCaughtAtFirstReach) {
  auto s = midlet();
  const auto& site = s.ip.call_sites.at("Midlet.main")[0];
  auto& mp = s.proof.methods[0];
  mp.annotations[site.invoke - 1] = ff();
  SeededOracle o(1);
  auto r = check_extended_validity(s.ip.program, s.proof, s.layer, s.k, o);
  EXPECT_FALSE(r.valid);
  EXPECT_EQ(r.label, std::to_string(site.invoke - 1));
  EXPECT_GT(r.config_index, 0u);
}

TEST(Validity, ViolatingRunExitsBeforeTheAction) {
  Scenario s(
      "class File api { apimethod read(0) R\n apimethod send(0) V }\n"
      "class Main { method main(0) V { 0: invokestatic File.read\n 1: astore 1\n 2: invokestatic File.send\n 3: return } }",
      "SECURITY STATE boolean read = false;\n"
      "BEFORE File.read() PERFORM true -> { read = true; }\n"
      "BEFORE File.send() PERFORM read == false -> { }");
  ScriptedOracle o({OracleOutcome{false, make_int(1), {}, {}}});
  auto r = check_extended_validity(s.ip.program, s.proof, s.layer, s.k, o);
  EXPECT_TRUE(r.valid) << r.label << " " << r.reason;
  EXPECT_EQ(r.status, RunStatus::Exited);
  EXPECT_TRUE(r.trace_accepted);
  EXPECT_EQ(r.ghost_mismatches, 0u);
}

TEST(Validity, UninlinedProgramBreaksAnnotations) {
  auto s = midlet();
  // Same proof against the original program: annotation count no longer fits.
  auto original = parse_program(slurp(IRMPCC_SAMPLES_DIR "/midlet.mjb"));
  SeededOracle o(0);
  auto r = check_extended_validity(original, s.proof, {}, s.k, o);
  EXPECT_FALSE(r.valid);
}

}  // namespace
}  // namespace irm

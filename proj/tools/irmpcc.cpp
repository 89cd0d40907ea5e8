// Command-line front end: inline, prove, check, run, adhere, vcgen.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "irmpcc/assembly.hpp"
#include "irmpcc/checker.hpp"
#include "irmpcc/error.hpp"
#include "irmpcc/ghost.hpp"
#include "irmpcc/inliner.hpp"
#include "irmpcc/interpreter.hpp"
#include "irmpcc/proofgen.hpp"
#include "irmpcc/wp.hpp"

namespace fs = std::filesystem;
using namespace irm;

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
  if (!out) throw Error("cannot write " + path);
}

struct Paths {
  std::string contract, in, out, labels, program, proof, bundle, trace, oracle, dump;
  std::size_t fuel = 100000;
  unsigned jobs = 1;
  bool json = false;
};

int cmd_inline(const Paths& a) {
  Program p = parse_program(read_file(a.in));
  Contract k = parse_contract(read_file(a.contract));
  InlinedProgram ip = inline_program(p, k);
  write_file(a.out, print_program(ip.program));
  write_file(a.labels.empty() ? a.out + ".il" : a.labels, print_inlined_labels(ip));
  return kOk;
}

int cmd_prove(const Paths& a) {
  Contract k = parse_contract(read_file(a.contract));
  Program p = parse_program(read_file(a.in));
  std::string labels = a.labels.empty() ? a.in + ".il" : a.labels;
  InlinedProgram ip = recover_inlined(std::move(p), k, parse_inlined_labels(read_file(labels)));
  ProofBundle b = generate_proof(ip, k);
  write_bundle(a.out, ip.program, k, b);
  write_file((fs::path(a.out) / "ghost.layer").string(), print_ghost_layer(embed_ghost(ip.program, k)));
  return kOk;
}

BundleFiles load_bundle(const Paths& a) {
  if (!a.bundle.empty()) return read_bundle(a.bundle);
  if (a.contract.empty() || a.program.empty() || a.proof.empty())
    throw CLI::ValidationError("need --bundle or all of --contract, --program, --proof");
  return {read_file(a.program), read_file(a.contract), read_file(a.proof)};
}

int cmd_check(const Paths& a) {
  BundleFiles f = load_bundle(a);
  CheckOptions opts;
  opts.jobs = a.jobs;
  CheckResult r = check_texts(f.program, f.contract, f.proof, opts);
  if (a.json) {
    nlohmann::json j;
    j["valid"] = r.valid;
    j["failures"] = nlohmann::json::array();
    for (const auto& fl : r.failures) j["failures"].push_back({{"method", fl.method}, {"label", fl.label}, {"reason", fl.reason}});
    j["warnings"] = r.warnings;
    j["stats"] = {{"vcs", r.stats.vcs}, {"fallback", r.stats.by_fallback}, {"rewrite", r.stats.by_rewrite}};
    std::cout << j.dump() << "\n";
  } else {
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& fl : r.failures) std::cout << to_string(fl) << "\n";
    if (r.valid) std::cout << "VALID\n";
  }
  return r.valid ? kOk : kFail;
}

int cmd_run(const Paths& a) {
  Program p = parse_program(read_file(a.program));
  std::unique_ptr<ApiOracle> oracle;
  if (a.oracle.rfind("seed:", 0) == 0) {
    oracle = std::make_unique<SeededOracle>(std::stoull(a.oracle.substr(5)));
  } else if (a.oracle.rfind("script:", 0) == 0) {
    oracle = std::make_unique<ScriptedOracle>(parse_oracle_script(read_file(a.oracle.substr(7))));
  } else {
    throw CLI::ValidationError("--oracle must be seed:N or script:FILE");
  }
  RunOptions opts;
  opts.fuel = a.fuel;
  Execution e = run(p, *oracle, opts);
  std::vector<SecurityAction> trace = e.api_actions;
  if (!a.contract.empty()) trace = srt(e, parse_contract(read_file(a.contract)));
  std::ostringstream t;
  for (const auto& act : trace) t << to_string(act) << "\n";
  if (a.trace.empty()) std::cout << t.str();
  else write_file(a.trace, t.str());
  std::cerr << "status " << to_string(e.status) << " steps " << e.steps;
  if (e.exit_code) std::cerr << " exit " << *e.exit_code;
  std::cerr << "\n";
  return kOk;
}

int cmd_adhere(const Paths& a) {
  Contract k = parse_contract(read_file(a.contract));
  auto trace = parse_trace(read_file(a.trace));
  bool ok = accepts(k, trace);
  std::cout << (ok ? "ACCEPT" : "REJECT") << "\n";
  return ok ? kOk : kFail;
}

int cmd_vcgen(const Paths& a) {
  BundleFiles f = load_bundle(a);
  Program p = parse_program(f.program);
  Contract k = parse_contract(f.contract);
  ProofBundle b = parse_proof(f.proof);
  GhostLayer layer = embed_ghost(p, k);
  VcContext ctx{&p, &k, monitor_invariant(k), {}};
  std::ostringstream out;
  std::size_t n = 0;
  for (const auto& mp : b.methods) {
    ExtendedMethod m;
    m.ref = mp.ref;
    m.def = &p.method(mp.ref);
    m.annotations = mp.annotations;
    m.pre = mp.pre;
    m.post = mp.post;
    auto g = layer.find(mp.ref.qualified());
    m.ghosts = g == layer.end() ? nullptr : &g->second;
    if (m.annotations.size() != m.def->instructions.size())
      throw ValidationError(mp.ref.qualified() + ": annotation count does not match method size");
    out << to_string(VerificationCondition{m.ref, std::nullopt, m.pre, entry_assertion(m, 0)}) << "\n";
    ++n;
    for (std::size_t l = 0; l < m.annotations.size(); ++l, ++n) {
      try {
        out << to_string(VerificationCondition{m.ref, l, m.annotations[l], wp(m, l, ctx)}) << "\n";
      } catch (const WpError& e) {
        out << mp.ref.qualified() << ":" << l << " |- " << to_string(m.annotations[l]) << " ==> <" << e.what() << ">\n";
      }
    }
  }
  if (a.dump.empty()) std::cout << out.str();
  else write_file(a.dump, out.str());
  std::cerr << n << " verification conditions\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inlined reference monitors with adherence proofs"};
  app.set_version_flag("--version", std::string("irmpcc ") + IRMPCC_VERSION);
  app.require_subcommand(1);
  Paths a;

  auto* inl = app.add_subcommand("inline", "Inline the contract's monitor into a program");
  inl->add_option("--contract", a.contract)->required();
  inl->add_option("--in", a.in)->required();
  inl->add_option("--out", a.out)->required();
  inl->add_option("--labels", a.labels, "Inlined-label sidecar (default: <out>.il)");

  auto* prove = app.add_subcommand("prove", "Write a proof bundle for an inlined program");
  prove->add_option("--contract", a.contract)->required();
  prove->add_option("--in", a.in)->required();
  prove->add_option("--out", a.out, "Bundle directory")->required();
  prove->add_option("--labels", a.labels, "Inlined-label sidecar (default: <in>.il)");

  auto* check = app.add_subcommand("check", "Check a proof bundle");
  auto* vcgen = app.add_subcommand("vcgen", "Dump verification conditions");
  for (auto* c : {check, vcgen}) {
    c->add_option("--bundle", a.bundle, "Bundle directory");
    c->add_option("--contract", a.contract);
    c->add_option("--program", a.program);
    c->add_option("--proof", a.proof);
  }
  check->add_option("--jobs", a.jobs, "Methods checked in parallel")->check(CLI::PositiveNumber);
  check->add_flag("--json-diagnostics", a.json);
  vcgen->add_option("--dump", a.dump, "Output file (default: stdout)");

  auto* runc = app.add_subcommand("run", "Execute a program against an API oracle");
  runc->add_option("--program", a.program)->required();
  runc->add_option("--oracle", a.oracle, "seed:N or script:FILE")->required();
  runc->add_option("--trace", a.trace, "Trace output file (default: stdout)");
  runc->add_option("--fuel", a.fuel);
  runc->add_option("--contract", a.contract, "Restrict the trace to security-relevant actions");

  auto* adhere = app.add_subcommand("adhere", "Check a trace against a contract");
  adhere->add_option("--contract", a.contract)->required();
  adhere->add_option("--trace", a.trace)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*inl) return cmd_inline(a);
    if (*prove) return cmd_prove(a);
    if (*check) return cmd_check(a);
    if (*vcgen) return cmd_vcgen(a);
    if (*runc) return cmd_run(a);
    if (*adhere) return cmd_adhere(a);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

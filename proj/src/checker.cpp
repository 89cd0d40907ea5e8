#include "irmpcc/checker.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include "irmpcc/assembly.hpp"
#include "irmpcc/error.hpp"
#include "irmpcc/ghost.hpp"
#include "irmpcc/inliner.hpp"
#include "irmpcc/wp.hpp"

namespace irm {

std::string to_string(const CheckFailure& f) { return "INVALID " + f.method + " " + f.label + " " + f.reason; }

namespace {

struct MethodOutcome {
  std::optional<CheckFailure> failure;
  CheckStats stats;
};

void add_stats(CheckStats& into, const CheckStats& s) {
  into.vcs += s.vcs;
  into.by_fallback += s.by_fallback;
  into.by_rewrite += s.by_rewrite;
  into.rewrite.applications += s.rewrite.applications;
  into.rewrite.eliminations += s.rewrite.eliminations;
  into.rewrite.sweeps += s.rewrite.sweeps;
  into.rewrite.measure_violations += s.rewrite.measure_violations;
}

void add_rewrite(CheckStats& st, const DischargeResult& d) {
  ++st.by_rewrite;
  st.rewrite.applications += d.stats.applications;
  st.rewrite.eliminations += d.stats.eliminations;
  st.rewrite.sweeps += d.stats.sweeps;
  st.rewrite.measure_violations += d.stats.measure_violations;
}

MethodOutcome check_method(const Program& p, const Contract& k, const Term& psi, const MethodRef& ref,
                           const MethodProof& mp, const MethodGhosts* ghosts, const CheckOptions& opts) {
  MethodOutcome out;
  const std::string q = ref.qualified();
  auto fail = [&](std::string label, std::string reason) {
    out.failure = CheckFailure{q, std::move(label), std::move(reason)};
    return out;
  };
  if (!term_equal(mp.pre, psi)) return fail("-", "precondition is not the monitor invariant");
  if (!term_equal(mp.post, psi)) return fail("-", "postcondition is not the monitor invariant");
  const MethodDef& def = p.method(ref);
  if (mp.annotations.size() != def.instructions.size()) return fail("-", "annotation count does not match method size");

  ExtendedMethod m;
  m.ref = ref;
  m.def = &def;
  m.annotations = mp.annotations;
  m.pre = mp.pre;
  m.post = mp.post;
  m.ghosts = ghosts;
  VcContext ctx{&p, &k, psi, {}};

  ++out.stats.vcs;
  auto d0 = rewrite_discharge(m.pre, entry_assertion(m, 0), opts.rewrite);
  add_rewrite(out.stats, d0);
  if (!d0.discharged) return fail("pre", "precondition does not establish the entry assertion");

  for (std::size_t l = 0; l < def.instructions.size(); ++l) {
    ++out.stats.vcs;
    if (fallback_preservation_check(m, l, ctx)) {
      ++out.stats.by_fallback;
      continue;
    }
    Term w;
    try {
      w = wp(m, l, ctx);
    } catch (const WpError& e) {
      return fail(std::to_string(l), e.what());
    }
    auto d = rewrite_discharge(m.annotations[l], w, opts.rewrite);
    add_rewrite(out.stats, d);
    if (!d.discharged) return fail(std::to_string(l), "verification condition not discharged");
  }
  return out;
}

bool state_class_ok(const Program& p, const Contract& k, std::string& why) {
  const ClassDecl* ss = p.find_class(kStateClass);
  if (!ss) {
    why = "missing security state class";
    return false;
  }
  if (!ss->is_final || ss->is_api || !ss->methods.empty() || (ss->superclass && *ss->superclass != kObject)) {
    why = "security state class must be a final, method-free subclass of Object";
    return false;
  }
  if (ss->fields.size() != k.state.size()) {
    why = "security state fields do not match the contract";
    return false;
  }
  for (const auto& d : k.state) {
    const FieldDecl* f = ss->find_field(d.name);
    if (!f || !f->is_static) {
      why = "security state field " + d.name + " missing";
      return false;
    }
    if (!value_equal(f->initial, d.initial)) {
      why = "security state field " + d.name + " has the wrong initial value";
      return false;
    }
  }
  return true;
}

}  // namespace

CheckResult check_bundle(const Program& p, const ProofBundle& proof, const Contract& k, const CheckOptions& opts) {
  CheckResult res;
  auto global = [&](std::string reason) {
    res.failures.push_back({"-", "-", std::move(reason)});
    return res;
  };
  if (!proof.program_digest.empty() && proof.program_digest != program_digest(p))
    res.warnings.push_back("program digest mismatch");
  if (!proof.contract_digest.empty() && proof.contract_digest != contract_digest(k))
    res.warnings.push_back("contract digest mismatch");

  try {
    check_contract_against(k, p);
  } catch (const ValidationError& e) {
    return global(e.what());
  }
  std::string why;
  if (!state_class_ok(p, k, why)) return global(why);

  GhostLayer layer;
  try {
    layer = embed_ghost(p, k);
  } catch (const ValidationError& e) {
    return global(e.what());
  }
  const Term psi = monitor_invariant(k);

  std::vector<MethodRef> refs;
  for (const auto& c : p.classes()) {
    if (c.is_api || c.builtin) continue;
    for (const auto& m : c.methods) refs.push_back({c.name, m.name});
  }
  for (const auto& mp : proof.methods) {
    bool known = false;
    for (const auto& r : refs) known = known || r == mp.ref;
    if (!known) return global("proof names unknown method " + mp.ref.qualified());
  }

  std::vector<MethodOutcome> outcomes(refs.size());
  auto work = [&](std::size_t i) {
    const MethodProof* mp = proof.find(refs[i]);
    if (!mp) {
      outcomes[i].failure = CheckFailure{refs[i].qualified(), "-", "no proof for method"};
      return;
    }
    auto g = layer.find(refs[i].qualified());
    try {
      outcomes[i] = check_method(p, k, psi, refs[i], *mp, g == layer.end() ? nullptr : &g->second, opts);
    } catch (const Error& e) {
      outcomes[i].failure = CheckFailure{refs[i].qualified(), "-", e.what()};
    }
  };
  unsigned jobs = std::max(1u, opts.jobs);
  if (jobs == 1 || refs.size() < 2) {
    for (std::size_t i = 0; i < refs.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(jobs, refs.size()); ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < refs.size(); i = next++) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& o : outcomes) {
    add_stats(res.stats, o.stats);
    if (o.failure) res.failures.push_back(*o.failure);
  }
  res.valid = res.failures.empty();
  return res;
}

CheckResult check_texts(std::string_view program, std::string_view contract, std::string_view proof,
                        const CheckOptions& opts) {
  Program p = parse_program(program);
  Contract k = parse_contract(contract);
  ProofBundle b = parse_proof(proof);
  return check_bundle(p, b, k, opts);
}

}  // namespace irm

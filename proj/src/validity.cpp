#include "irmpcc/validity.hpp"

#include <optional>

#include "irmpcc/error.hpp"

namespace irm {

namespace {

bool holds(const Term& a, const Configuration& c, std::string& why) {
  try {
    if (eval_assert(a, c)) return true;
    why = "assertion false";
  } catch (const Error& e) {
    why = std::string("assertion evaluation fault: ") + e.what();
  }
  return false;
}

}  // namespace

ValidityReport check_extended_validity(const Program& p, const ProofBundle& proof, const GhostLayer& layer,
                                       const Contract& k, ApiOracle& oracle, const RunOptions& opts) {
  ValidityReport rep;
  Machine m(p, oracle);
  m.check_final_statics(opts.check_finals);
  Configuration& c = m.mutable_config();
  for (const auto& d : k.state) c.ghosts[state_ghost(d.name)] = d.initial;

  const MethodProof* main_proof = proof.find(p.main());
  auto violation = [&](const std::string& method, std::string label, std::size_t idx, std::string why) {
    rep.valid = false;
    rep.method = method;
    rep.label = std::move(label);
    rep.config_index = idx;
    rep.reason = std::move(why);
  };
  if (!main_proof) {
    violation(p.main().qualified(), "-", 0, "no proof for main");
    return rep;
  }

  std::string why;
  if (!holds(main_proof->pre, c, why)) {
    violation(p.main().qualified(), "pre", 0, why);
    return rep;
  }

  auto ghost_tuple = [&] {
    std::vector<Value> v;
    for (const auto& d : k.state) {
      auto it = c.ghosts.find(state_ghost(d.name));
      v.push_back(it == c.ghosts.end() ? bottom() : it->second);
    }
    return v;
  };
  MonitorState q = initial_state(k);
  bool violation_matched = false;

  // Ghost code at the top frame's label, then its assertion.
  auto visit = [&](std::size_t idx) -> bool {
    if (c.frames.empty() || c.frames.back().exceptional) return true;
    const Frame& f = c.frames.back();
    const std::string q_name = f.ref.qualified();
    const GhostSlot* slot = nullptr;
    if (auto g = layer.find(q_name); g != layer.end()) {
      if (auto s = g->second.slots.find(f.pc); s != g->second.slots.end()) slot = &s->second;
    }
    if (slot) run_ghost(slot->pre, c, c.ghosts);
    const MethodProof* mp = proof.find(f.ref);
    if (!mp || f.pc >= mp->annotations.size()) {
      violation(q_name, std::to_string(f.pc), idx, "no annotation");
      return false;
    }
    if (!holds(mp->annotations[f.pc], c, why)) {
      violation(q_name, std::to_string(f.pc), idx, why);
      return false;
    }
    if (slot) run_ghost(slot->post, c, c.ghosts);
    return true;
  };

  auto compare = [&](const std::vector<Value>& g) {
    ++rep.ghost_checks;
    bool bottom_now = false;
    for (const auto& v : g) bottom_now = bottom_now || is_bottom(v);
    rep.ghost_bottom_seen = rep.ghost_bottom_seen || bottom_now;
    bool ok = true;
    if (!q.violated) {
      for (std::size_t i = 0; i < g.size(); ++i) ok = ok && value_equal(g[i], q.vars[i]);
    } else if (!violation_matched) {
      ok = bottom_now;
      violation_matched = true;
    }
    if (!ok) {
      if (rep.ghost_mismatches++ == 0) rep.ghost_detail = "ghost state diverges from " + to_string(q, k);
    }
  };
  auto fold = [&](const std::optional<SecurityAction>& a) {
    if (a && k.mentions(a->method.owner, a->method.name)) q = delta(k, q, *a);
  };

  std::size_t idx = 0;
  if (!visit(idx)) return rep;
  while (m.status() == RunStatus::Running) {
    if (rep.steps >= opts.fuel) {
      rep.status = RunStatus::FuelExhausted;
      rep.trace_accepted = !q.violated;
      return rep;
    }
    bool top_normal = !c.frames.empty() && !c.frames.back().exceptional;
    std::vector<Value> g = ghost_tuple();
    StepInfo info = m.step();
    ++rep.steps;
    ++idx;
    fold(info.pre);
    if (top_normal) compare(g);
    fold(info.post);
    if (m.status() == RunStatus::Running && !visit(idx)) break;
  }
  rep.status = m.status();
  rep.trace_accepted = !q.violated;
  if (rep.valid && rep.status == RunStatus::Returned) {
    if (!holds(main_proof->post, c, why)) violation(p.main().qualified(), "post", idx, why);
  }
  return rep;
}

}  // namespace irm

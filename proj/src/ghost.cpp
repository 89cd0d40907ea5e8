#include "irmpcc/ghost.hpp"

#include <sstream>

#include "irmpcc/error.hpp"

namespace irm {

std::string state_ghost(std::string_view var) { return std::string(var) + "#g"; }
std::string target_ghost(std::size_t site) { return "t#g@" + std::to_string(site); }
std::string arg_ghost(std::size_t site, std::size_t i) {
  return "a#g@" + std::to_string(site) + "." + std::to_string(i);
}
std::string result_ghost(std::size_t site) { return "r#g@" + std::to_string(site); }

Term monitor_invariant(const Contract& k) {
  std::vector<Term> parts;
  for (const auto& d : k.state) parts.push_back(eq(static_ref("SS", d.name), ghost(state_ghost(d.name))));
  return conj(parts);
}

namespace {

/// δ for one clause, one term per state variable.
std::vector<Term> clause_delta(const Contract& k, const EventClause& c, std::size_t site) {
  std::vector<Term> start;
  for (const auto& d : k.state) start.push_back(ghost(state_ghost(d.name)));
  std::vector<Term> guards;
  std::vector<std::vector<Term>> results;
  for (const auto& gc : c.commands) {
    std::vector<Term> cur = start;
    auto env = [&](const CExpr& e) -> Term {
      switch (e.kind) {
        case CKind::StateVar:
          return cur[e.index];
        case CKind::Param:
          return ghost(arg_ghost(site, e.index + 1));
        default:
          return ghost(result_ghost(site));
      }
    };
    guards.push_back(cexpr_condition(gc.guard, env));
    for (const auto& a : gc.updates) cur[a.var_index] = cexpr_value(a.value, env);
    results.push_back(std::move(cur));
  }
  std::vector<Term> out;
  for (std::size_t v = 0; v < k.state.size(); ++v) {
    Term acc = bot_lit();
    for (std::size_t i = guards.size(); i-- > 0;) acc = cond(guards[i], results[i][v], acc);
    out.push_back(acc);
  }
  return out;
}

std::optional<GhostUpdate> cascade(const Contract& k, Modifier mod, const std::string& method,
                                   const std::vector<std::string>& cands, bool is_virtual, std::size_t site) {
  bool any = false;
  for (const auto& c : cands) any = any || k.find(mod, c, method);
  if (!any) return std::nullopt;
  std::vector<std::vector<Term>> deltas;
  for (const auto& c : cands) {
    const EventClause* clause = k.find(mod, c, method);
    if (clause) {
      deltas.push_back(clause_delta(k, *clause, site));
    } else {
      std::vector<Term> id;
      for (const auto& d : k.state) id.push_back(ghost(state_ghost(d.name)));
      deltas.push_back(std::move(id));
    }
  }
  GhostUpdate u;
  for (std::size_t v = 0; v < k.state.size(); ++v) {
    Term acc;
    if (!is_virtual) {
      acc = deltas[0][v];
    } else {
      acc = ghost(state_ghost(k.state[v].name));
      for (std::size_t i = cands.size(); i-- > 0;) acc = cond(is(ghost(target_ghost(site)), cands[i]), deltas[i][v], acc);
    }
    u.assigns.emplace_back(state_ghost(k.state[v].name), acc);
  }
  return u;
}

[[noreturn]] void not_annotatable(const std::string& m, std::size_t l, const std::string& why) {
  throw ValidationError("not ghost-annotatable: " + m + " label " + std::to_string(l) + ": " + why);
}

}  // namespace

GhostLayer embed_ghost(const Program& p, const Contract& k) {
  GhostLayer layer;
  for (const auto& cls : p.classes()) {
    if (cls.is_api || cls.builtin) continue;
    for (const auto& m : cls.methods) {
      if (m.is_api) continue;
      const std::string qname = cls.name + "." + m.name;
      MethodGhosts mg;
      auto slot_free = [&](std::size_t l, bool pre) {
        auto it = mg.slots.find(l);
        if (it == mg.slots.end()) return true;
        return pre ? it->second.pre.empty() : it->second.post.empty();
      };
      for (std::size_t l = 0; l < m.instructions.size(); ++l) {
        const auto& ins = m.instructions[l];
        auto cands = relevant_dispatch(k, p, ins);
        if (cands.empty()) continue;
        const Handler* h = nullptr;
        for (const auto& cand : m.handlers) {
          if (cand.begin <= static_cast<std::int64_t>(l) && static_cast<std::int64_t>(l) < cand.end) {
            h = &cand;
            break;
          }
        }
        if (!h || h->begin != static_cast<std::int64_t>(l) || h->end != static_cast<std::int64_t>(l + 1) ||
            h->catch_class != kThrowable)
          not_annotatable(qname, l, "the first handler covering the call must be (L, L+1, T, any)");
        if (l + 1 >= m.instructions.size()) not_annotatable(qname, l, "call is the last instruction");
        GhostSite site;
        site.invoke = l;
        site.handler = static_cast<std::size_t>(h->target);
        site.is_virtual = ins.op == Opcode::InvokeVirtual;
        const MethodDef& target = p.static_target(ins);
        site.arity = target.arity;

        GhostUpdate bind;
        std::size_t depth = site.arity + (site.is_virtual ? 1 : 0);
        std::size_t slot_i = depth;
        if (site.is_virtual) bind.assigns.emplace_back(target_ghost(l), stack(static_cast<std::int64_t>(--slot_i)));
        for (std::size_t i = 1; i <= site.arity; ++i)
          bind.assigns.emplace_back(arg_ghost(l, i), stack(static_cast<std::int64_t>(--slot_i)));

        if (!slot_free(l, true)) not_annotatable(qname, l, "ghost slots of two calls overlap");
        auto& pre = mg.slots[l].pre;
        if (!bind.assigns.empty()) pre.push_back(std::move(bind));
        if (auto b = cascade(k, Modifier::Before, ins.member, cands, site.is_virtual, l)) pre.push_back(std::move(*b));

        if (auto a = cascade(k, Modifier::After, ins.member, cands, site.is_virtual, l)) {
          if (!slot_free(l + 1, false)) not_annotatable(qname, l, "ghost slots of two calls overlap");
          auto& post = mg.slots[l + 1].post;
          site.has_after = true;
          if (target.returns_value) {
            site.binds_result = true;
            post.push_back(GhostUpdate{{{result_ghost(l), stack(0)}}});
          }
          post.push_back(std::move(*a));
        }
        if (auto e = cascade(k, Modifier::Exceptional, ins.member, cands, site.is_virtual, l)) {
          if (!slot_free(site.handler, false)) not_annotatable(qname, l, "ghost slots of two calls overlap");
          site.has_exn = true;
          mg.slots[site.handler].post.push_back(std::move(*e));
        }
        mg.sites.push_back(site);
      }
      if (!mg.sites.empty()) layer.emplace(qname, std::move(mg));
    }
  }
  return layer;
}

Term ghost_wp(const GhostUpdate& u, const Term& a) {
  std::vector<std::pair<Term, Term>> map;
  for (const auto& [name, rhs] : u.assigns) map.emplace_back(ghost(name), rhs);
  return subst(a, map);
}

Term ghost_wp(const std::vector<GhostUpdate>& updates, const Term& a) {
  Term acc = a;
  for (std::size_t i = updates.size(); i-- > 0;) acc = ghost_wp(updates[i], acc);
  return acc;
}

void run_ghost(const std::vector<GhostUpdate>& updates, const StateView& view, std::map<std::string, Value>& store) {
  for (const auto& u : updates) {
    std::vector<Value> vals;
    for (const auto& [_, rhs] : u.assigns) vals.push_back(eval_expr(rhs, view));
    for (std::size_t i = 0; i < vals.size(); ++i) store[u.assigns[i].first] = vals[i];
  }
}

std::string print_ghost_layer(const GhostLayer& g) {
  std::ostringstream out;
  for (const auto& [m, mg] : g) {
    out << "method " << m << "\n";
    for (const auto& [l, slot] : mg.slots) {
      for (int which = 0; which < 2; ++which) {
        const auto& ups = which == 0 ? slot.pre : slot.post;
        for (std::size_t i = 0; i < ups.size(); ++i)
          for (const auto& [name, rhs] : ups[i].assigns)
            out << l << (which == 0 ? " pre " : " post ") << i << " " << name << " " << to_string(rhs) << "\n";
      }
    }
  }
  return out.str();
}

GhostLayer parse_ghost_layer(std::string_view text) {
  GhostLayer g;
  MethodGhosts* cur = nullptr;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "method") {
      std::string name;
      if (!(ls >> name)) throw ParseError("expected method name", no, 1);
      cur = &g[name];
      continue;
    }
    if (!cur) throw ParseError("ghost update before any `method` line", no, 1);
    std::size_t label = 0, idx = 0;
    std::string which, name;
    try {
      label = std::stoul(first);
    } catch (const std::exception&) {
      throw ParseError("expected label", no, 1);
    }
    if (!(ls >> which >> idx >> name) || (which != "pre" && which != "post"))
      throw ParseError("expected `L pre|post k name expr`", no, 1);
    std::string rest;
    std::getline(ls, rest);
    Term rhs;
    try {
      rhs = parse_expression(rest);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), no, e.column());
    }
    auto& ups = which == "pre" ? cur->slots[label].pre : cur->slots[label].post;
    if (idx > ups.size()) throw ParseError("ghost update index out of order", no, 1);
    if (idx == ups.size()) ups.emplace_back();
    ups[idx].assigns.emplace_back(name, rhs);
  }
  return g;
}

}  // namespace irm

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "irmpcc/assertion.hpp"
#include "irmpcc/bytecode.hpp"
#include "irmpcc/conspec.hpp"

namespace irm {

/// Simultaneous assignment to ghost variables.
struct GhostUpdate {
  std::vector<std::pair<std::string, Term>> assigns;
};

/// Ghost code around one label: `pre` runs on arrival, before the label's
/// assertion is checked; `post` runs after the check, before the instruction.
struct GhostSlot {
  std::vector<GhostUpdate> pre;
  std::vector<GhostUpdate> post;
};

/// Per relevant call site, as found in the inlined program.
struct GhostSite {
  std::size_t invoke = 0;
  std::size_t handler = 0;
  bool is_virtual = false;
  std::size_t arity = 0;
  bool has_after = false;   ///< after-cascade is non-trivial
  bool has_exn = false;     ///< exceptional cascade is non-trivial
  bool binds_result = false;
};

struct MethodGhosts {
  std::map<std::size_t, GhostSlot> slots;
  std::vector<GhostSite> sites;
};

/// Keyed by qualified method name.
using GhostLayer = std::map<std::string, MethodGhosts>;

std::string state_ghost(std::string_view var);
std::string target_ghost(std::size_t site);
std::string arg_ghost(std::size_t site, std::size_t i);  ///< i is 1-based
std::string result_ghost(std::size_t site);

/// The monitor invariant: SS.x = x#g for every security-state variable.
Term monitor_invariant(const Contract& k);

/// The symbolic ghost monitor for an already inlined program. Each relevant
/// invoke needs a first-matching handler (L, L+1, T, Throwable); otherwise
/// ValidationError names the label.
GhostLayer embed_ghost(const Program& inlined, const Contract& k);

/// wp of a list of updates: the last one is substituted first.
Term ghost_wp(const std::vector<GhostUpdate>& updates, const Term& a);
Term ghost_wp(const GhostUpdate& u, const Term& a);

/// Executes updates against the ghost store of `view`'s owner. Right-hand
/// sides are evaluated in `view`; results are written into `store`.
void run_ghost(const std::vector<GhostUpdate>& updates, const StateView& view,
               std::map<std::string, Value>& store);

/// Lines `method C.m` followed by `L pre|post k name <expr>`.
std::string print_ghost_layer(const GhostLayer& g);
GhostLayer parse_ghost_layer(std::string_view text);

}  // namespace irm

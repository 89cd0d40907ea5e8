#pragma once

#include <cstddef>
#include <string>

#include "irmpcc/conspec.hpp"
#include "irmpcc/ghost.hpp"
#include "irmpcc/interpreter.hpp"
#include "irmpcc/proofgen.hpp"

namespace irm {

/// Outcome of running an extended program with its annotations checked.
struct ValidityReport {
  bool valid = true;
  std::string method;  ///< first violation site
  std::string label;   ///< instruction label, "pre" or "post"
  std::size_t config_index = 0;
  std::string reason;
  RunStatus status = RunStatus::Running;
  std::size_t steps = 0;

  // Co-run of the ghost store against the automaton over the trace so far.
  std::size_t ghost_checks = 0;
  std::size_t ghost_mismatches = 0;
  std::string ghost_detail;  ///< first mismatch
  bool ghost_bottom_seen = false;
  bool trace_accepted = true;
};

/// Runs `p` executing the ghost layer into the configuration's ghost store
/// and checks pre(main) at C0, A_pc at every configuration whose top frame is
/// normal, and post(main) after a normal return. Exit-terminated runs skip
/// the postcondition.
ValidityReport check_extended_validity(const Program& p, const ProofBundle& proof, const GhostLayer& layer,
                                       const Contract& k, ApiOracle& oracle, const RunOptions& opts = {});

}  // namespace irm

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "irmpcc/bytecode.hpp"
#include "irmpcc/conspec.hpp"

namespace irm {

inline constexpr std::string_view kStateClass = "SS";

/// Layout of one rewritten call site, in labels of the inlined method.
struct CallSite {
  std::size_t begin = 0;      ///< first label of the block
  std::size_t invoke = 0;     ///< the original invoke
  std::size_t handler = 0;    ///< entry of the dedicated exception handler
  std::size_t end = 0;        ///< one past the block
  std::optional<std::size_t> receiver_local;
  std::vector<std::size_t> arg_locals;
  std::optional<std::size_t> result_local;
};

struct InlinedProgram {
  Program program;
  /// Per method (qualified name): inclusive label ranges of inlined blocks.
  std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> inlined_labels;
  std::map<std::string, std::vector<CallSite>> call_sites;
};

/// Where guard and update code finds each name.
struct GuardEnv {
  std::vector<std::size_t> arg_locals;
  std::optional<std::size_t> result_local;
};

/// Leaves 0 or 1 on the stack. Touches no SS field and raises nothing.
std::vector<Instruction> compile_guard(const CExprPtr& g, const GuardEnv& env);
/// Net stack effect zero; writes only SS fields.
std::vector<Instruction> compile_update(const std::vector<Assignment>& stmts, const Contract& k,
                                        const GuardEnv& env);

/// Rewrites every security-relevant call site into a monitored block and adds
/// the final class SS holding the security state. Throws ValidationError if
/// the program already has a class SS or the contract does not fit its API.
InlinedProgram inline_program(const Program& p, const Contract& k);

/// Rebuilds call-site layout from an inlined program and its label ranges,
/// so a proof can be produced from files alone. Throws ValidationError when a
/// range does not hold exactly one relevant call in the inliner's shape.
InlinedProgram recover_inlined(Program inlined, const Contract& k,
                               std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> ranges);

/// Sidecar format: `Class.method: L1-L2` per range.
std::string print_inlined_labels(const InlinedProgram& ip);
std::map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> parse_inlined_labels(std::string_view text);

}  // namespace irm

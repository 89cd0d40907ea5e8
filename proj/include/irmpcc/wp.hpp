#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "irmpcc/assertion.hpp"
#include "irmpcc/bytecode.hpp"
#include "irmpcc/conspec.hpp"
#include "irmpcc/error.hpp"
#include "irmpcc/ghost.hpp"

namespace irm {

struct WpOptions {
  /// Use `shift(A) and s0 = l_n` for astore instead of the substitution form.
  bool conjunctive_astore = false;
};

/// A method with one assertion per label, its pre/post, its slice of the
/// ghost layer and, on the producer side, the inlined label set.
struct ExtendedMethod {
  MethodRef ref;
  const MethodDef* def = nullptr;
  std::vector<Term> annotations;
  Term pre;
  Term post;
  const MethodGhosts* ghosts = nullptr;
  std::vector<bool> inlined;  ///< empty when unknown (consumer side)
};

/// Everything the wp rules need beyond the method itself.
struct VcContext {
  const Program* program = nullptr;
  const Contract* contract = nullptr;
  Term invariant;  ///< the monitor invariant
  WpOptions options;
};

/// Raised when an opcode has no wp rule or an annotation has an unsupported shape.
class WpError : public Error {
 public:
  WpError(const std::string& what, std::size_t label) : Error(what), label_(label) {}
  std::size_t label() const { return label_; }

 private:
  std::size_t label_;
};

/// A_L with the label's pre-slot ghost updates folded in: what a predecessor must establish.
Term entry_assertion(const ExtendedMethod& m, std::size_t label);

/// The weakest precondition of label L, including post-slot ghost updates at L.
Term wp(const ExtendedMethod& m, std::size_t label, const VcContext& ctx);

/// wp of a call site: Psi and the frame-preserved parts of the successor and
/// handler annotations. Throws WpError("unsupported post-call annotation").
Term wp_invoke(const ExtendedMethod& m, std::size_t label, const VcContext& ctx);

struct VerificationCondition {
  MethodRef method;
  std::optional<std::size_t> label;  ///< nullopt for the entry condition
  Term antecedent;
  Term succedent;
};

/// pre => Entry(0), then A_L => wp(L) for every label: 1 + |I| conditions.
std::vector<VerificationCondition> vcgen(const ExtendedMethod& m, const VcContext& ctx);

/// True when the label can be accepted without a wp row: it carries Psi,
/// has no post-slot ghost code, is not a putstatic to SS or a relevant call,
/// and every control successor's entry assertion is Psi.
bool fallback_preservation_check(const ExtendedMethod& m, std::size_t label, const VcContext& ctx);

/// Labels control may reach from L, as (label or nullopt for leaving the method).
std::vector<std::optional<std::size_t>> control_successors(const ExtendedMethod& m, std::size_t label,
                                                           const VcContext& ctx);

/// `C.m:L |- ante ==> succ`
std::string to_string(const VerificationCondition& vc);

}  // namespace irm

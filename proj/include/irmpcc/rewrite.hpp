#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "irmpcc/assertion.hpp"

namespace irm {

/// Termination measure of an implication: the multiset of (size, atom count)
/// of every formula-level atomic formula, connectives counting as (0, 0).
/// Eliminating an equality drops its own element and leaves the others'
/// weights unchanged or smaller.
struct RewriteMeasure {
  struct Weight {
    std::uint64_t size = 0;
    std::uint64_t atoms = 0;
    std::uint64_t count = 0;  ///< multiplicity
  };
  std::size_t eliminable = 0;  ///< reported, not compared
  std::vector<Weight> weights;  ///< distinct weights, largest first
};

/// Strict Dershowitz-Manna comparison of the weight multisets.
bool measure_less(const RewriteMeasure& a, const RewriteMeasure& b);

struct RewriteStats {
  std::size_t applications = 0;
  std::size_t eliminations = 0;
  std::size_t sweeps = 0;
  std::size_t measure_violations = 0;
};

struct RewriteOptions {
  bool track_measure = true;
  std::size_t max_sweeps = 16;
};

struct DischargeResult {
  bool discharged = false;
  Term residual;  ///< what the succedent reduced to
  RewriteStats stats;
};

/// Tries to rewrite `ante => succ` to tt. Never throws on well-formed terms.
DischargeResult rewrite_discharge(const Term& ante, const Term& succ, const RewriteOptions& opts = {});

/// Single contextual simplification sweep under the given assumptions. Exposed for tests.
Term simplify(const Term& t, const std::vector<Term>& assumptions = {});

/// Orders Eq operands canonically everywhere. Does not change meaning or measure.
Term canonical(const Term& t);

RewriteMeasure measure_of(const std::vector<Term>& facts, const Term& goal);

}  // namespace irm

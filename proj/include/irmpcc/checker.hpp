#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "irmpcc/bytecode.hpp"
#include "irmpcc/conspec.hpp"
#include "irmpcc/proofgen.hpp"
#include "irmpcc/rewrite.hpp"

namespace irm {

struct CheckFailure {
  std::string method;                ///< qualified name, or "-" for program-level checks
  std::string label;   ///< instruction label, "pre" for the entry condition, "-" for method-level checks
  std::string reason;
};

/// `INVALID <method> <label> <reason>`
std::string to_string(const CheckFailure& f);

struct CheckOptions {
  unsigned jobs = 1;
  RewriteOptions rewrite{false, 16};
};

struct CheckStats {
  std::size_t vcs = 0;
  std::size_t by_fallback = 0;
  std::size_t by_rewrite = 0;
  RewriteStats rewrite;
};

struct CheckResult {
  bool valid = false;
  std::vector<CheckFailure> failures;  ///< first failure per method, in method order
  std::vector<std::string> warnings;
  CheckStats stats;
};

/// Validates a proof against a program and contract without executing any
/// client code. The ghost layer is regenerated from the contract.
CheckResult check_bundle(const Program& p, const ProofBundle& proof, const Contract& k, const CheckOptions& opts = {});

/// Parses the three texts and checks. Throws ParseError/ValidationError on malformed input.
CheckResult check_texts(std::string_view program, std::string_view contract, std::string_view proof,
                        const CheckOptions& opts = {});

}  // namespace irm

#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "irmpcc/assertion.hpp"
#include "irmpcc/bytecode.hpp"
#include "irmpcc/conspec.hpp"
#include "irmpcc/ghost.hpp"
#include "irmpcc/inliner.hpp"

namespace irm {

struct MethodProof {
  MethodRef ref;
  Term pre;
  Term post;
  std::vector<Term> annotations;
};

struct ProofBundle {
  std::string program_digest;
  std::string contract_digest;
  std::vector<MethodProof> methods;

  const MethodProof* find(const MethodRef& ref) const;
};

/// Assertion array for one method of an inlined, ghost-annotated program.
/// Labels outside the inlined ranges carry the invariant; inside a block the
/// annotations are weakest preconditions computed back from the block exits.
std::vector<Term> annotate_method(const Program& inlined, const MethodRef& ref,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& ranges,
                                  const std::vector<CallSite>& sites, const MethodGhosts* ghosts,
                                  const Contract& k);

/// Proof for every program (non-API) method.
ProofBundle generate_proof(const InlinedProgram& ip, const Contract& k);

/// Hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string program_digest(const Program& p);
std::string contract_digest(const Contract& k);

std::string print_proof(const ProofBundle& b);
ProofBundle parse_proof(std::string_view text);

/// Bundle directory: program.mjb, contract.conspec, proof.prf.
struct BundleFiles {
  std::string program;
  std::string contract;
  std::string proof;
};
void write_bundle(const std::filesystem::path& dir, const Program& p, const Contract& k, const ProofBundle& b);
BundleFiles read_bundle(const std::filesystem::path& dir);

}  // namespace irm

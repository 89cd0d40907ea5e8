#include "irmpcc/proofgen.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <sstream>

#include "irmpcc/assembly.hpp"
#include "irmpcc/error.hpp"
#include "irmpcc/wp.hpp"

namespace irm {

const MethodProof* ProofBundle::find(const MethodRef& ref) const {
  for (const auto& m : methods)
    if (m.ref == ref) return &m;
  return nullptr;
}

namespace {

const GhostSite* ghost_site(const MethodGhosts* g, std::size_t invoke) {
  if (!g) return nullptr;
  for (const auto& s : g->sites)
    if (s.invoke == invoke) return &s;
  return nullptr;
}

// Psi plus the local/ghost correspondences a cascade after the call relies on.
Term with_bindings(const Term& psi, const CallSite& site, bool needed) {
  auto parts = conjuncts(psi);
  if (needed) {
    if (site.receiver_local)
      parts.push_back(eq(local(static_cast<std::int64_t>(*site.receiver_local)), ghost(target_ghost(site.invoke))));
    for (std::size_t i = 0; i < site.arg_locals.size(); ++i)
      parts.push_back(eq(local(static_cast<std::int64_t>(site.arg_locals[i])), ghost(arg_ghost(site.invoke, i + 1))));
  }
  return conj(parts);
}

}  // namespace

std::vector<Term> annotate_method(const Program& inlined, const MethodRef& ref,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& ranges,
                                  const std::vector<CallSite>& sites, const MethodGhosts* ghosts,
                                  const Contract& k) {
  const MethodDef& def = inlined.method(ref);
  const std::size_t n = def.instructions.size();
  const Term psi = monitor_invariant(k);

  ExtendedMethod m;
  m.ref = ref;
  m.def = &def;
  m.annotations.assign(n, psi);
  m.pre = psi;
  m.post = psi;
  m.ghosts = ghosts;
  m.inlined.assign(n, false);
  for (const auto& [b, e] : ranges) {
    if (b > e || e >= n) throw ValidationError(ref.qualified() + ": inlined range out of bounds");
    for (std::size_t l = b; l <= e; ++l) m.inlined[l] = true;
  }
  VcContext ctx{&inlined, &k, psi, {}};

  for (const auto& site : sites) {
    const std::size_t last = site.end - 1;
    bool contiguous = site.begin <= site.invoke && site.invoke < site.handler && site.handler <= last && last < n;
    for (std::size_t l = site.begin; contiguous && l <= last; ++l) contiguous = m.inlined[l];
    if (!contiguous) throw ValidationError(ref.qualified() + ": non-contiguous inlined block at " + std::to_string(site.invoke));

    const GhostSite* gs = ghost_site(ghosts, site.invoke);
    m.annotations[site.invoke + 1] = with_bindings(psi, site, gs && gs->has_after);
    m.annotations[site.handler] = with_bindings(psi, site, gs && gs->has_exn);

    for (std::size_t l = last; l > site.begin; --l) {
      if (l == site.invoke + 1 || l == site.handler) continue;
      for (const auto& s : control_successors(m, l, ctx)) {
        if (s && *s >= site.begin && *s <= l) {
          throw ValidationError(ref.qualified() + ": block exit at " + std::to_string(l) + " has an unannotated successor");
        }
      }
      m.annotations[l] = wp(m, l, ctx);
    }
    if (site.begin == site.invoke) m.annotations[site.begin] = wp(m, site.begin, ctx);
  }
  return m.annotations;
}

ProofBundle generate_proof(const InlinedProgram& ip, const Contract& k) {
  ProofBundle b;
  b.program_digest = program_digest(ip.program);
  b.contract_digest = contract_digest(k);
  const GhostLayer layer = embed_ghost(ip.program, k);
  const Term psi = monitor_invariant(k);
  static const std::vector<std::pair<std::size_t, std::size_t>> no_ranges;
  static const std::vector<CallSite> no_sites;
  for (const auto& c : ip.program.classes()) {
    if (c.is_api || c.builtin) continue;
    for (const auto& def : c.methods) {
      MethodRef ref{c.name, def.name};
      const std::string q = ref.qualified();
      auto r = ip.inlined_labels.find(q);
      auto s = ip.call_sites.find(q);
      auto g = layer.find(q);
      MethodProof mp{ref, psi, psi, {}};
      mp.annotations = annotate_method(ip.program, ref, r == ip.inlined_labels.end() ? no_ranges : r->second,
                                       s == ip.call_sites.end() ? no_sites : s->second,
                                       g == layer.end() ? nullptr : &g->second, k);
      b.methods.push_back(std::move(mp));
    }
  }
  return b;
}

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string program_digest(const Program& p) { return sha256_hex(print_program(p)); }
std::string contract_digest(const Contract& k) { return sha256_hex(print_contract(k)); }

std::string print_proof(const ProofBundle& b) {
  std::ostringstream os;
  os << "program " << b.program_digest << "\n";
  os << "contract " << b.contract_digest << "\n";
  for (const auto& m : b.methods) {
    os << "method " << m.ref.qualified() << " pre " << to_string(m.pre) << " post " << to_string(m.post) << "\n";
    for (std::size_t l = 0; l < m.annotations.size(); ++l) os << l << ": " << to_string(m.annotations[l]) << "\n";
  }
  return os.str();
}

namespace {

// End of the s-expression starting at `pos` (atoms end at whitespace).
std::size_t sexpr_end(std::string_view s, std::size_t pos, std::size_t line) {
  int depth = 0;
  bool in_str = false;
  for (std::size_t i = pos; i < s.size(); ++i) {
    char c = s[i];
    if (in_str) {
      if (c == '\\') ++i;
      else if (c == '"') in_str = false;
      continue;
    }
    if (c == '"') in_str = true;
    else if (c == '(') ++depth;
    else if (c == ')') {
      if (--depth < 0) throw ParseError("unbalanced parenthesis", line, i + 1);
      if (depth == 0) return i + 1;
    } else if (depth == 0 && (c == ' ' || c == '\t')) {
      return i;
    }
  }
  if (depth != 0 || in_str) throw ParseError("unterminated assertion", line, s.size());
  return s.size();
}

Term parse_at(std::string_view text, std::size_t line) {
  try {
    return parse_assertion(text);
  } catch (const ParseError& e) {
    throw ParseError(std::string("bad assertion: ") + e.what(), line, e.column());
  }
}

MethodRef split_ref(std::string_view q, std::size_t line) {
  auto dot = q.rfind('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == q.size()) throw ParseError("bad method name", line, 1);
  return {std::string(q.substr(0, dot)), std::string(q.substr(dot + 1))};
}

}  // namespace

ProofBundle parse_proof(std::string_view text) {
  ProofBundle b;
  std::size_t line_no = 0;
  MethodProof* cur = nullptr;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto starts = [&](std::string_view p) { return line.substr(0, p.size()) == p; };
    if (starts("program ")) {
      b.program_digest = std::string(line.substr(8));
    } else if (starts("contract ")) {
      b.contract_digest = std::string(line.substr(9));
    } else if (starts("method ")) {
      std::size_t sp = line.find(' ', 7);
      if (sp == std::string_view::npos || line.substr(sp, 5) != " pre ") throw ParseError("expected pre", line_no, 8);
      MethodProof mp;
      mp.ref = split_ref(line.substr(7, sp - 7), line_no);
      if (b.find(mp.ref)) throw ParseError("duplicate method " + mp.ref.qualified(), line_no, 8);
      std::size_t a = sp + 5;
      std::size_t e = sexpr_end(line, a, line_no);
      mp.pre = parse_at(line.substr(a, e - a), line_no);
      if (line.substr(e, 6) != " post ") throw ParseError("expected post", line_no, e + 1);
      mp.post = parse_at(line.substr(e + 6), line_no);
      b.methods.push_back(std::move(mp));
      cur = &b.methods.back();
    } else {
      std::size_t colon = line.find(':');
      if (!cur || colon == std::string_view::npos) throw ParseError("unexpected line", line_no, 1);
      std::size_t label = 0;
      std::string_view num = line.substr(0, colon);
      if (num.empty()) throw ParseError("expected label", line_no, 1);
      for (char c : num) {
        if (c < '0' || c > '9') throw ParseError("expected label", line_no, 1);
        label = label * 10 + static_cast<std::size_t>(c - '0');
      }
      if (label != cur->annotations.size()) throw ParseError("labels must be consecutive", line_no, 1);
      cur->annotations.push_back(parse_at(line.substr(colon + 1), line_no));
    }
  }
  return b;
}

void write_bundle(const std::filesystem::path& dir, const Program& p, const Contract& k, const ProofBundle& b) {
  std::filesystem::create_directories(dir);
  auto put = [&](const char* name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary);
    out << body;
    if (!out) throw Error("cannot write " + (dir / name).string());
  };
  put("program.mjb", print_program(p));
  put("contract.conspec", print_contract(k));
  put("proof.prf", print_proof(b));
}

BundleFiles read_bundle(const std::filesystem::path& dir) {
  auto get = [&](const char* name) {
    std::ifstream in(dir / name, std::ios::binary);
    if (!in) throw Error("cannot read " + (dir / name).string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  return {get("program.mjb"), get("contract.conspec"), get("proof.prf")};
}

}  // namespace irm

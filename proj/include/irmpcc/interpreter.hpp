#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "irmpcc/assertion.hpp"
#include "irmpcc/bytecode.hpp"
#include "irmpcc/conspec.hpp"

namespace irm {

struct HeapObject {
  std::string cls;
  std::map<std::string, Value> fields;
};

/// A normal activation record, or an exceptional one carrying only the
/// thrown location.
struct Frame {
  bool exceptional = false;
  Loc exn;
  MethodRef ref;
  const MethodDef* method = nullptr;
  std::size_t pc = 0;
  std::vector<Value> stack;  ///< back() is s0
  std::vector<std::optional<Value>> locals;

  Value s(std::size_t i) const { return i < stack.size() ? stack[stack.size() - 1 - i] : bottom(); }
};

/// Heap, static fields, frame stack and the ghost store. Also a StateView
/// over the top frame so assertions can be evaluated directly against it.
class Configuration : public StateView {
 public:
  const Program* program = nullptr;
  std::vector<HeapObject> heap;  ///< Loc{i} is heap[i - 1]
  std::map<std::pair<std::string, std::string>, Value> statics;
  std::vector<Frame> frames;
  std::map<std::string, Value> ghosts;

  Loc allocate(const std::string& cls);
  const HeapObject& object(Loc l) const;
  HeapObject& object(Loc l);
  bool top_is_normal() const { return !frames.empty() && !frames.back().exceptional; }

  Value stack(std::int64_t i) const override;
  Value local(std::int64_t i) const override;
  Value static_field(const std::string& c, const std::string& f) const override;
  Value field(Loc l, const std::string& f) const override;
  Value ghost(const std::string& g) const override;
  bool instance_of(Loc l, const std::string& c) const override;
};

/// Result of one API call.
struct OracleOutcome {
  bool throws = false;
  Value ret;                  ///< when !throws and the method returns a value
  std::string new_class;      ///< allocate a fresh object of this class as the result
  std::string exn_class;      ///< when throws
};

class ApiOracle {
 public:
  virtual ~ApiOracle() = default;
  /// `resolved` is the API definition chosen by dispatch. The oracle may
  /// mutate the heap except for static fields of final classes.
  virtual OracleOutcome call(const MethodRef& resolved, const MethodDef& def,
                             const std::vector<Value>& args, Configuration& c) = 0;
};

/// Pseudo-random outcomes of the declared result type, occasional
/// exceptions, and scrambling of object fields and non-final statics.
class SeededOracle : public ApiOracle {
 public:
  struct Options {
    double exception_rate = 0.15;
    double scramble_rate = 0.3;
    std::int64_t int_min = -2;
    std::int64_t int_max = 3;
    std::vector<std::string> strings{"", "a", "b"};
  };
  explicit SeededOracle(std::uint64_t seed);
  SeededOracle(std::uint64_t seed, Options opts);
  OracleOutcome call(const MethodRef& resolved, const MethodDef& def, const std::vector<Value>& args,
                     Configuration& c) override;

 private:
  std::mt19937_64 rng_;
  Options opts_;
};

/// Outcomes consumed in call order; running out is an error.
class ScriptedOracle : public ApiOracle {
 public:
  explicit ScriptedOracle(std::vector<OracleOutcome> script) : script_(std::move(script)) {}
  OracleOutcome call(const MethodRef& resolved, const MethodDef& def, const std::vector<Value>& args,
                     Configuration& c) override;
  std::size_t consumed() const { return next_; }

 private:
  std::vector<OracleOutcome> script_;
  std::size_t next_ = 0;
};

/// Script lines: `ret <value>`, `ret new <Class>`, `throw <Class>`. Blank
/// lines and `;` comments are skipped.
std::vector<OracleOutcome> parse_oracle_script(std::string_view text);

enum class RunStatus { Running, Returned, Exited, Uncaught, FuelExhausted };
std::string_view to_string(RunStatus s);

/// What a single transition did, for observers.
struct StepInfo {
  MethodRef method;         ///< method of the top frame before the step
  std::size_t pc = 0;       ///< its pc (meaningless for exceptional frames)
  bool from_exceptional = false;
  std::optional<SecurityAction> pre;   ///< API call issued at the pre-state
  std::optional<SecurityAction> post;  ///< its normal or exceptional return at the post-state
};

/// Small-step machine. Throws MachineFault on type errors, underflow and
/// null dereference; these are never policy verdicts.
class Machine {
 public:
  Machine(const Program& p, ApiOracle& oracle);

  const Configuration& config() const { return c_; }
  Configuration& mutable_config() { return c_; }
  RunStatus status() const { return status_; }
  const Value& result() const { return result_; }
  std::optional<std::int64_t> exit_code() const { return exit_code_; }

  /// One transition. Precondition: status() == Running.
  StepInfo step();

  /// Checks on every step: static fields of final classes
  /// change only through putstatic.
  void check_final_statics(bool on) { check_finals_ = on; }

 private:
  void invoke(const Instruction& ins, StepInfo& info);
  void throw_from_top(Loc l);
  void unwind(StepInfo& info);

  const Program& p_;
  ApiOracle& oracle_;
  Configuration c_;
  RunStatus status_ = RunStatus::Running;
  Value result_;
  std::optional<std::int64_t> exit_code_;
  bool check_finals_ = false;
};

struct RunOptions {
  std::size_t fuel = 100000;
  bool keep_configs = false;
  bool check_finals = true;
};

struct Execution {
  RunStatus status = RunStatus::Running;
  std::size_t steps = 0;
  Value result;
  std::optional<std::int64_t> exit_code;
  std::vector<StepInfo> records;
  std::vector<Configuration> configs;  ///< C0..Cn when keep_configs
  /// Every API action in order, named by dynamic resolution.
  std::vector<SecurityAction> api_actions;
};

Execution run(const Program& p, ApiOracle& oracle, const RunOptions& opts = {});

/// The security-relevant trace: API actions on methods the contract mentions.
std::vector<SecurityAction> srt(const Execution& e, const Contract& k);

}  // namespace irm

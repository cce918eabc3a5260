#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "causal/trace.hpp"

namespace causal {

/// Tagged dynamic value forming test arguments; the unit of perturbation and
/// of distance measurement.
///
/// Canonical JSON encoding (used for the wire format and as the dedup
/// identity key): Text -> string, Integer -> integral number, Real -> number,
/// Boolean -> bool, Sequence -> array, Record -> object with insertion order
/// preserved.
class InputValue {
public:
  enum class Kind { text, integer, real, boolean, sequence, record };

  using Sequence = std::vector<InputValue>;
  using Field = std::pair<std::string, InputValue>;
  using Record = std::vector<Field>;

  InputValue() : v_(std::int64_t{0}) {}

  static InputValue text(std::string s) { return InputValue(std::move(s)); }
  static InputValue integer(std::int64_t i) { return InputValue(i); }
  // -0.0 is normalized to 0.0 so that value equality matches distance zero.
  static InputValue real(double r);
  static InputValue boolean(bool b) { return InputValue(b); }
  static InputValue sequence(Sequence elems) { return InputValue(std::move(elems)); }
  static InputValue record(Record fields) { return InputValue(std::move(fields)); }

  Kind kind() const noexcept { return static_cast<Kind>(v_.index()); }
  const char* kind_name() const noexcept;

  const std::string& as_text() const { return std::get<std::string>(v_); }
  std::int64_t as_integer() const { return std::get<std::int64_t>(v_); }
  double as_real() const { return std::get<double>(v_); }
  bool as_boolean() const { return std::get<bool>(v_); }
  const Sequence& as_sequence() const { return std::get<Sequence>(v_); }
  const Record& as_record() const { return std::get<Record>(v_); }

  Json to_json() const;
  /// Throws EngineError("decode") on values outside the model (e.g. unsigned
  /// integers beyond int64, null).
  static InputValue from_json(const Json& j);

  /// Structural equality. Record fields compare by name, order-insensitive,
  /// so that equality coincides with distance zero.
  bool operator==(const InputValue& other) const;
  bool operator!=(const InputValue& other) const { return !(*this == other); }

private:
  explicit InputValue(std::string s) : v_(std::move(s)) {}
  explicit InputValue(std::int64_t i) : v_(i) {}
  explicit InputValue(double r) : v_(r) {}
  explicit InputValue(bool b) : v_(b) {}
  explicit InputValue(Sequence s) : v_(std::move(s)) {}
  explicit InputValue(Record r) : v_(std::move(r)) {}

  std::variant<std::string, std::int64_t, double, bool, Sequence, Record> v_;
};

/// Compact canonical encoding, the identity key used for deduplication.
std::string canonical_json(const InputValue& v);
std::string canonical_args_json(const std::vector<InputValue>& args);

/// An argument vector plus the oracle the harness applies to it.
struct TestSpec {
  std::string test_id;
  std::vector<InputValue> args;
  std::string oracle_id;

  /// Two specs are comparable for distance only when oracle and arity match.
  bool comparable_with(const TestSpec& other) const {
    return oracle_id == other.oracle_id && args.size() == other.args.size();
  }

  Json to_json() const;
  static TestSpec from_json(const Json& j);
};

bool same_args(const TestSpec& a, const TestSpec& b);

/// Checks all type invariants (non-empty args, no NaN or infinite reals,
/// unique record field names, well-formed UTF-8 text) and returns the spec
/// unchanged. Throws EngineError("invalid-spec") with a field-level message.
TestSpec validate_spec(TestSpec spec);

struct Outcome {
  enum class Kind { pass, fail, crash, timeout };

  Kind kind = Kind::fail;
  std::string message; // fail/crash detail; empty for pass and timeout

  static Outcome pass() { return {Kind::pass, {}}; }
  static Outcome fail(std::string msg) { return {Kind::fail, std::move(msg)}; }
  static Outcome crash(std::string msg) { return {Kind::crash, std::move(msg)}; }
  static Outcome timeout() { return {Kind::timeout, {}}; }

  bool is_pass() const noexcept { return kind == Kind::pass; }
  const char* name() const noexcept;

  bool operator==(const Outcome&) const = default;
};

/// One run's outcome plus its captured trace.
struct ExecutionRecord {
  TestSpec spec;
  Outcome outcome;
  std::optional<Trace> trace; // absent only if the harness emitted no events
  double distance_to_original = 0.0;
  std::int64_t wall_ms = 0;

  Json to_json() const;
  static ExecutionRecord from_json(const Json& j);
};

struct SearchConfig {
  int target_passing = 3;
  int max_candidates = 5000;
  std::int64_t per_execution_timeout_ms = 5000;
  std::int64_t total_budget_ms = 600000;
  std::uint64_t rng_seed = 0;
  int parallelism = 1;
  int report_k = 3;
  std::optional<std::vector<double>> weights;
  /// Passing candidates are re-run this many times in total; any failure
  /// demotes the candidate (guards causal claims against flaky subjects).
  int repeat = 1;

  Json to_json() const;
  static SearchConfig from_json(const Json& j);
};

/// Validates config invariants; `arity`, when nonzero, additionally checks
/// the weight vector length. Throws EngineError("config").
void validate_config(const SearchConfig& config, std::size_t arity = 0);

} // namespace causal

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace causal {

using Json = nlohmann::ordered_json;

/// One call observed by the harness: the method, where it was called from,
/// rendered arguments and return value, and its call depth.
struct CallEvent {
  std::string method;
  std::string call_site;
  std::vector<std::string> args_rendered;
  std::optional<std::string> return_rendered;
  std::size_t depth = 0;

  bool operator==(const CallEvent&) const = default;

  Json to_json() const;
  static CallEvent from_json(const Json& j);
};

/// Traces longer than this keep only the newest events; older ones are
/// dropped from the front and the truncation is marked.
inline constexpr std::size_t kTraceEventCap = 100000;

struct Trace {
  std::vector<CallEvent> events;
  bool truncated_front = false;

  bool operator==(const Trace&) const = default;

  Json to_json() const;
  static Trace from_json(const Json& j);
};

struct ParsedTrace {
  Trace trace;
  std::vector<std::string> warnings;
};

/// Builds a Trace from raw harness event objects. Events missing "method"
/// are dropped with a warning; depth jumps beyond the call discipline are
/// clamped and flagged. Never fatal.
ParsedTrace parse_trace_events(const std::vector<Json>& raw);
ParsedTrace parse_trace_events(const Json& array);

// Aligned difference between a failing and a passing trace.

struct CommonHunk {
  std::size_t count = 0;
  bool operator==(const CommonHunk&) const = default;
};

struct OnlyInFailingHunk {
  std::vector<CallEvent> events;
  bool operator==(const OnlyInFailingHunk&) const = default;
};

struct OnlyInPassingHunk {
  std::vector<CallEvent> events;
  bool operator==(const OnlyInPassingHunk&) const = default;
};

/// One rendered-value difference inside an aligned event pair.
struct FieldDiff {
  std::string field; // "args[i]" or "return"
  std::optional<std::string> failing;
  std::optional<std::string> passing;
  bool operator==(const FieldDiff&) const = default;
};

/// A pair of events aligned by (method, call_site, depth) whose rendered
/// arguments or return value differ.
struct PayloadHunk {
  CallEvent failing;
  CallEvent passing;
  std::vector<FieldDiff> fields;
  bool operator==(const PayloadHunk&) const = default;
};

using Hunk = std::variant<CommonHunk, OnlyInFailingHunk, OnlyInPassingHunk, PayloadHunk>;

struct TraceDiff {
  std::vector<Hunk> hunks;
  /// Position of the first non-common hunk, counted in aligned events from
  /// the start; absent iff the traces are identical.
  std::optional<std::size_t> first_divergence_index;

  Json to_json() const;
  static TraceDiff from_json(const Json& j);
};

/// LCS alignment keyed on (method, call_site, depth). Aligned pairs whose
/// payload differs become Payload hunks; unaligned runs become OnlyIn* hunks.
TraceDiff diff_traces(const Trace& failing, const Trace& passing);

std::optional<std::pair<std::size_t, const Hunk*>> first_divergence(const TraceDiff& diff);

/// Patch semantics: replaying the hunks against one side reconstructs the
/// other side exactly. Throws EngineError("trace-diff") if the diff does not
/// belong to the given trace.
Trace apply_to_failing(const TraceDiff& diff, const Trace& failing);
Trace apply_to_passing(const TraceDiff& diff, const Trace& passing);

} // namespace causal

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "causal/executor.hpp"
#include "causal/trace.hpp"
#include "causal/value.hpp"

namespace causal {

/// One step of the optimal edit script between a failing and a passing text
/// argument, in Unicode scalar positions. Applying all edits of a highlight
/// to the failing argument reproduces the passing one.
struct ArgEdit {
  enum class Op { substitute, insert, erase };
  Op op = Op::substitute;
  std::size_t failing_pos = 0;
  std::size_t passing_pos = 0;
  std::string failing_ch; // empty for insert
  std::string passing_ch; // empty for erase
};

/// Per-argument difference between the original failing input and one
/// passing input. Text arguments carry exact character-level edits; other
/// kinds fall back to whole-value before/after rendering.
struct ArgHighlight {
  std::size_t arg_index = 0;
  bool textual = false;
  std::vector<ArgEdit> edits;
  std::string failing_rendered;
  std::string passing_rendered;
};

struct PassingEntry {
  ExecutionRecord record;
  std::optional<TraceDiff> trace_diff; // absent if either trace is absent
  std::vector<ArgHighlight> highlights;
};

/// Derived from execution records only, so replayed searches reproduce it.
struct TimingSummary {
  std::int64_t original_ms = 0;
  std::int64_t candidates_ms = 0;
  std::size_t executed = 0;
};

/// The deliverable: the original failing test, its nearest passing
/// perturbations with trace diffs and input highlights, and any failing
/// inputs that are closer still.
struct CausalReport {
  std::string engine_version;
  ExecutionRecord original;
  std::vector<PassingEntry> nearest_passing; // at most config.report_k
  std::vector<ExecutionRecord> closer_failing;
  StopReason stop_reason = StopReason::candidates_exhausted;
  SearchConfig config;
  TimingSummary timing;
};

CausalReport build_report(const SearchResult& result, const SearchConfig& config);

enum class ReportFormat { text, json };

struct RenderOptions {
  bool verbose = false; // expand trace diff hunks in the text format
};

/// Byte-deterministic rendering. The JSON format is the versioned
/// "causal-report/1" serialization; text is the human view.
std::string render(const CausalReport& report, ReportFormat format,
                   const RenderOptions& options = {});

Json report_to_json(const CausalReport& report);
CausalReport report_from_json(const Json& j);

} // namespace causal

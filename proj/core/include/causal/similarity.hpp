#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "causal/candidates.hpp"
#include "causal/value.hpp"

namespace causal {

/// Normalized distance: 0 = identical, 1 = maximally different. Never NaN.
struct Distance {
  double value = 0.0;
};

/// Minimum number of single-character edits, counted in Unicode scalar
/// values.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
std::size_t levenshtein_utf8(std::string_view a, std::string_view b);

/// Levenshtein normalized by max(len(a), len(b)); 0 when both are empty.
Distance string_distance(std::string_view a, std::string_view b);

/// |a-b| / (|a| + |b| + 1): total, symmetric, 0 iff a == b, and strictly
/// below 1 for finite inputs. Neither argument may be NaN.
Distance numeric_distance(double a, double b);

/// Element-wise distances over the common prefix plus 1 per unmatched
/// trailing element, divided by max(len); 0 for two empty sequences.
Distance sequence_distance(const std::vector<InputValue>& a,
                           const std::vector<InputValue>& b);

/// Dispatch on variant tags; mismatched tags cost the full distance 1.
/// Records align by field name, missing fields count 1.
Distance value_distance(const InputValue& a, const InputValue& b);

/// Weighted mean of per-argument value_distance (uniform by default).
/// Throws EngineError("incomparable") when oracle or arity differ.
Distance test_distance(const TestSpec& a, const TestSpec& b,
                       const std::optional<std::vector<double>>& weights = {});

/// One step of an optimal edit script between two texts (positions in
/// Unicode scalar values).
struct EditOp {
  enum class Kind { match, substitute, insert, erase };
  Kind kind = Kind::match;
  std::size_t a_pos = 0; // position in the source ("failing") text
  std::size_t b_pos = 0; // position in the target ("passing") text
  char32_t a_ch = 0;
  char32_t b_ch = 0;
};

/// Deterministic optimal edit script turning `a` into `b` (match ops
/// included). Applying the non-match ops to `a` reproduces `b`.
std::vector<EditOp> edit_script(std::string_view a, std::string_view b);

struct RankedCandidate {
  Candidate candidate;
  Distance distance; // memoized distance to the original
};

/// Drains the stream and orders candidates by non-decreasing distance to the
/// original; ties broken by generation index (stable).
std::vector<RankedCandidate> rank_candidates(CandidateStream& stream,
                                             const TestSpec& original,
                                             const SearchConfig& config);
std::vector<RankedCandidate> rank_candidates(std::vector<Candidate> candidates,
                                             const TestSpec& original,
                                             const SearchConfig& config);

} // namespace causal

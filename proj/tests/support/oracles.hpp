#pragma once

// Independent test oracles. These deliberately use the most naive algorithms
// available (plain recursion, pairwise scans) so they share no code path with
// the implementations they check.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "causal/trace.hpp"

namespace oracles {

/// Textbook recursive edit distance, no memoization. Only for tiny inputs.
inline std::size_t brute_levenshtein(const std::string& a, const std::string& b,
                                     std::size_t i = 0, std::size_t j = 0) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  std::size_t best = brute_levenshtein(a, b, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
  best = std::min(best, brute_levenshtein(a, b, i + 1, j) + 1);
  best = std::min(best, brute_levenshtein(a, b, i, j + 1) + 1);
  return best;
}

/// Brute-force longest common subsequence length by recursion.
template <typename T>
std::size_t brute_lcs(const std::vector<T>& a, const std::vector<T>& b,
                      std::size_t i = 0, std::size_t j = 0) {
  if (i == a.size() || j == b.size()) return 0;
  if (a[i] == b[j]) return 1 + brute_lcs(a, b, i + 1, j + 1);
  return std::max(brute_lcs(a, b, i + 1, j), brute_lcs(a, b, i, j + 1));
}

/// Independent first-divergence check: the first index at which two traces
/// stop agreeing event-for-event (valid when the differences are pure
/// suffix changes or a single aligned payload change).
inline std::optional<std::size_t> pairwise_first_difference(const causal::Trace& a,
                                                            const causal::Trace& b) {
  std::size_t n = std::min(a.events.size(), b.events.size());
  for (std::size_t i = 0; i < n; ++i)
    if (!(a.events[i] == b.events[i])) return i;
  if (a.events.size() != b.events.size()) return n;
  return std::nullopt;
}

/// All strings of length <= max_len over the given alphabet.
inline std::vector<std::string> all_strings(const std::string& alphabet,
                                            std::size_t max_len) {
  std::vector<std::string> out{""};
  std::vector<std::string> frontier{""};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::string> next;
    for (const auto& s : frontier)
      for (char c : alphabet) next.push_back(s + c);
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

} // namespace oracles

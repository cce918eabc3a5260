#include "causal/similarity.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <unordered_map>

#include "causal/errors.hpp"
#include "causal/utf8.hpp"

namespace causal {

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  // Two-row DP over scalar values.
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t levenshtein_utf8(std::string_view a, std::string_view b) {
  return levenshtein(utf8_decode_checked(a), utf8_decode_checked(b));
}

Distance string_distance(std::string_view a, std::string_view b) {
  auto ua = utf8_decode_checked(a);
  auto ub = utf8_decode_checked(b);
  std::size_t longest = std::max(ua.size(), ub.size());
  if (longest == 0) return {0.0};
  return {static_cast<double>(levenshtein(ua, ub)) / static_cast<double>(longest)};
}

Distance numeric_distance(double a, double b) {
  assert(!std::isnan(a) && !std::isnan(b));
  // long double keeps the ratio finite even for |a|,|b| near DBL_MAX.
  long double la = a, lb = b;
  long double d = std::fabs(la - lb) / (std::fabs(la) + std::fabs(lb) + 1.0L);
  return {static_cast<double>(d)};
}

Distance sequence_distance(const std::vector<InputValue>& a,
                           const std::vector<InputValue>& b) {
  std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return {0.0};
  std::size_t common = std::min(a.size(), b.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < common; ++i) sum += value_distance(a[i], b[i]).value;
  sum += static_cast<double>(longest - common); // 1 per unmatched trailing element
  return {sum / static_cast<double>(longest)};
}

namespace {

Distance record_distance(const InputValue::Record& a, const InputValue::Record& b) {
  // Align by field name; fields present on only one side cost 1. The union
  // size normalizes so two disjoint records sit at distance 1.
  std::unordered_map<std::string, const InputValue*> bmap;
  for (const auto& [name, value] : b) bmap.emplace(name, &value);
  double sum = 0.0;
  std::size_t union_size = b.size();
  for (const auto& [name, value] : a) {
    auto it = bmap.find(name);
    if (it == bmap.end()) {
      sum += 1.0;
      ++union_size;
    } else {
      sum += value_distance(value, *it->second).value;
    }
  }
  for (const auto& [name, value] : b) {
    bool in_a = false;
    for (const auto& [aname, avalue] : a) {
      if (aname == name) {
        in_a = true;
        break;
      }
    }
    if (!in_a) sum += 1.0;
  }
  if (union_size == 0) return {0.0};
  return {sum / static_cast<double>(union_size)};
}

} // namespace

Distance value_distance(const InputValue& a, const InputValue& b) {
  if (a.kind() != b.kind()) return {1.0};
  switch (a.kind()) {
    case InputValue::Kind::text:
      return string_distance(a.as_text(), b.as_text());
    case InputValue::Kind::integer:
      return numeric_distance(static_cast<double>(a.as_integer()),
                              static_cast<double>(b.as_integer()));
    case InputValue::Kind::real:
      return numeric_distance(a.as_real(), b.as_real());
    case InputValue::Kind::boolean:
      return {a.as_boolean() == b.as_boolean() ? 0.0 : 1.0};
    case InputValue::Kind::sequence:
      return sequence_distance(a.as_sequence(), b.as_sequence());
    case InputValue::Kind::record:
      return record_distance(a.as_record(), b.as_record());
  }
  return {1.0};
}

Distance test_distance(const TestSpec& a, const TestSpec& b,
                       const std::optional<std::vector<double>>& weights) {
  if (a.oracle_id != b.oracle_id)
    throw incomparable("oracle mismatch: \"" + a.oracle_id + "\" vs \"" +
                       b.oracle_id + "\"");
  if (a.args.size() != b.args.size())
    throw incomparable("arity mismatch: " + std::to_string(a.args.size()) + " vs " +
                       std::to_string(b.args.size()));
  if (weights && weights->size() != a.args.size())
    throw incomparable("weight vector length does not match arity");

  double weighted = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    double w = weights ? (*weights)[i] : 1.0;
    weighted += w * value_distance(a.args[i], b.args[i]).value;
    total += w;
  }
  if (total <= 0.0) return {0.0};
  return {weighted / total};
}

std::vector<EditOp> edit_script(std::string_view a_utf8, std::string_view b_utf8) {
  std::u32string a = utf8_decode_checked(a_utf8);
  std::u32string b = utf8_decode_checked(b_utf8);
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::size_t>> dp(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) dp[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) dp[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      dp[i][j] = std::min({dp[i - 1][j] + 1, dp[i][j - 1] + 1,
                           dp[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});

  // Backtrace, preferring match/substitute, then erase, then insert. The
  // preference is fixed so the script (and highlights) are deterministic.
  std::vector<EditOp> ops;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && dp[i][j] == dp[i - 1][j - 1] && a[i - 1] == b[j - 1]) {
      ops.push_back({EditOp::Kind::match, i - 1, j - 1, a[i - 1], b[j - 1]});
      --i, --j;
    } else if (i > 0 && j > 0 && dp[i][j] == dp[i - 1][j - 1] + 1) {
      ops.push_back({EditOp::Kind::substitute, i - 1, j - 1, a[i - 1], b[j - 1]});
      --i, --j;
    } else if (i > 0 && dp[i][j] == dp[i - 1][j] + 1) {
      ops.push_back({EditOp::Kind::erase, i - 1, j, a[i - 1], 0});
      --i;
    } else {
      ops.push_back({EditOp::Kind::insert, i, j - 1, 0, b[j - 1]});
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

namespace {

std::vector<RankedCandidate> sort_ranked(std::vector<RankedCandidate> ranked) {
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedCandidate& a, const RankedCandidate& b) {
                     if (a.distance.value != b.distance.value)
                       return a.distance.value < b.distance.value;
                     return a.candidate.provenance.generation_index <
                            b.candidate.provenance.generation_index;
                   });
  return ranked;
}

} // namespace

std::vector<RankedCandidate> rank_candidates(std::vector<Candidate> candidates,
                                             const TestSpec& original,
                                             const SearchConfig& config) {
  std::vector<RankedCandidate> ranked;
  ranked.reserve(candidates.size());
  for (auto& c : candidates) {
    Distance d = test_distance(original, c.spec, config.weights);
    ranked.push_back({std::move(c), d});
  }
  return sort_ranked(std::move(ranked));
}

std::vector<RankedCandidate> rank_candidates(CandidateStream& stream,
                                             const TestSpec& original,
                                             const SearchConfig& config) {
  return rank_candidates(collect_candidates(stream), original, config);
}

} // namespace causal

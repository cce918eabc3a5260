#pragma once

// Seeded structural generators for property-style tests.

#include <random>
#include <string>
#include <vector>

#include "causal/trace.hpp"
#include "causal/utf8.hpp"
#include "causal/value.hpp"

namespace gen {

using causal::CallEvent;
using causal::InputValue;
using causal::Trace;

inline std::string random_text(std::mt19937_64& rng, std::size_t max_len = 12) {
  static const std::u32string pool = U"abcXYZ019 _-é漢\"\\";
  std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::u32string s;
  std::size_t len = len_dist(rng);
  for (std::size_t i = 0; i < len; ++i) s.push_back(pool[pick(rng)]);
  return causal::utf8_encode(s);
}

inline InputValue random_value(std::mt19937_64& rng, int depth = 0) {
  std::uniform_int_distribution<int> kind_dist(0, depth >= 2 ? 3 : 5);
  switch (kind_dist(rng)) {
    case 0:
      return InputValue::text(random_text(rng));
    case 1: {
      std::uniform_int_distribution<std::int64_t> d(-1000000, 1000000);
      return InputValue::integer(d(rng));
    }
    case 2: {
      std::uniform_real_distribution<double> d(-1e6, 1e6);
      return InputValue::real(d(rng));
    }
    case 3:
      return InputValue::boolean(rng() & 1);
    case 4: {
      std::uniform_int_distribution<std::size_t> n(0, 4);
      InputValue::Sequence elems;
      std::size_t len = n(rng);
      for (std::size_t i = 0; i < len; ++i) elems.push_back(random_value(rng, depth + 1));
      return InputValue::sequence(std::move(elems));
    }
    default: {
      std::uniform_int_distribution<std::size_t> n(0, 4);
      InputValue::Record fields;
      std::size_t len = n(rng);
      for (std::size_t i = 0; i < len; ++i)
        fields.emplace_back("f" + std::to_string(i), random_value(rng, depth + 1));
      return InputValue::record(std::move(fields));
    }
  }
}

/// Random event drawn from a small pool so traces share structure.
inline CallEvent random_event(std::mt19937_64& rng, int method_pool = 5) {
  std::uniform_int_distribution<int> m(0, method_pool - 1);
  std::uniform_int_distribution<int> depth(0, 3);
  std::uniform_int_distribution<int> argn(0, 2);
  std::uniform_int_distribution<int> val(0, 9);
  CallEvent e;
  e.method = "m" + std::to_string(m(rng));
  e.call_site = "site" + std::to_string(m(rng));
  int n = argn(rng);
  for (int i = 0; i < n; ++i) e.args_rendered.push_back(std::to_string(val(rng)));
  if (rng() & 1) e.return_rendered = std::to_string(val(rng));
  e.depth = static_cast<std::size_t>(depth(rng));
  return e;
}

inline Trace random_trace(std::mt19937_64& rng, std::size_t max_len,
                          int method_pool = 5) {
  std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
  Trace t;
  std::size_t len = len_dist(rng);
  for (std::size_t i = 0; i < len; ++i) t.events.push_back(random_event(rng, method_pool));
  return t;
}

/// A pair of traces that share structure: the second is a mutation of the
/// first (edits, insertions, deletions), mirroring a failing/passing pair.
inline std::pair<Trace, Trace> related_traces(std::mt19937_64& rng, std::size_t max_len) {
  Trace base = random_trace(rng, max_len);
  Trace other = base;
  std::uniform_int_distribution<int> edits_dist(0, 5);
  int edits = edits_dist(rng);
  for (int e = 0; e < edits && !other.events.empty(); ++e) {
    std::uniform_int_distribution<std::size_t> pos_dist(0, other.events.size() - 1);
    std::size_t pos = pos_dist(rng);
    switch (rng() % 3) {
      case 0:
        other.events[pos] = random_event(rng);
        break;
      case 1:
        other.events.erase(other.events.begin() + static_cast<std::ptrdiff_t>(pos));
        break;
      default:
        other.events.insert(other.events.begin() + static_cast<std::ptrdiff_t>(pos),
                            random_event(rng));
        break;
    }
  }
  return {std::move(base), std::move(other)};
}

} // namespace gen

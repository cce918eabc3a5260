#include "causal/candidates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "causal/errors.hpp"
#include "causal/utf8.hpp"

namespace causal {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (0xD6E8FEB86659FD93ULL * (b + 1)));
}

bool has_ascii_case(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
}

char32_t flip_ascii_case(char32_t c) {
  if (c >= U'a' && c <= U'z') return c - 32;
  if (c >= U'A' && c <= U'Z') return c + 32;
  return c;
}

/// One candidate edit of a single value. `tier` approximates edit magnitude
/// (1 = single edit); generation emits tiers in ascending order so the
/// nearest perturbations appear first.
struct Mutation {
  std::string mutator;
  std::size_t tier = 1;
  InputValue value;
};

// Substitution/insertion alphabet: printable ASCII plus every scalar already
// present in the original, so non-ASCII inputs mutate within their own
// alphabet.
std::vector<char32_t> text_alphabet(const std::u32string& s) {
  std::set<char32_t> chars;
  for (char32_t c = 0x20; c <= 0x7E; ++c) chars.insert(c);
  for (char32_t c : s) chars.insert(c);
  return {chars.begin(), chars.end()};
}

std::vector<Mutation> mutations_for(const InputValue& v, const MutatorCatalog& catalog);

void text_mutations(const InputValue& v, const MutatorCatalog& catalog,
                    std::vector<Mutation>& out) {
  const std::u32string s = utf8_decode_checked(v.as_text());
  const std::size_t n = s.size();
  const auto emit = [&](const char* name, std::size_t tier, std::u32string mutated) {
    out.push_back({name, tier, InputValue::text(utf8_encode(mutated))});
  };

  if (catalog.is_enabled("text.case-flip")) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!has_ascii_case(s[i])) continue;
      std::u32string t = s;
      t[i] = flip_ascii_case(t[i]);
      emit("text.case-flip", 1, std::move(t));
    }
  }
  if (catalog.is_enabled("text.substitute")) {
    auto alphabet = text_alphabet(s);
    for (std::size_t i = 0; i < n; ++i) {
      for (char32_t c : alphabet) {
        if (c == s[i]) continue;
        std::u32string t = s;
        t[i] = c;
        emit("text.substitute", 1, std::move(t));
      }
    }
  }
  if (catalog.is_enabled("text.delete")) {
    for (std::size_t i = 0; i < n; ++i) {
      std::u32string t = s;
      t.erase(t.begin() + static_cast<std::ptrdiff_t>(i));
      emit("text.delete", 1, std::move(t));
    }
  }
  if (catalog.is_enabled("text.insert")) {
    auto alphabet = text_alphabet(s);
    for (std::size_t i = 0; i <= n; ++i) {
      for (char32_t c : alphabet) {
        std::u32string t = s;
        t.insert(t.begin() + static_cast<std::ptrdiff_t>(i), c);
        emit("text.insert", 1, std::move(t));
      }
    }
  }
  if (catalog.is_enabled("text.transpose")) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (s[i] == s[i + 1]) continue;
      std::u32string t = s;
      std::swap(t[i], t[i + 1]);
      emit("text.transpose", 2, std::move(t));
    }
  }
  if (catalog.is_enabled("text.drop-prefix")) {
    for (std::size_t k = 1; k < n; ++k) emit("text.drop-prefix", k, s.substr(k));
  }
  if (catalog.is_enabled("text.drop-suffix")) {
    for (std::size_t k = 1; k < n; ++k) emit("text.drop-suffix", k, s.substr(0, n - k));
  }
  if (catalog.is_enabled("text.duplicate") && n > 0) {
    emit("text.duplicate", n, s + s);
  }
  if (catalog.is_enabled("text.case-variant")) {
    std::u32string upper = s, lower = s, swapped = s;
    std::size_t upper_changes = 0, lower_changes = 0, swap_changes = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (s[i] >= U'a' && s[i] <= U'z') {
        upper[i] = s[i] - 32;
        swapped[i] = s[i] - 32;
        ++upper_changes;
        ++swap_changes;
      } else if (s[i] >= U'A' && s[i] <= U'Z') {
        lower[i] = s[i] + 32;
        swapped[i] = s[i] + 32;
        ++lower_changes;
        ++swap_changes;
      }
    }
    if (upper_changes > 0) emit("text.case-variant", upper_changes, std::move(upper));
    if (lower_changes > 0) emit("text.case-variant", lower_changes, std::move(lower));
    if (swap_changes > 0) emit("text.case-variant", swap_changes, std::move(swapped));
  }
}

void integer_mutations(const InputValue& v, const MutatorCatalog& catalog,
                       std::vector<Mutation>& out) {
  const std::int64_t x = v.as_integer();
  constexpr std::int64_t kMin = std::numeric_limits<std::int64_t>::min();
  constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();
  const auto emit = [&](const char* name, std::size_t tier, std::int64_t value) {
    out.push_back({name, tier, InputValue::integer(value)});
  };

  if (catalog.is_enabled("int.step")) {
    if (x < kMax) emit("int.step", 1, x + 1);
    if (x > kMin) emit("int.step", 1, x - 1);
  }
  if (catalog.is_enabled("int.bit-flip")) {
    for (int b = 0; b < 64; ++b)
      emit("int.bit-flip", 2,
           static_cast<std::int64_t>(static_cast<std::uint64_t>(x) ^ (1ULL << b)));
  }
  if (catalog.is_enabled("int.negate") && x != kMin) emit("int.negate", 2, -x);
  if (catalog.is_enabled("int.zero")) emit("int.zero", 2, 0);
  if (catalog.is_enabled("int.scale")) {
    std::int64_t doubled;
    if (!__builtin_mul_overflow(x, std::int64_t{2}, &doubled))
      emit("int.scale", 2, doubled);
    emit("int.scale", 2, x / 2);
  }
  if (catalog.is_enabled("int.boundary")) {
    emit("int.boundary", 3, kMin);
    emit("int.boundary", 3, kMax);
  }
}

void real_mutations(const InputValue& v, const MutatorCatalog& catalog,
                    std::vector<Mutation>& out) {
  const double x = v.as_real();
  const auto emit = [&](const char* name, std::size_t tier, double value) {
    if (std::isnan(value) || std::isinf(value)) return;
    out.push_back({name, tier, InputValue::real(value)});
  };

  if (catalog.is_enabled("real.step")) {
    emit("real.step", 1, x + 1.0);
    emit("real.step", 1, x - 1.0);
  }
  if (catalog.is_enabled("real.ulp")) {
    emit("real.ulp", 1, std::nextafter(x, std::numeric_limits<double>::infinity()));
    emit("real.ulp", 1, std::nextafter(x, -std::numeric_limits<double>::infinity()));
  }
  if (catalog.is_enabled("real.negate")) emit("real.negate", 2, -x);
  if (catalog.is_enabled("real.zero")) emit("real.zero", 2, 0.0);
  if (catalog.is_enabled("real.scale")) {
    emit("real.scale", 2, x * 2.0);
    emit("real.scale", 2, x / 2.0);
  }
  if (catalog.is_enabled("real.boundary")) {
    emit("real.boundary", 3, std::numeric_limits<double>::lowest());
    emit("real.boundary", 3, std::numeric_limits<double>::max());
    emit("real.boundary", 3, std::numeric_limits<double>::min());
  }
}

void sequence_mutations(const InputValue& v, const MutatorCatalog& catalog,
                        std::vector<Mutation>& out) {
  const auto& elems = v.as_sequence();
  const std::size_t n = elems.size();

  if (catalog.is_enabled("seq.element")) {
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& inner : mutations_for(elems[i], catalog)) {
        auto mutated = elems;
        mutated[i] = std::move(inner.value);
        out.push_back({"seq.element:" + inner.mutator, inner.tier,
                       InputValue::sequence(std::move(mutated))});
      }
    }
  }
  if (catalog.is_enabled("seq.remove")) {
    for (std::size_t i = 0; i < n; ++i) {
      auto mutated = elems;
      mutated.erase(mutated.begin() + static_cast<std::ptrdiff_t>(i));
      out.push_back({"seq.remove", 1, InputValue::sequence(std::move(mutated))});
    }
  }
  if (catalog.is_enabled("seq.swap")) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (elems[i] == elems[i + 1]) continue;
      auto mutated = elems;
      std::swap(mutated[i], mutated[i + 1]);
      out.push_back({"seq.swap", 2, InputValue::sequence(std::move(mutated))});
    }
  }
  if (catalog.is_enabled("seq.truncate")) {
    for (std::size_t k = 1; k < n; ++k) {
      InputValue::Sequence mutated(elems.begin(),
                                   elems.end() - static_cast<std::ptrdiff_t>(k));
      out.push_back({"seq.truncate", k, InputValue::sequence(std::move(mutated))});
    }
  }
}

void record_mutations(const InputValue& v, const MutatorCatalog& catalog,
                      std::vector<Mutation>& out) {
  if (!catalog.is_enabled("rec.field")) return;
  const auto& fields = v.as_record();
  // One field at a time; field names themselves are never perturbed.
  for (std::size_t i = 0; i < fields.size(); ++i) {
    for (auto& inner : mutations_for(fields[i].second, catalog)) {
      auto mutated = fields;
      mutated[i].second = std::move(inner.value);
      out.push_back({"rec.field:" + inner.mutator, inner.tier,
                     InputValue::record(std::move(mutated))});
    }
  }
}

std::vector<Mutation> mutations_for(const InputValue& v, const MutatorCatalog& catalog) {
  std::vector<Mutation> out;
  switch (v.kind()) {
    case InputValue::Kind::text: text_mutations(v, catalog, out); break;
    case InputValue::Kind::integer: integer_mutations(v, catalog, out); break;
    case InputValue::Kind::real: real_mutations(v, catalog, out); break;
    case InputValue::Kind::boolean:
      if (catalog.is_enabled("bool.flip"))
        out.push_back({"bool.flip", 1, InputValue::boolean(!v.as_boolean())});
      break;
    case InputValue::Kind::sequence: sequence_mutations(v, catalog, out); break;
    case InputValue::Kind::record: record_mutations(v, catalog, out); break;
  }
  return out;
}

/// Tier-sorts, shuffles within tiers, and drops duplicates and the source
/// value itself. The result is the per-value emission order.
std::vector<Mutation> ordered_mutations(const InputValue& v, const MutatorCatalog& catalog,
                                        std::uint64_t seed) {
  std::vector<Mutation> muts = mutations_for(v, catalog);
  std::stable_sort(muts.begin(), muts.end(),
                   [](const Mutation& a, const Mutation& b) { return a.tier < b.tier; });
  // Seeded shuffle within each tier keeps near-first ordering while varying
  // which same-tier edits come up first.
  std::size_t begin = 0;
  while (begin < muts.size()) {
    std::size_t end = begin;
    while (end < muts.size() && muts[end].tier == muts[begin].tier) ++end;
    std::mt19937_64 rng(mix_seed(seed, muts[begin].tier));
    std::shuffle(muts.begin() + static_cast<std::ptrdiff_t>(begin),
                 muts.begin() + static_cast<std::ptrdiff_t>(end), rng);
    begin = end;
  }

  const std::string self = canonical_json(v);
  std::set<std::string> seen{self};
  std::vector<Mutation> unique;
  unique.reserve(muts.size());
  for (auto& m : muts) {
    if (seen.insert(canonical_json(m.value)).second) unique.push_back(std::move(m));
  }
  return unique;
}

} // namespace

MutatorCatalog MutatorCatalog::standard() {
  using K = InputValue::Kind;
  using F = MutatorFamily;
  MutatorCatalog c;
  c.mutators_ = {
      {"text.case-flip", K::text, F::structural},
      {"text.substitute", K::text, F::structural},
      {"text.delete", K::text, F::structural},
      {"text.insert", K::text, F::structural},
      {"text.transpose", K::text, F::structural},
      {"text.drop-prefix", K::text, F::structural},
      {"text.drop-suffix", K::text, F::structural},
      {"text.duplicate", K::text, F::structural},
      {"text.case-variant", K::text, F::boundary},
      {"int.step", K::integer, F::boundary},
      {"int.bit-flip", K::integer, F::structural},
      {"int.negate", K::integer, F::boundary},
      {"int.zero", K::integer, F::boundary},
      {"int.scale", K::integer, F::boundary},
      {"int.boundary", K::integer, F::boundary},
      {"real.step", K::real, F::boundary},
      {"real.ulp", K::real, F::structural},
      {"real.negate", K::real, F::boundary},
      {"real.zero", K::real, F::boundary},
      {"real.scale", K::real, F::boundary},
      {"real.boundary", K::real, F::boundary},
      {"bool.flip", K::boolean, F::structural},
      {"seq.element", K::sequence, F::structural},
      {"seq.remove", K::sequence, F::structural},
      {"seq.swap", K::sequence, F::structural},
      {"seq.truncate", K::sequence, F::structural},
      {"rec.field", K::record, F::structural},
  };
  return c;
}

void MutatorCatalog::disable(std::string_view name) {
  for (auto& m : mutators_)
    if (m.name == name) m.enabled = false;
}

void MutatorCatalog::enable(std::string_view name) {
  for (auto& m : mutators_)
    if (m.name == name) m.enabled = true;
}

bool MutatorCatalog::is_enabled(std::string_view name) const {
  for (const auto& m : mutators_)
    if (m.name == name) return m.enabled;
  return false;
}

namespace {

void collect_kinds(const InputValue& v, std::set<InputValue::Kind>& kinds) {
  kinds.insert(v.kind());
  if (v.kind() == InputValue::Kind::sequence)
    for (const auto& e : v.as_sequence()) collect_kinds(e, kinds);
  if (v.kind() == InputValue::Kind::record)
    for (const auto& [name, value] : v.as_record()) collect_kinds(value, kinds);
}

} // namespace

void MutatorCatalog::require_coverage(const std::vector<InputValue>& args) const {
  std::set<InputValue::Kind> kinds;
  for (const auto& a : args) collect_kinds(a, kinds);
  for (auto kind : kinds) {
    bool covered = false;
    for (const auto& m : mutators_) {
      if (m.applies_to == kind && m.enabled) {
        covered = true;
        break;
      }
    }
    if (!covered) {
      InputValue probe; // only for the kind name
      const char* name = "";
      switch (kind) {
        case InputValue::Kind::text: name = "text"; break;
        case InputValue::Kind::integer: name = "integer"; break;
        case InputValue::Kind::real: name = "real"; break;
        case InputValue::Kind::boolean: name = "boolean"; break;
        case InputValue::Kind::sequence: name = "sequence"; break;
        case InputValue::Kind::record: name = "record"; break;
      }
      throw config_error(std::string("no mutator enabled for argument type ") + name);
    }
  }
}

std::vector<InputValue> perturb_value(const InputValue& v, std::size_t budget,
                                      std::uint64_t seed) {
  auto catalog = MutatorCatalog::standard();
  auto muts = ordered_mutations(v, catalog, seed);
  std::vector<InputValue> out;
  out.reserve(std::min(budget, muts.size()));
  for (auto& m : muts) {
    if (out.size() >= budget) break;
    out.push_back(std::move(m.value));
  }
  return out;
}

std::vector<Candidate> reuse_suite_candidates(const std::vector<TestSpec>& suite,
                                              const TestSpec& original) {
  std::vector<Candidate> out;
  std::set<std::string> seen{canonical_args_json(original.args)};
  std::uint64_t index = 0;
  for (const auto& spec : suite) {
    if (!spec.comparable_with(original)) continue;
    if (same_args(spec, original)) continue;
    if (!seen.insert(canonical_args_json(spec.args)).second) continue;
    out.push_back({spec, Provenance::suite_reuse(spec.test_id, index++), 0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// CandidateStream

struct CandidateStream::Impl {
  TestSpec original;
  SearchConfig config;
  std::vector<Candidate> suite;

  struct ArgPlan {
    std::vector<Mutation> muts; // tier-ordered
    std::vector<std::size_t> tier_begin; // start offset of each tier group
    std::vector<std::size_t> tiers;      // tier value per group
    std::uint64_t seed = 0;
  };
  std::vector<ArgPlan> plans;
  std::vector<std::size_t> all_tiers; // sorted union of tiers across args

  std::set<std::string> seen;
  std::uint64_t emitted = 0;
  std::uint64_t next_index = 0;

  enum class Phase { suite, single, compound, done };
  Phase phase = Phase::suite;

  // suite cursor
  std::size_t suite_pos = 0;
  // single-argument round cursor: tier group, slot within group, argument
  std::size_t tier_pos = 0;
  std::size_t slot = 0;
  std::size_t arg_pos = 0;
  // compound round cursor: argument pair, diagonal, split
  std::size_t pair_a = 0;
  std::size_t pair_b = 1;
  std::size_t diag = 0;
  std::size_t split = 0;

  Impl(TestSpec orig, const MutatorCatalog& catalog, SearchConfig cfg,
       std::vector<TestSpec> suite_specs)
      : original(std::move(orig)), config(cfg) {
    seen.insert(canonical_args_json(original.args));
    suite = reuse_suite_candidates(suite_specs, original);

    plans.reserve(original.args.size());
    std::set<std::size_t> tier_union;
    for (std::size_t i = 0; i < original.args.size(); ++i) {
      ArgPlan plan;
      plan.seed = mix_seed(config.rng_seed, i);
      plan.muts = ordered_mutations(original.args[i], catalog, plan.seed);
      for (std::size_t k = 0; k < plan.muts.size(); ++k) {
        if (k == 0 || plan.muts[k].tier != plan.muts[k - 1].tier) {
          plan.tier_begin.push_back(k);
          plan.tiers.push_back(plan.muts[k].tier);
          tier_union.insert(plan.muts[k].tier);
        }
      }
      plan.tier_begin.push_back(plan.muts.size());
      plans.push_back(std::move(plan));
    }
    all_tiers.assign(tier_union.begin(), tier_union.end());
  }

  std::size_t group_size(std::size_t arg, std::size_t tier) const {
    const auto& plan = plans[arg];
    for (std::size_t g = 0; g < plan.tiers.size(); ++g)
      if (plan.tiers[g] == tier) return plan.tier_begin[g + 1] - plan.tier_begin[g];
    return 0;
  }

  const Mutation* group_at(std::size_t arg, std::size_t tier, std::size_t k) const {
    const auto& plan = plans[arg];
    for (std::size_t g = 0; g < plan.tiers.size(); ++g)
      if (plan.tiers[g] == tier) {
        std::size_t begin = plan.tier_begin[g];
        if (begin + k < plan.tier_begin[g + 1]) return &plan.muts[begin + k];
        return nullptr;
      }
    return nullptr;
  }

  std::optional<Candidate> accept(std::vector<InputValue> args, std::string mutator,
                                  std::uint64_t lineage) {
    if (!seen.insert(canonical_args_json(args)).second) return std::nullopt;
    Candidate c;
    c.spec.test_id = original.test_id + "/c" + std::to_string(next_index);
    c.spec.oracle_id = original.oracle_id;
    c.spec.args = std::move(args);
    c.provenance = Provenance::fuzzed(std::move(mutator), next_index);
    c.rng_lineage = lineage;
    ++next_index;
    ++emitted;
    return c;
  }

  std::optional<Candidate> next() {
    if (emitted >= static_cast<std::uint64_t>(config.max_candidates)) return std::nullopt;

    if (phase == Phase::suite) {
      while (suite_pos < suite.size()) {
        Candidate c = suite[suite_pos++];
        if (!seen.insert(canonical_args_json(c.spec.args)).second) continue;
        c.provenance.generation_index = next_index++;
        c.rng_lineage = config.rng_seed;
        ++emitted;
        return c;
      }
      phase = Phase::single;
    }

    if (phase == Phase::single) {
      // All single-argument perturbations, nearest tier first, round-robin
      // across arguments within each (tier, slot).
      while (tier_pos < all_tiers.size()) {
        std::size_t tier = all_tiers[tier_pos];
        std::size_t max_group = 0;
        for (std::size_t i = 0; i < plans.size(); ++i)
          max_group = std::max(max_group, group_size(i, tier));
        while (slot < max_group) {
          while (arg_pos < plans.size()) {
            const Mutation* m = group_at(arg_pos, tier, slot);
            std::size_t arg = arg_pos++;
            if (!m) continue;
            auto args = original.args;
            args[arg] = m->value;
            if (auto c = accept(std::move(args), m->mutator, plans[arg].seed)) return c;
          }
          arg_pos = 0;
          ++slot;
        }
        slot = 0;
        ++tier_pos;
      }
      phase = plans.size() >= 2 ? Phase::compound : Phase::done;
    }

    if (phase == Phase::compound) {
      // Two-argument perturbations, walked diagonally so small combined
      // tiers surface first.
      while (pair_a + 1 < plans.size()) {
        const auto& pa = plans[pair_a].muts;
        const auto& pb = plans[pair_b].muts;
        if (pa.empty() || pb.empty()) {
          advance_pair();
          continue;
        }
        std::size_t max_diag = pa.size() + pb.size() - 2;
        while (diag <= max_diag) {
          while (split <= diag) {
            std::size_t ia = split;
            std::size_t ib = diag - split;
            ++split;
            if (ia >= pa.size() || ib >= pb.size()) continue;
            auto args = original.args;
            args[pair_a] = pa[ia].value;
            args[pair_b] = pb[ib].value;
            std::string name = pa[ia].mutator + "+" + pb[ib].mutator;
            std::uint64_t lineage = mix_seed(plans[pair_a].seed, plans[pair_b].seed);
            if (auto c = accept(std::move(args), std::move(name), lineage)) return c;
          }
          split = 0;
          ++diag;
        }
        diag = 0;
        advance_pair();
      }
      phase = Phase::done;
    }

    return std::nullopt;
  }

  void advance_pair() {
    diag = 0;
    split = 0;
    if (++pair_b >= plans.size()) {
      ++pair_a;
      pair_b = pair_a + 1;
    }
  }
};

CandidateStream::CandidateStream(TestSpec original, MutatorCatalog catalog,
                                 SearchConfig config, std::vector<TestSpec> suite)
    : impl_(std::make_unique<Impl>(std::move(original), catalog, config,
                                   std::move(suite))) {}

CandidateStream::~CandidateStream() = default;
CandidateStream::CandidateStream(CandidateStream&&) noexcept = default;
CandidateStream& CandidateStream::operator=(CandidateStream&&) noexcept = default;

std::optional<Candidate> CandidateStream::next() { return impl_->next(); }

std::vector<Candidate> collect_candidates(CandidateStream& stream) {
  std::vector<Candidate> out;
  while (auto c = stream.next()) out.push_back(std::move(*c));
  return out;
}

} // namespace causal

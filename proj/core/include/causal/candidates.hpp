#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "causal/value.hpp"

namespace causal {

struct Provenance {
  enum class Kind { fuzzed, suite_reuse };

  Kind kind = Kind::fuzzed;
  std::string mutator;               // fuzzed: mutator name ("text.case-flip", ...)
  std::uint64_t generation_index = 0;
  std::string source_test_id;        // suite_reuse

  static Provenance fuzzed(std::string mutator, std::uint64_t index) {
    return {Kind::fuzzed, std::move(mutator), index, {}};
  }
  static Provenance suite_reuse(std::string source_id, std::uint64_t index) {
    return {Kind::suite_reuse, {}, index, std::move(source_id)};
  }
};

/// A perturbed test input. Always shares the original's oracle and differs
/// from the original args in at least one element.
struct Candidate {
  TestSpec spec;
  Provenance provenance;
  std::uint64_t rng_lineage = 0; // seed that ordered this candidate's batch
};

enum class MutatorFamily { structural, boundary };

struct MutatorDef {
  std::string name;
  InputValue::Kind applies_to;
  MutatorFamily family;
  bool enabled = true;
};

/// The named mutators per variant tag, with enablement flags. Two independent
/// families (structural edits vs. semantic/boundary edits) keep perturbation
/// diversity without external fuzzers.
class MutatorCatalog {
public:
  static MutatorCatalog standard();

  void disable(std::string_view name);
  void enable(std::string_view name);
  bool is_enabled(std::string_view name) const;

  const std::vector<MutatorDef>& mutators() const { return mutators_; }

  /// Verifies at least one mutator is enabled for every variant tag present
  /// in `args` (recursing into sequences and records). Throws
  /// EngineError("config") otherwise.
  void require_coverage(const std::vector<InputValue>& args) const;

private:
  std::vector<MutatorDef> mutators_;
};

/// All perturbations of one value: at most `budget` distinct values, none
/// equal to `v`, in near-first order (single edits before compound edits),
/// shuffled within each edit tier by `seed`. Deterministic in (v, budget,
/// seed). May return fewer than `budget` values when the space is exhausted.
std::vector<InputValue> perturb_value(const InputValue& v, std::size_t budget,
                                      std::uint64_t seed);

/// Suite members with the original's oracle and arity, excluding the original
/// itself, wrapped as SuiteReuse candidates.
std::vector<Candidate> reuse_suite_candidates(const std::vector<TestSpec>& suite,
                                              const TestSpec& original);

/// Deduplicated lazy stream of perturbed inputs: suite reuse first, then
/// fuzzed candidates round by round (all single-argument perturbations before
/// compound two-argument ones). Yields at most config.max_candidates
/// candidates; fully deterministic given config.rng_seed.
class CandidateStream {
public:
  CandidateStream(TestSpec original, MutatorCatalog catalog, SearchConfig config,
                  std::vector<TestSpec> suite = {});
  ~CandidateStream();

  CandidateStream(CandidateStream&&) noexcept;
  CandidateStream& operator=(CandidateStream&&) noexcept;

  std::optional<Candidate> next();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Drains a stream into a vector (bounded by config.max_candidates).
std::vector<Candidate> collect_candidates(CandidateStream& stream);

} // namespace causal

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "causal/candidates.hpp"
#include "causal/executor.hpp"
#include "causal/report.hpp"
#include "causal/value.hpp"

namespace causal {

/// Everything one run needs: the subject harness command, the original
/// failing test, search configuration, and optional suite/mutator tweaks.
struct RunManifest {
  SubprocessSpec harness;
  TestSpec original;
  SearchConfig config;
  std::optional<std::string> suite_path; // resolved to absolute on load
  std::vector<std::string> disabled_mutators;
  bool seed_explicit = false; // manifest set rng_seed (blocks env fallback)
};

/// Command-line values that take precedence over manifest fields.
struct ManifestOverrides {
  std::optional<std::vector<std::string>> harness_cmd;
  std::optional<std::string> args_json; // canonical InputValue array
  std::optional<std::string> oracle;
  std::optional<std::string> test_id;
  std::optional<std::string> suite_path;
  std::optional<int> target_passing;
  std::optional<int> max_candidates;
  std::optional<std::int64_t> per_execution_timeout_ms;
  std::optional<std::int64_t> total_budget_ms;
  std::optional<std::uint64_t> rng_seed;
  std::optional<int> parallelism;
  std::optional<std::vector<double>> weights;
  std::optional<int> repeat;
  std::optional<int> report_k;
};

/// Loads and validates a manifest file; relative paths resolve against the
/// manifest's directory and must exist. Throws EngineError("config").
RunManifest load_manifest(const std::filesystem::path& path);
RunManifest manifest_from_json(const Json& j, const std::filesystem::path& base_dir);

/// Flags always win over manifest fields.
void apply_overrides(RunManifest& manifest, const ManifestOverrides& overrides);

/// Completes a partially specified manifest (e.g. built purely from flags).
/// Throws EngineError("config") when no original test or harness is present.
void finalize_manifest(RunManifest& manifest);

std::vector<TestSpec> load_suite(const std::filesystem::path& path);

struct PipelineHooks {
  std::function<void(const ExecutionRecord&, std::size_t)> on_executed;
  const std::atomic<bool>* cancel = nullptr;
};

/// The whole engine end to end: validate, generate, rank, search, report.
/// `harness` substitutes for the manifest's subprocess command (replay or
/// in-process harnesses); pass {} to use the manifest's command.
CausalReport run_pipeline(const RunManifest& manifest,
                          const std::optional<HarnessHandle>& harness = {},
                          const PipelineHooks& hooks = {});

} // namespace causal

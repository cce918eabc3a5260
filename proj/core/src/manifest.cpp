#include "causal/manifest.hpp"

#include <fstream>
#include <sstream>

#include "causal/errors.hpp"
#include "causal/similarity.hpp"

namespace causal {

namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json parse_json_file(const fs::path& path) {
  Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw config_error("invalid JSON in " + path.string());
  return j;
}

fs::path resolve_existing(const fs::path& base_dir, const std::string& raw,
                          const char* what) {
  fs::path p(raw);
  if (p.is_relative()) p = base_dir / p;
  if (!fs::exists(p))
    throw config_error(std::string(what) + " not found: " + p.string());
  return fs::absolute(p);
}

std::vector<InputValue> args_from_json_text(const std::string& text) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_array())
    throw config_error("args must be a JSON array of input values");
  std::vector<InputValue> args;
  for (const auto& e : j) args.push_back(InputValue::from_json(e));
  return args;
}

} // namespace

RunManifest manifest_from_json(const Json& j, const fs::path& base_dir) {
  RunManifest m;

  if (j.contains("harness")) {
    const Json& h = j["harness"];
    if (!h.contains("cmd") || !h["cmd"].is_array() || h["cmd"].empty())
      throw config_error("harness.cmd must be a non-empty array");
    for (const auto& a : h["cmd"]) m.harness.argv.push_back(a.get<std::string>());
    if (h.contains("env"))
      for (auto it = h["env"].begin(); it != h["env"].end(); ++it)
        m.harness.env[it.key()] = it.value().get<std::string>();
    // Commands with a path component must resolve now.
    if (m.harness.argv[0].find('/') != std::string::npos)
      m.harness.argv[0] =
          resolve_existing(base_dir, m.harness.argv[0], "harness command").string();
  }

  const bool inline_test = j.contains("test");
  const bool file_test = j.contains("test_file");
  if (inline_test && file_test)
    throw config_error("manifest has both \"test\" and \"test_file\"; exactly one "
                       "original test per run");
  if (inline_test) {
    m.original = TestSpec::from_json(j["test"]);
  } else if (file_test) {
    auto path = resolve_existing(base_dir, j["test_file"].get<std::string>(), "test file");
    m.original = TestSpec::from_json(parse_json_file(path));
  }

  if (j.contains("config")) {
    m.config = SearchConfig::from_json(j["config"]);
    m.seed_explicit = j["config"].contains("rng_seed");
  }

  if (j.contains("suite") && !j["suite"].is_null())
    m.suite_path =
        resolve_existing(base_dir, j["suite"].get<std::string>(), "suite file").string();

  if (j.contains("mutators")) {
    const Json& muts = j["mutators"];
    for (const auto& name : muts.value("disabled", Json::array()))
      m.disabled_mutators.push_back(name.get<std::string>());
  }
  return m;
}

RunManifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw config_error("manifest not found: " + path.string());
  return manifest_from_json(parse_json_file(path), fs::absolute(path).parent_path());
}

void apply_overrides(RunManifest& manifest, const ManifestOverrides& o) {
  if (o.harness_cmd) manifest.harness.argv = *o.harness_cmd;
  if (o.args_json) manifest.original.args = args_from_json_text(*o.args_json);
  if (o.oracle) manifest.original.oracle_id = *o.oracle;
  if (o.test_id) manifest.original.test_id = *o.test_id;
  if (o.suite_path) manifest.suite_path = *o.suite_path;
  if (o.target_passing) manifest.config.target_passing = *o.target_passing;
  if (o.max_candidates) manifest.config.max_candidates = *o.max_candidates;
  if (o.per_execution_timeout_ms)
    manifest.config.per_execution_timeout_ms = *o.per_execution_timeout_ms;
  if (o.total_budget_ms) manifest.config.total_budget_ms = *o.total_budget_ms;
  if (o.rng_seed) manifest.config.rng_seed = *o.rng_seed;
  if (o.parallelism) manifest.config.parallelism = *o.parallelism;
  if (o.weights) manifest.config.weights = *o.weights;
  if (o.repeat) manifest.config.repeat = *o.repeat;
  if (o.report_k) manifest.config.report_k = *o.report_k;
}

void finalize_manifest(RunManifest& manifest) {
  if (manifest.harness.argv.empty())
    throw config_error("no harness command (manifest \"harness.cmd\" or --harness-cmd)");
  if (manifest.original.args.empty())
    throw config_error("no original test (manifest \"test\" or --args-json/--oracle)");
  if (manifest.original.oracle_id.empty())
    throw config_error("original test has no oracle id");
  if (manifest.original.test_id.empty()) manifest.original.test_id = "original";
  // report_k follows a smaller target unless set explicitly.
  if (manifest.config.report_k > manifest.config.target_passing)
    manifest.config.report_k = manifest.config.target_passing;
}

std::vector<TestSpec> load_suite(const fs::path& path) {
  Json j = parse_json_file(path);
  if (!j.is_array()) throw config_error("suite file must be a JSON array of tests");
  std::vector<TestSpec> suite;
  for (const auto& t : j) suite.push_back(TestSpec::from_json(t));
  return suite;
}

CausalReport run_pipeline(const RunManifest& manifest,
                          const std::optional<HarnessHandle>& harness,
                          const PipelineHooks& hooks) {
  TestSpec original = validate_spec(manifest.original);
  validate_config(manifest.config, original.args.size());

  auto catalog = MutatorCatalog::standard();
  for (const auto& name : manifest.disabled_mutators) catalog.disable(name);
  catalog.require_coverage(original.args);

  std::vector<TestSpec> suite;
  if (manifest.suite_path) suite = load_suite(*manifest.suite_path);

  CandidateStream stream(original, catalog, manifest.config, std::move(suite));
  auto ranked = rank_candidates(stream, original, manifest.config);

  HarnessHandle handle = harness ? *harness
                                 : HarnessHandle::subprocess(manifest.harness.argv,
                                                             manifest.harness.env);

  SearchHooks search_hooks;
  search_hooks.on_executed = hooks.on_executed;
  search_hooks.cancel = hooks.cancel;
  SearchResult result = run_search(original, ranked, handle, manifest.config, search_hooks);

  return build_report(result, manifest.config);
}

} // namespace causal

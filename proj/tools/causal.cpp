// causal: given a failing test, search for minimally different passing
// inputs (and any failing inputs closer still), diff the execution traces,
// and emit a report that points at the root cause.

#include <signal.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "causal/errors.hpp"
#include "causal/manifest.hpp"
#include "causal/report.hpp"
#include "causal/version.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace causal;

namespace {

std::atomic<bool> g_interrupted{false};

void handle_signal(int) { g_interrupted.store(true); }

void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = handle_signal;
  ::sigaction(SIGINT, &sa, nullptr);
  ::sigaction(SIGTERM, &sa, nullptr);
}

int fail_with(const std::string& category, const std::string& message) {
  std::cerr << "error: " << category << ": " << message << "\n";
  return category == "original-passed" ? 3 : 4;
}

/// Splits a command string on whitespace, honoring single and double quotes.
std::vector<std::string> split_command(const std::string& cmd) {
  std::vector<std::string> out;
  std::string current;
  char quote = 0;
  bool in_token = false;
  for (char c : cmd) {
    if (quote) {
      if (c == quote)
        quote = 0;
      else
        current.push_back(c);
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      in_token = true;
      continue;
    }
    if (c == ' ' || c == '\t') {
      if (in_token) {
        out.push_back(current);
        current.clear();
        in_token = false;
      }
      continue;
    }
    current.push_back(c);
    in_token = true;
  }
  if (in_token) out.push_back(current);
  return out;
}

std::vector<double> parse_weights_csv(const std::string& csv) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    std::size_t comma = csv.find(',', pos);
    std::string item = csv.substr(pos, comma == std::string::npos ? std::string::npos
                                                                  : comma - pos);
    if (item.empty()) throw config_error("empty weight in --weights");
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw config_error("bad weight \"" + item + "\" in --weights");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

void write_output(const std::string& bytes, const std::string& output_path) {
  if (output_path.empty() || output_path == "-") {
    std::cout << bytes;
    return;
  }
  std::ofstream out(output_path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write " + output_path);
  out << bytes;
}

struct RunFlags {
  std::string manifest_path;
  std::string harness_cmd;
  std::string args_json;
  std::string oracle;
  std::string suite;
  int target_passing = 0;
  int max_candidates = 0;
  std::int64_t timeout_ms = 0;
  std::int64_t total_budget_ms = 0;
  std::uint64_t seed = 0;
  int parallelism = 0;
  std::string weights_csv;
  int repeat = 0;
  std::string format = "text";
  std::string output;
  bool verbose = false;
  bool progress = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--manifest", flags.manifest_path, "Run manifest (JSON)");
  cmd->add_option("--harness-cmd", flags.harness_cmd,
                  "Harness command line (overrides manifest)");
  cmd->add_option("--args-json", flags.args_json,
                  "Original test arguments as a canonical JSON array");
  cmd->add_option("--oracle", flags.oracle, "Oracle id the harness applies");
  cmd->add_option("--suite", flags.suite, "Existing test suite (JSON array) to reuse");
  cmd->add_option("--target-passing", flags.target_passing,
                  "Stop after this many passing tests (default 3)");
  cmd->add_option("--max-candidates", flags.max_candidates,
                  "Cap on generated candidates (default 5000)");
  cmd->add_option("--timeout-ms", flags.timeout_ms,
                  "Per-execution timeout (default 5000)");
  cmd->add_option("--total-budget-ms", flags.total_budget_ms,
                  "Total search budget (default 600000)");
  cmd->add_option("--seed", flags.seed, "RNG seed (env CAUSA_SEED as fallback)");
  cmd->add_option("--parallelism", flags.parallelism, "Concurrent harness workers");
  cmd->add_option("--weights", flags.weights_csv,
                  "Per-argument distance weights, comma separated");
  cmd->add_option("--repeat", flags.repeat,
                  "Re-run passing candidates this many times; demote flakes");
}

ManifestOverrides overrides_from_flags(const CLI::App* cmd, const RunFlags& flags) {
  ManifestOverrides o;
  if (cmd->count("--harness-cmd")) o.harness_cmd = split_command(flags.harness_cmd);
  if (cmd->count("--args-json")) o.args_json = flags.args_json;
  if (cmd->count("--oracle")) o.oracle = flags.oracle;
  if (cmd->count("--suite")) o.suite_path = flags.suite;
  if (cmd->count("--target-passing")) o.target_passing = flags.target_passing;
  if (cmd->count("--max-candidates")) o.max_candidates = flags.max_candidates;
  if (cmd->count("--timeout-ms")) o.per_execution_timeout_ms = flags.timeout_ms;
  if (cmd->count("--total-budget-ms")) o.total_budget_ms = flags.total_budget_ms;
  if (cmd->count("--seed")) o.rng_seed = flags.seed;
  if (cmd->count("--parallelism")) o.parallelism = flags.parallelism;
  if (cmd->count("--weights")) o.weights = parse_weights_csv(flags.weights_csv);
  if (cmd->count("--repeat")) o.repeat = flags.repeat;
  return o;
}

RunManifest build_manifest(const CLI::App* cmd, const RunFlags& flags) {
  RunManifest manifest;
  if (!flags.manifest_path.empty()) manifest = load_manifest(flags.manifest_path);

  ManifestOverrides overrides = overrides_from_flags(cmd, flags);
  // Seed precedence: flag, then manifest, then CAUSA_SEED.
  if (!overrides.rng_seed && !manifest.seed_explicit) {
    if (const char* env = std::getenv("CAUSA_SEED")) {
      try {
        overrides.rng_seed = std::stoull(env);
      } catch (const std::exception&) {
        throw config_error("CAUSA_SEED is not an unsigned integer");
      }
    }
  }
  apply_overrides(manifest, overrides);
  finalize_manifest(manifest);
  return manifest;
}

int cmd_run(const CLI::App* cmd, const RunFlags& flags) {
  RunManifest manifest = build_manifest(cmd, flags);

  PipelineHooks hooks;
  hooks.cancel = &g_interrupted;
  if (flags.progress) {
    hooks.on_executed = [](const ExecutionRecord& rec, std::size_t n) {
      std::cerr << "progress: n=" << n << " distance=" << rec.distance_to_original
                << " outcome=" << rec.outcome.name()
                << " args=" << canonical_args_json(rec.spec.args) << "\n";
    };
  }

  CausalReport report = run_pipeline(manifest, std::nullopt, hooks);

  ReportFormat format = flags.format == "json" ? ReportFormat::json : ReportFormat::text;
  RenderOptions options;
  options.verbose = flags.verbose;
  write_output(render(report, format, options), flags.output);
  return report.nearest_passing.empty() ? 2 : 0;
}

int cmd_fixtures_list() {
  for (const auto& f : tools::bundled_fixtures()) {
    std::cout << f.name << (f.protocol_fault ? "  [protocol-fault]" : "") << "\n    "
              << f.summary << "\n    oracle: " << f.oracle << "  args: " << f.args_json
              << "\n";
  }
  return 0;
}

int cmd_fixtures_materialize(const std::string& name, const std::string& dir) {
  const tools::Fixture* fixture = tools::find_fixture(name);
  if (!fixture) return fail_with("config", "unknown fixture \"" + name + "\"");
  fs::path path =
      tools::materialize_fixture(*fixture, dir.empty() ? fs::path(".") : fs::path(dir),
                                 tools::default_harness_binary());
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_validate_harness(const CLI::App* cmd, const RunFlags& flags) {
  RunManifest manifest = build_manifest(cmd, flags);
  TestSpec spec = validate_spec(manifest.original);
  std::int64_t timeout = manifest.config.per_execution_timeout_ms;

  bool conformant = true;
  const auto check = [&](bool ok, const std::string& name, const std::string& detail) {
    if (ok)
      std::cout << "ok: " << name << (detail.empty() ? "" : " - " + detail) << "\n";
    else
      std::cout << "FAIL: " << name << (detail.empty() ? "" : " - " + detail) << "\n";
    conformant = conformant && ok;
  };

  std::unique_ptr<HarnessConnection> conn;
  try {
    conn = connect(HarnessHandle::subprocess(manifest.harness.argv, manifest.harness.env));
    check(true, "spawn", "harness process started");
  } catch (const EngineError& e) {
    check(false, "spawn", e.what());
    std::cout << "harness NOT conformant\n";
    return 4;
  }

  const auto run_once = [&](const char* name) {
    auto result = conn->request(spec.oracle_id, spec.args, timeout);
    switch (result.status) {
      case HarnessConnection::Status::ok: {
        const std::string& outcome = result.reply.outcome;
        bool known = outcome == "pass" || outcome == "fail" || outcome == "crash";
        check(known, name,
              known ? "outcome \"" + outcome + "\"" : "unknown outcome \"" + outcome + "\"");
        if (known && result.reply.trace_events) {
          auto parsed = parse_trace_events(*result.reply.trace_events);
          check(true, std::string(name) + ".trace",
                std::to_string(parsed.trace.events.size()) + " events, " +
                    std::to_string(parsed.warnings.size()) + " warnings");
          for (const auto& w : parsed.warnings) std::cout << "  note: " << w << "\n";
        }
        return known;
      }
      case HarnessConnection::Status::timeout:
        check(false, name, "no response within " + std::to_string(timeout) + " ms");
        return false;
      default:
        check(false, name, result.diagnostic);
        return false;
    }
  };

  bool first = run_once("response");
  if (first) run_once("id-tracking"); // second exchange exercises id sequencing

  bool clean = conn->shutdown();
  check(clean, "shutdown", clean ? "clean exit" : "harness had to be killed");

  std::cout << (conformant ? "harness conformant\n" : "harness NOT conformant\n");
  return conformant ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
  install_signal_handlers();

  CLI::App app{"causal testing engine: finds minimally different passing inputs "
               "for a failing test and diffs their execution traces"};
  app.set_version_flag("--version", std::string("causal ") + kEngineVersion);
  app.require_subcommand(1);

  RunFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "Search for minimally different tests");
  add_run_flags(run, run_flags);
  run->add_option("--format", run_flags.format, "Report format: text or json")
      ->check(CLI::IsMember({"text", "json"}));
  run->add_option("--output", run_flags.output, "Report destination (default stdout)");
  run->add_flag("--verbose", run_flags.verbose, "Expanded trace diff hunks");
  run->add_flag("--progress", run_flags.progress, "Progress lines on stderr");

  CLI::App* fixtures = app.add_subcommand("fixtures", "Bundled example subjects");
  fixtures->require_subcommand(1);
  CLI::App* fixtures_list = fixtures->add_subcommand("list", "List bundled fixtures");
  std::string materialize_name, materialize_dir;
  CLI::App* fixtures_mat =
      fixtures->add_subcommand("materialize", "Write a fixture's run manifest");
  fixtures_mat->add_option("name", materialize_name, "Fixture name")->required();
  fixtures_mat->add_option("--dir", materialize_dir, "Destination directory");

  RunFlags validate_flags;
  CLI::App* validate = app.add_subcommand(
      "validate-harness", "Check a harness against the wire protocol");
  add_run_flags(validate, validate_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run, run_flags);
    if (fixtures_list->parsed()) return cmd_fixtures_list();
    if (fixtures_mat->parsed())
      return cmd_fixtures_materialize(materialize_name, materialize_dir);
    if (validate->parsed()) return cmd_validate_harness(validate, validate_flags);
  } catch (const EngineError& e) {
    return fail_with(e.category(), e.what());
  } catch (const std::exception& e) {
    return fail_with("internal", e.what());
  }
  return 4;
}

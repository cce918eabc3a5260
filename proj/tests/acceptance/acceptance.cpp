// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// criterion fails. Library-level checks use causal-core directly; scenario
// checks drive the installed CLI and harness binaries end to end.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "causal/executor.hpp"
#include "causal/manifest.hpp"
#include "causal/report.hpp"
#include "causal/similarity.hpp"
#include "causal/trace.hpp"
#include "../support/generators.hpp"
#include "../support/oracles.hpp"

using namespace causal;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct CheckFailure {
  std::string detail;
};

struct Checker {
  std::vector<std::string> failures;

  void require(bool ok, const std::string& detail) {
    if (!ok) failures.push_back(detail);
  }
  template <typename A, typename B>
  void equal(const A& actual, const B& expected, const std::string& what) {
    if (!(actual == static_cast<A>(expected))) {
      std::ostringstream os;
      os << what << ": got " << actual << ", expected " << expected;
      failures.push_back(os.str());
    }
  }
};

struct CmdResult {
  int exit_code = -1;
  std::string out;
};

CmdResult run_cmd(const std::string& cmd) {
  CmdResult result;
  FILE* pipe = ::popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!pipe) {
    result.out = "popen failed";
    return result;
  }
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) result.out.append(buf, n);
  int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path g_workdir;

std::string materialize(Checker& c, const std::string& fixture) {
  auto r = run_cmd(std::string(CAUSAL_BIN) + " fixtures materialize " + fixture +
                   " --dir " + g_workdir.string());
  c.require(r.exit_code == 0, "fixtures materialize " + fixture + " failed");
  return (g_workdir / (fixture + ".manifest.json")).string();
}

Json run_fixture_json(Checker& c, const std::string& fixture, const std::string& extra,
                      int expected_exit) {
  auto manifest = materialize(c, fixture);
  fs::path out = g_workdir / (fixture + ".report.json");
  auto r = run_cmd(std::string(CAUSAL_BIN) + " run --manifest " + manifest + " " + extra +
                   " --format json --output " + out.string());
  c.equal(r.exit_code, expected_exit, fixture + " exit code");
  std::string bytes = read_file(out);
  if (bytes.empty()) {
    c.require(false, fixture + ": empty report");
    return Json::object();
  }
  return Json::parse(bytes, nullptr, false);
}

// --- criterion 1: §2 scenario reproduction --------------------------------

void criterion_1(Checker& c) {
  auto start = Clock::now();
  Json report = run_fixture_json(c, "hexparser", "--seed 42", 0);
  auto elapsed = std::chrono::duration_cast<std::chrono::seconds>(Clock::now() - start);
  c.require(elapsed.count() < 10, "hexparser run took >= 10 s");

  if (!report.contains("nearest_passing") || report["nearest_passing"].empty()) {
    c.require(false, "no passing neighbor reported");
    return;
  }
  const Json& top = report["nearest_passing"][0];
  c.equal(top["record"]["test"]["args"][0].get<std::string>(), std::string("0xfade"),
          "nearest passing input");
  c.require(std::abs(top["record"]["distance"].get<double>() - 1.0 / 6.0) < 1e-12,
            "nearest passing distance is not 1/6");

  const Json& highlights = top["highlights"];
  if (highlights.size() != 1 || highlights[0]["edits"].size() != 1) {
    c.require(false, "expected exactly one single-edit highlight");
    return;
  }
  const Json& edit = highlights[0]["edits"][0];
  c.equal(edit["op"].get<std::string>(), std::string("substitute"), "highlight op");
  c.equal(edit["failing_pos"].get<std::size_t>(), std::size_t{1}, "highlight position");
  c.equal(edit["failing"].get<std::string>(), std::string("X"), "highlight source char");
  c.equal(edit["passing"].get<std::string>(), std::string("x"), "highlight target char");
}

// --- criterion 2: stopping rule --------------------------------------------

void criterion_2(Checker& c) {
  // Precondition: the fixture admits >= 10 passing perturbations.
  RunManifest manifest;
  manifest.harness.argv = {CAUSAL_HARNESS_BIN, "offbyone"};
  manifest.original = {"off-by-one-17", {InputValue::integer(17)}, "off-by-one"};
  manifest.config.rng_seed = 1;
  manifest.config.max_candidates = 200;
  manifest.config.target_passing = 1000; // run the whole stream
  manifest.config.report_k = 1000;

  CandidateStream stream(manifest.original, MutatorCatalog::standard(), manifest.config);
  auto ranked = rank_candidates(stream, manifest.original, manifest.config);
  auto handle = HarnessHandle::subprocess(manifest.harness.argv, {});
  SearchResult all = run_search(manifest.original, ranked, handle, manifest.config);
  c.require(all.passing.size() >= 10,
            "fixture admits only " + std::to_string(all.passing.size()) +
                " passing perturbations");

  // The real run: target 3 stops after exactly 3 recorded passes.
  Json report = run_fixture_json(c, "offbyone", "--seed 42 --target-passing 3", 0);
  c.equal(report["stop_reason"].get<std::string>(), std::string("target-reached"),
          "stop reason");
  c.equal(report["nearest_passing"].size(), std::size_t{3}, "|nearest_passing|");
  c.equal(report["timing"]["executed"].get<std::size_t>(), std::size_t{3},
          "executed candidates (parallelism 1, no in-flight work)");
}

// --- criterion 3: Levenshtein oracle equivalence ----------------------------

void criterion_3(Checker& c) {
  auto start = Clock::now();
  auto strings = oracles::all_strings("abc", 4);
  std::size_t pairs = 0, mismatches = 0;
  for (std::size_t i = 0; i < strings.size(); ++i) {
    for (std::size_t j = i; j < strings.size(); ++j) {
      ++pairs;
      std::size_t expected = oracles::brute_levenshtein(strings[i], strings[j]);
      std::size_t longest = std::max(strings[i].size(), strings[j].size());
      double expected_norm =
          longest == 0 ? 0.0
                       : static_cast<double>(expected) / static_cast<double>(longest);
      if (string_distance(strings[i], strings[j]).value != expected_norm) ++mismatches;
    }
  }
  auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
  c.require(pairs == 7381, "expected 7381 pairs, saw " + std::to_string(pairs));
  c.equal(mismatches, std::size_t{0}, "oracle mismatches");
  c.require(elapsed.count() < 5000,
            "oracle sweep took " + std::to_string(elapsed.count()) + " ms (>= 5 s)");
}

// --- criterion 4: ranking monotonicity --------------------------------------

void criterion_4(Checker& c) {
  std::mt19937_64 rng(20260810);
  std::size_t violations = 0;
  for (int iter = 0; iter < 100; ++iter) {
    TestSpec original{"orig", {gen::random_value(rng, 1)}, "o"};
    std::vector<Candidate> candidates;
    for (int i = 0; i < 50; ++i) {
      Candidate cand;
      cand.spec = {"c" + std::to_string(i), {gen::random_value(rng, 1)}, "o"};
      if (same_args(cand.spec, original)) continue;
      cand.provenance = Provenance::fuzzed("gen", static_cast<std::uint64_t>(i));
      candidates.push_back(std::move(cand));
    }
    auto ranked = rank_candidates(std::move(candidates), original, {});

    auto harness = HarnessHandle::in_process([](const RunRequest&) -> HarnessReply {
      return {"fail", "x", std::nullopt, std::nullopt};
    });
    std::vector<double> dispatched;
    SearchHooks hooks;
    hooks.on_executed = [&](const ExecutionRecord& rec, std::size_t) {
      dispatched.push_back(rec.distance_to_original);
    };
    SearchConfig config;
    config.target_passing = 10000;
    config.report_k = 10000;
    try {
      run_search(original, ranked, harness, config, hooks);
    } catch (const EngineError& e) {
      c.require(false, std::string("run_search failed: ") + e.what());
      return;
    }
    for (std::size_t i = 1; i < dispatched.size(); ++i)
      if (dispatched[i - 1] > dispatched[i]) ++violations;
  }
  c.equal(violations, std::size_t{0}, "monotonicity violations");
}

// --- criterion 5: trace-diff properties --------------------------------------

void criterion_5(Checker& c) {
  std::mt19937_64 rng(31337);
  for (int i = 0; i < 1000; ++i) {
    auto [failing, passing] = gen::related_traces(rng, 50);
    TraceDiff diff = diff_traces(failing, passing);
    try {
      if (!(apply_to_failing(diff, failing) == passing) ||
          !(apply_to_passing(diff, passing) == failing)) {
        c.require(false, "patch property violated at iteration " + std::to_string(i));
        break;
      }
    } catch (const EngineError& e) {
      c.require(false, std::string("patch application failed: ") + e.what());
      break;
    }
  }

  for (int i = 0; i < 200; ++i) {
    Trace t = gen::random_trace(rng, 50);
    if (t.events.empty()) continue;
    TraceDiff diff = diff_traces(t, t);
    if (diff.hunks.size() != 1 || !std::holds_alternative<CommonHunk>(diff.hunks[0])) {
      c.require(false, "identical traces did not produce a single common hunk");
      break;
    }
  }

  // LCS optimality against the brute-force subsequence oracle, lengths <= 6
  // over 3 distinct events.
  std::vector<CallEvent> alphabet;
  for (int i = 0; i < 3; ++i) {
    CallEvent e;
    e.method = "m" + std::to_string(i);
    e.call_site = "s";
    e.depth = 0;
    alphabet.push_back(e);
  }
  std::uniform_int_distribution<int> sym(0, 2);
  std::uniform_int_distribution<std::size_t> len(0, 6);
  std::size_t lcs_mismatches = 0;
  for (int i = 0; i < 2000; ++i) {
    std::vector<int> wa(len(rng)), wb(len(rng));
    for (auto& x : wa) x = sym(rng);
    for (auto& x : wb) x = sym(rng);
    Trace a, b;
    for (int x : wa) a.events.push_back(alphabet[static_cast<std::size_t>(x)]);
    for (int x : wb) b.events.push_back(alphabet[static_cast<std::size_t>(x)]);
    TraceDiff diff = diff_traces(a, b);
    std::size_t unaligned = 0;
    for (const auto& hunk : diff.hunks) {
      if (const auto* f = std::get_if<OnlyInFailingHunk>(&hunk)) unaligned += f->events.size();
      if (const auto* p = std::get_if<OnlyInPassingHunk>(&hunk)) unaligned += p->events.size();
    }
    if (unaligned != wa.size() + wb.size() - 2 * oracles::brute_lcs(wa, wb))
      ++lcs_mismatches;
  }
  c.equal(lcs_mismatches, std::size_t{0}, "LCS optimality mismatches");
}

// --- criterion 6: closer-failing invariant -----------------------------------

void check_closer_failing(Checker& c, const Json& report, const std::string& label) {
  if (!report.contains("nearest_passing")) {
    c.require(false, label + ": malformed report");
    return;
  }
  if (report["nearest_passing"].empty()) return; // nothing to compare against
  double max_passing = 0.0;
  for (const auto& entry : report["nearest_passing"])
    max_passing = std::max(max_passing, entry["record"]["distance"].get<double>());
  for (const auto& rec : report["closer_failing"]) {
    double d = rec["distance"].get<double>();
    if (!(d < max_passing)) {
      c.require(false, label + ": closer_failing distance " + std::to_string(d) +
                           " not strictly below " + std::to_string(max_passing));
      return;
    }
  }
}

void criterion_6(Checker& c) {
  Json hex = run_fixture_json(c, "hexparser", "--seed 6", 0);
  Json date = run_fixture_json(c, "daterange", "--seed 6", 0);
  Json off = run_fixture_json(c, "offbyone", "--seed 6", 0);
  check_closer_failing(c, hex, "hexparser");
  check_closer_failing(c, date, "daterange");
  check_closer_failing(c, off, "offbyone");
  // The invariant must actually bite somewhere: perturbing [95,105] by one
  // step keeps it straddling the boundary, so near failing neighbors exist.
  c.require(!date["closer_failing"].empty(), "daterange produced no closer_failing");
}

// --- criterion 7: determinism ------------------------------------------------

void criterion_7(Checker& c) {
  std::string manifest_path = materialize(c, "hexparser");
  RunManifest manifest = load_manifest(manifest_path);
  manifest.config.rng_seed = 42;

  auto transcript = std::make_shared<Transcript>();
  HarnessHandle live = HarnessHandle::subprocess(manifest.harness.argv, {});
  live.record_to = transcript;
  CausalReport first = run_pipeline(manifest, live);

  // Same manifest + seed + recorded transcript, executed twice.
  HarnessHandle replay = replay_handle(transcript);
  std::string a = render(run_pipeline(manifest, replay), ReportFormat::json);
  std::string b = render(run_pipeline(manifest, replay), ReportFormat::json);
  c.require(a == b, "replayed runs differ byte-for-byte");
  c.require(a == render(first, ReportFormat::json),
            "replayed report differs from the recorded run");
}

// --- criterion 8: protocol conformance ----------------------------------------

void criterion_8(Checker& c) {
  for (const char* good : {"hexparser", "daterange", "offbyone", "rejectall", "flaky"}) {
    auto manifest = materialize(c, good);
    auto r = run_cmd(std::string(CAUSAL_BIN) + " validate-harness --manifest " + manifest);
    c.require(r.exit_code == 0, std::string(good) + " not conformant");
  }
  for (const char* bad : {"badjson", "wrongid"}) {
    auto manifest = materialize(c, bad);
    auto r = run_cmd(std::string(CAUSAL_BIN) + " validate-harness --manifest " + manifest);
    c.require(r.exit_code == 4, std::string(bad) + " not flagged as non-conformant");
    c.require(r.out.find("FAIL") != std::string::npos,
              std::string(bad) + " output lacks a FAIL line");
  }

  // Malformed responses map to Crash outcomes without aborting the search.
  Json report = run_fixture_json(c, "badjson", "--seed 8 --max-candidates 20", 2);
  c.equal(report["original"]["outcome"]["kind"].get<std::string>(), std::string("crash"),
          "badjson original outcome");
  c.equal(report["timing"]["executed"].get<std::size_t>(), std::size_t{20},
          "badjson executed count (search must not abort)");
}

// --- criterion 9: no-neighbor honesty ------------------------------------------

void criterion_9(Checker& c) {
  auto manifest = materialize(c, "rejectall");
  fs::path out = g_workdir / "rejectall.report.txt";
  auto r = run_cmd(std::string(CAUSAL_BIN) + " run --manifest " + manifest +
                   " --seed 9 --output " + out.string());
  c.equal(r.exit_code, 2, "rejectall exit code");
  c.require(read_file(out).find("No passing perturbation found within budget.") !=
                std::string::npos,
            "report lacks the no-neighbor line");
}

struct Criterion {
  int id;
  const char* title;
  std::function<void(Checker&)> fn;
};

} // namespace

int main() {
  g_workdir = fs::temp_directory_path() /
              ("causal-acceptance-" + std::to_string(::getpid()));
  fs::create_directories(g_workdir);

  const std::vector<Criterion> criteria = {
      {1, "hex-parser scenario: nearest passing is 0xfade, highlight at index 1, under 10 s",
       criterion_1},
      {2, "stopping rule: exactly 3 passes recorded with target_passing = 3", criterion_2},
      {3, "string_distance matches the brute-force oracle on all 7381 pairs, under 5 s",
       criterion_3},
      {4, "dispatch order has non-decreasing distance over 100 randomized sets",
       criterion_4},
      {5, "trace-diff patch property, single-common identity, and LCS optimality",
       criterion_5},
      {6, "closer_failing stays strictly below the farthest reported pass", criterion_6},
      {7, "identical manifest + seed + transcript give byte-identical JSON reports",
       criterion_7},
      {8, "validate-harness accepts bundled fixtures and flags malformed harnesses",
       criterion_8},
      {9, "exhausted search exits 2 and reports no passing perturbation", criterion_9},
  };

  int failed = 0;
  for (const auto& criterion : criteria) {
    Checker checker;
    try {
      criterion.fn(checker);
    } catch (const std::exception& e) {
      checker.failures.push_back(std::string("exception: ") + e.what());
    }
    if (checker.failures.empty()) {
      std::cout << "PASS criterion " << criterion.id << ": " << criterion.title << "\n";
    } else {
      ++failed;
      std::cout << "FAIL criterion " << criterion.id << ": " << criterion.title << "\n";
      for (const auto& f : checker.failures) std::cout << "     - " << f << "\n";
    }
  }

  fs::remove_all(g_workdir);
  std::cout << (failed == 0 ? "all criteria passed\n"
                            : std::to_string(failed) + " criteria failed\n");
  return failed == 0 ? 0 : 1;
}

#include <doctest.h>

#include <random>

#include "causal/report.hpp"
#include "causal/utf8.hpp"
#include "causal/version.hpp"
#include "../support/generators.hpp"

using namespace causal;

namespace {

ExecutionRecord record_of(const std::string& id, std::vector<InputValue> args,
                          Outcome outcome, double distance,
                          std::optional<Trace> trace = std::nullopt) {
  ExecutionRecord rec;
  rec.spec = {id, std::move(args), "hex-parse"};
  rec.outcome = std::move(outcome);
  rec.trace = std::move(trace);
  rec.distance_to_original = distance;
  rec.wall_ms = 3;
  return rec;
}

Trace small_trace(const char* tail_method) {
  Trace t;
  CallEvent a;
  a.method = "createNumber";
  a.call_site = "test:1";
  a.depth = 0;
  CallEvent b;
  b.method = tail_method;
  b.call_site = "impl:2";
  b.depth = 1;
  t.events = {a, b};
  return t;
}

SearchResult hexlike_result() {
  SearchResult result;
  result.original = record_of("orig", {InputValue::text("0Xfade")},
                              Outcome::fail("0Xfade is not a valid number."), 0.0,
                              small_trace("raiseInvalidPrefix"));
  result.passing.push_back(record_of("c1", {InputValue::text("0xfade")}, Outcome::pass(),
                                     1.0 / 6.0, small_trace("parseHexDigits")));
  result.closer_failing.push_back(record_of("c0", {InputValue::text("0Xfades")},
                                            Outcome::fail("nope"), 1.0 / 7.0));
  result.executed_count = 42;
  result.candidate_wall_ms = 10;
  result.stop_reason = StopReason::target_reached;
  return result;
}

/// Independent application of the highlight edits to the failing text.
std::string apply_highlight(const std::string& failing, const ArgHighlight& h) {
  std::u32string src = utf8_decode_checked(failing);
  std::u32string out;
  std::size_t i = 0;
  for (const auto& e : h.edits) {
    while (i < e.failing_pos && i < src.size()) out.push_back(src[i++]);
    switch (e.op) {
      case ArgEdit::Op::substitute:
        out += utf8_decode_checked(e.passing_ch);
        ++i;
        break;
      case ArgEdit::Op::erase:
        ++i;
        break;
      case ArgEdit::Op::insert:
        out += utf8_decode_checked(e.passing_ch);
        break;
    }
  }
  while (i < src.size()) out.push_back(src[i++]);
  return utf8_encode(out);
}

} // namespace

TEST_CASE("hex-style report highlights the changed character") {
  SearchConfig config;
  CausalReport report = build_report(hexlike_result(), config);

  REQUIRE(report.nearest_passing.size() == 1);
  const PassingEntry& entry = report.nearest_passing[0];
  REQUIRE(entry.highlights.size() == 1);
  const ArgHighlight& h = entry.highlights[0];
  CHECK(h.arg_index == 0);
  CHECK(h.textual);
  REQUIRE(h.edits.size() == 1);
  CHECK(h.edits[0].op == ArgEdit::Op::substitute);
  CHECK(h.edits[0].failing_pos == 1);
  CHECK(h.edits[0].passing_pos == 1);
  CHECK(h.edits[0].failing_ch == "X");
  CHECK(h.edits[0].passing_ch == "x");

  REQUIRE(entry.trace_diff.has_value());
  CHECK(entry.trace_diff->first_divergence_index == 1);

  std::string text = render(report, ReportFormat::text);
  CHECK(text.find("Failing: [\"0Xfade\"]") != std::string::npos);
  CHECK(text.find("Passing: [\"0[x]fade\"]") != std::string::npos);
}

TEST_CASE("report keeps only the k nearest passing entries") {
  SearchResult result = hexlike_result();
  result.passing.clear();
  for (int i = 0; i < 5; ++i)
    result.passing.push_back(record_of("p" + std::to_string(i),
                                       {InputValue::text("v" + std::to_string(i))},
                                       Outcome::pass(), 0.1 * (i + 1)));
  SearchConfig config;
  config.report_k = 3;
  CausalReport report = build_report(result, config);
  REQUIRE(report.nearest_passing.size() == 3);
  CHECK(report.nearest_passing[0].record.distance_to_original == doctest::Approx(0.1));
  CHECK(report.nearest_passing[2].record.distance_to_original == doctest::Approx(0.3));
}

TEST_CASE("an empty passing list is stated explicitly") {
  SearchResult result = hexlike_result();
  result.passing.clear();
  result.closer_failing.clear();
  result.stop_reason = StopReason::candidates_exhausted;
  CausalReport report = build_report(result, {});
  CHECK(report.nearest_passing.empty());
  std::string text = render(report, ReportFormat::text);
  CHECK(text.find("No passing perturbation found within budget.") != std::string::npos);
  CHECK(text.find("stop: candidates-exhausted") != std::string::npos);
}

TEST_CASE("closer failing entries are labeled with their outcome variant") {
  SearchResult result = hexlike_result();
  result.closer_failing.push_back(record_of("cf-crash", {InputValue::text("0Xfadf")},
                                            Outcome::crash("boom"), 0.15));
  result.closer_failing.push_back(
      record_of("cf-timeout", {InputValue::text("0Xfadg")}, Outcome::timeout(), 0.16));
  std::string text = render(build_report(result, {}), ReportFormat::text);
  CHECK(text.find("[fail]") != std::string::npos);
  CHECK(text.find("[crash]") != std::string::npos);
  CHECK(text.find("[timeout]") != std::string::npos);
}

TEST_CASE("trace diff is absent when either trace is missing") {
  SearchResult result = hexlike_result();
  result.passing[0].trace.reset();
  CausalReport report = build_report(result, {});
  CHECK_FALSE(report.nearest_passing[0].trace_diff.has_value());
}

TEST_CASE("JSON report round-trips structurally") {
  CausalReport report = build_report(hexlike_result(), {});
  Json j = report_to_json(report);
  CHECK(j["schema"] == kReportSchema);
  CausalReport back = report_from_json(j);
  CHECK(report_to_json(back) == j);
}

TEST_CASE("rendering is byte-deterministic") {
  CausalReport report = build_report(hexlike_result(), {});
  for (auto format : {ReportFormat::text, ReportFormat::json}) {
    std::string a = render(report, format);
    std::string b = render(report, format);
    CHECK(a == b);
  }
  RenderOptions verbose;
  verbose.verbose = true;
  CHECK(render(report, ReportFormat::text, verbose) ==
        render(report, ReportFormat::text, verbose));
}

TEST_CASE("verbose rendering expands hunks") {
  CausalReport report = build_report(hexlike_result(), {});
  std::string plain = render(report, ReportFormat::text);
  RenderOptions options;
  options.verbose = true;
  std::string verbose = render(report, ReportFormat::text, options);
  CHECK(verbose.size() > plain.size());
  CHECK(verbose.find("hunk 1") != std::string::npos);
  CHECK(verbose.find("only in failing") != std::string::npos);
}

TEST_CASE("highlight edits applied to the failing argument give the passing one") {
  std::mt19937_64 rng(20260810);
  for (int i = 0; i < 300; ++i) {
    std::string failing_text = gen::random_text(rng, 10);
    std::string passing_text = gen::random_text(rng, 10);
    if (failing_text == passing_text) continue;

    SearchResult result;
    result.original = record_of("orig", {InputValue::text(failing_text)},
                                Outcome::fail("x"), 0.0);
    result.passing.push_back(
        record_of("p", {InputValue::text(passing_text)}, Outcome::pass(), 0.5));
    result.stop_reason = StopReason::target_reached;

    CausalReport report = build_report(result, {});
    REQUIRE(report.nearest_passing.size() == 1);
    REQUIRE(report.nearest_passing[0].highlights.size() == 1);
    const auto& h = report.nearest_passing[0].highlights[0];
    CAPTURE(failing_text);
    CAPTURE(passing_text);
    CHECK(apply_highlight(failing_text, h) == passing_text);
  }
}

TEST_CASE("non-text argument changes fall back to whole-value highlights") {
  SearchResult result;
  result.original = record_of("orig", {InputValue::integer(95), InputValue::integer(105)},
                              Outcome::fail("x"), 0.0);
  result.original.spec.oracle_id = "date-range";
  auto passing = record_of("p", {InputValue::integer(95), InputValue::integer(97)},
                           Outcome::pass(), 0.02);
  passing.spec.oracle_id = "date-range";
  result.passing.push_back(passing);
  result.stop_reason = StopReason::target_reached;

  CausalReport report = build_report(result, {});
  REQUIRE(report.nearest_passing.size() == 1);
  REQUIRE(report.nearest_passing[0].highlights.size() == 1);
  const auto& h = report.nearest_passing[0].highlights[0];
  CHECK(h.arg_index == 1);
  CHECK_FALSE(h.textual);
  CHECK(h.failing_rendered == "105");
  CHECK(h.passing_rendered == "97");
}

TEST_CASE("randomized reports survive a JSON round-trip") {
  std::mt19937_64 rng(97);
  for (int i = 0; i < 50; ++i) {
    SearchResult result;
    result.original = record_of("orig", {gen::random_value(rng)},
                                Outcome::fail("m"), 0.0, gen::random_trace(rng, 10));
    int passes = static_cast<int>(rng() % 4);
    for (int p = 0; p < passes; ++p) {
      auto rec = record_of("p" + std::to_string(p), {gen::random_value(rng)},
                           Outcome::pass(), 0.1 * (p + 1), gen::random_trace(rng, 10));
      result.passing.push_back(std::move(rec));
    }
    int fails = static_cast<int>(rng() % 3);
    for (int f = 0; f < fails; ++f)
      result.closer_failing.push_back(record_of("f" + std::to_string(f),
                                                {gen::random_value(rng)},
                                                Outcome::crash("c"), 0.05));
    result.stop_reason = StopReason::budget_expired;
    result.executed_count = static_cast<std::size_t>(rng() % 100);

    CausalReport report = build_report(result, {});
    Json j = report_to_json(report);
    CHECK(report_to_json(report_from_json(j)) == j);
    CHECK(render(report, ReportFormat::json) == render(report_from_json(j), ReportFormat::json));
  }
}

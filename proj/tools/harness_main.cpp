// causal-harness: bundled subject programs speaking the engine's JSON-lines
// protocol on stdin/stdout. Each mode is one subject with a known defect, so
// end-to-end runs have a known root cause. The protocol-fault modes (badjson,
// wrongid, sleepy) deliberately misbehave for conformance testing.
//
// Usage: causal-harness <mode>

#include <chrono>
#include <cstdint>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

using Json = nlohmann::ordered_json;

namespace {

struct SubjectResult {
  std::string outcome; // "pass" | "fail" | "crash"
  std::string message;
  Json trace = Json::array();
  bool emit_trace = true;
};

Json event(const std::string& method, const std::string& call_site,
           std::vector<std::string> args, const char* ret, std::size_t depth) {
  Json e = Json::object();
  e["method"] = method;
  e["call_site"] = call_site;
  e["args"] = args;
  e["return"] = ret ? Json(std::string(ret)) : Json(nullptr);
  e["depth"] = depth;
  return e;
}

std::string quoted(const std::string& s) { return Json(s).dump(); }

// --- hexparser ---------------------------------------------------------
// Mirrors a number parser that accepts the "0x" prefix but not "0X". The
// oracle expects the parse to succeed and to produce 64222 (0xFADE).

SubjectResult run_hexparser(const Json& args) {
  SubjectResult r;
  if (args.size() != 1 || !args[0].is_string()) {
    r.outcome = "crash";
    r.message = "hex-parse expects one text argument";
    return r;
  }
  const std::string s = args[0].get<std::string>();
  r.trace.push_back(event("NumberUtils.createNumber", "NumberTest.java:184",
                          {quoted(s)}, nullptr, 0));
  r.trace.push_back(event("NumberUtils.createInteger", "NumberUtils.java:458",
                          {quoted(s)}, nullptr, 1));

  bool negative = false;
  std::string body = s;
  if (body.rfind("-", 0) == 0) {
    negative = true;
    body = body.substr(1);
  }
  const bool has_prefix = body.rfind("0x", 0) == 0; // the defect: no "0X" case
  r.trace.push_back(event("NumberUtils.checkHexPrefix", "NumberUtils.java:459",
                          {quoted(s)}, has_prefix ? "true" : "false", 2));
  if (!has_prefix) {
    r.trace.push_back(event("NumberUtils.raiseInvalidPrefix", "NumberUtils.java:545",
                            {quoted(s)}, nullptr, 2));
    r.outcome = "fail";
    r.message = s + " is not a valid number.";
    return r;
  }

  const std::string digits = body.substr(2);
  std::int64_t value = 0;
  bool ok = !digits.empty();
  for (char c : digits) {
    int d;
    if (c >= '0' && c <= '9')
      d = c - '0';
    else if (c >= 'a' && c <= 'f')
      d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F')
      d = c - 'A' + 10;
    else {
      ok = false;
      break;
    }
    if (value > (INT64_MAX - d) / 16) {
      ok = false;
      break;
    }
    value = value * 16 + d;
  }
  if (!ok) {
    r.trace.push_back(event("NumberUtils.parseHexDigits", "NumberUtils.java:460",
                            {quoted(digits)}, "error", 2));
    r.outcome = "fail";
    r.message = s + " is not a valid number.";
    return r;
  }
  if (negative) value = -value;
  r.trace.push_back(event("NumberUtils.parseHexDigits", "NumberUtils.java:460",
                          {quoted(digits)}, std::to_string(value).c_str(), 2));
  if (value == 64222) {
    r.outcome = "pass";
  } else {
    r.outcome = "fail";
    r.message = "expected 64222, got " + std::to_string(value);
  }
  return r;
}

// --- daterange ----------------------------------------------------------
// Routing subject that fails only when the two endpoints straddle the zone
// boundary at 100.

SubjectResult run_daterange(const Json& args) {
  SubjectResult r;
  if (args.size() != 2 || !args[0].is_number_integer() || !args[1].is_number_integer()) {
    r.outcome = "crash";
    r.message = "date-range expects two integer arguments";
    return r;
  }
  const std::int64_t start = args[0].get<std::int64_t>();
  const std::int64_t end = args[1].get<std::int64_t>();
  const auto zone = [](std::int64_t x) { return x < 100 ? "inland" : "coastal"; };
  r.trace.push_back(event("Router.computeRoute", "RouteTest.java:12",
                          {std::to_string(start), std::to_string(end)}, nullptr, 0));
  r.trace.push_back(event("Router.locateZone", "Router.java:77",
                          {std::to_string(start)}, zone(start), 1));
  r.trace.push_back(event("Router.locateZone", "Router.java:78",
                          {std::to_string(end)}, zone(end), 1));
  if (start < 100 && end >= 100) {
    r.trace.push_back(event("Router.crossBorderLookup", "Router.java:81",
                            {std::to_string(start), std::to_string(end)}, nullptr, 1));
    r.trace.push_back(event("Router.failBorder", "Router.java:130", {}, nullptr, 2));
    r.outcome = "fail";
    r.message = "no route across boundary from " + std::to_string(start) + " to " +
                std::to_string(end);
  } else {
    r.trace.push_back(event("Router.joinSegments", "Router.java:85",
                            {std::to_string(start), std::to_string(end)}, "ok", 1));
    r.outcome = "pass";
  }
  return r;
}

// --- offbyone -----------------------------------------------------------
// Accumulator with an off-by-one on exactly one input value.

SubjectResult run_offbyone(const Json& args) {
  SubjectResult r;
  if (args.size() != 1 || !args[0].is_number_integer()) {
    r.outcome = "crash";
    r.message = "off-by-one expects one integer argument";
    return r;
  }
  const std::int64_t n = args[0].get<std::int64_t>();
  const std::int64_t result = n + (n == 17 ? 1 : 0);
  r.trace.push_back(event("Accumulator.compute", "AccumulatorTest.java:9",
                          {std::to_string(n)}, nullptr, 0));
  r.trace.push_back(event("Accumulator.normalize", "Accumulator.java:41",
                          {std::to_string(n)}, std::to_string(result).c_str(), 1));
  if (result == n) {
    r.outcome = "pass";
  } else {
    r.outcome = "fail";
    r.message = "accumulator drifted: expected " + std::to_string(n) + ", got " +
                std::to_string(result);
  }
  return r;
}

SubjectResult run_rejectall(const Json&) {
  SubjectResult r;
  r.outcome = "fail";
  r.message = "rejected";
  r.emit_trace = false; // this subject declines to trace
  return r;
}

// Per-process state: the canonical failing input ["f"] always fails; every
// other input passes its first run and fails repeats.
std::set<std::string> g_flaky_seen;

SubjectResult run_flaky(const Json& args) {
  SubjectResult r;
  const std::string key = args.dump();
  if (key == R"(["f"])") {
    r.outcome = "fail";
    r.message = "deterministic failure";
  } else if (g_flaky_seen.insert(key).second) {
    r.outcome = "pass";
  } else {
    r.outcome = "fail";
    r.message = "flaky: repeat run failed";
  }
  r.trace.push_back(event("Flaky.run", "Flaky.java:1", {key}, nullptr, 0));
  return r;
}

int protocol_loop(const std::string& mode) {
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    Json req = Json::parse(line, nullptr, false);
    if (req.is_discarded() || !req.is_object()) {
      std::cerr << "harness: ignoring malformed request line\n";
      continue;
    }
    if (req.value("op", "") == "shutdown") return 0;
    if (req.value("op", "") != "run") continue;

    if (mode == "sleepy") {
      while (true) std::this_thread::sleep_for(std::chrono::seconds(3600));
    }
    if (mode == "badjson") {
      std::cout << "{this is not json\n" << std::flush;
      continue;
    }

    const std::uint64_t id = req.value("id", std::uint64_t{0});
    const std::string oracle = req.value("oracle", "");
    const Json args = req.value("args", Json::array());

    SubjectResult result;
    if (mode == "hexparser" && oracle == "hex-parse")
      result = run_hexparser(args);
    else if (mode == "daterange" && oracle == "date-range")
      result = run_daterange(args);
    else if (mode == "offbyone" && oracle == "off-by-one")
      result = run_offbyone(args);
    else if (mode == "rejectall" && oracle == "always-reject")
      result = run_rejectall(args);
    else if (mode == "flaky" && oracle == "flaky")
      result = run_flaky(args);
    else if (mode == "wrongid" && oracle == "hex-parse")
      result = run_hexparser(args);
    else {
      result.outcome = "crash";
      result.message = "unknown oracle \"" + oracle + "\" for subject " + mode;
      result.emit_trace = false;
    }

    Json resp = Json::object();
    resp["id"] = mode == "wrongid" ? id + 1 : id;
    resp["outcome"] = result.outcome;
    if (!result.message.empty()) resp["message"] = result.message;
    if (result.emit_trace) resp["trace"] = result.trace;
    std::cout << resp.dump() << "\n" << std::flush;
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: causal-harness "
                 "<hexparser|daterange|offbyone|rejectall|flaky|badjson|wrongid|sleepy>\n";
    return 2;
  }
  const std::string mode = argv[1];
  const std::set<std::string> known{"hexparser", "daterange", "offbyone", "rejectall",
                                    "flaky",     "badjson",  "wrongid",  "sleepy"};
  if (!known.count(mode)) {
    std::cerr << "causal-harness: unknown subject \"" << mode << "\"\n";
    return 2;
  }
  return protocol_loop(mode);
}

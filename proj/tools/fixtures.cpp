#include "fixtures.hpp"

#include <unistd.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "causal/errors.hpp"

namespace causal::tools {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

const std::vector<Fixture>& bundled_fixtures() {
  static const std::vector<Fixture> fixtures = {
      {"hexparser",
       "hex number parser accepting \"0x\" but rejecting \"0X\" prefixes",
       "hex-parse", "hex-parse-9b", R"(["0Xfade"])"},
      {"daterange",
       "route planner failing only when the endpoints straddle the zone boundary",
       "date-range", "date-range-straddle", R"([95, 105])"},
      {"offbyone", "accumulator with an off-by-one on a single integer input",
       "off-by-one", "off-by-one-17", R"([17])"},
      {"rejectall", "subject whose oracle rejects every input (no passing neighbor)",
       "always-reject", "reject-everything", R"(["x"])"},
      {"flaky", "subject that passes the first run of any input and fails repeats",
       "flaky", "flaky-demo", R"(["f"])"},
      {"badjson", "protocol fault: responds with invalid JSON", "hex-parse",
       "badjson-demo", R"(["0Xfade"])", true},
      {"wrongid", "protocol fault: responds with a mismatched request id", "hex-parse",
       "wrongid-demo", R"(["0Xfade"])", true},
      {"sleepy", "protocol fault: never responds (timeout testing)", "hex-parse",
       "sleepy-demo", R"(["0Xfade"])", true},
  };
  return fixtures;
}

const Fixture* find_fixture(const std::string& name) {
  for (const auto& f : bundled_fixtures())
    if (f.name == name) return &f;
  return nullptr;
}

fs::path materialize_fixture(const Fixture& fixture, const fs::path& dir,
                             const fs::path& harness_binary) {
  fs::create_directories(dir);
  Json manifest = Json::object();
  Json harness = Json::object();
  harness["cmd"] = Json::array({harness_binary.string(), fixture.name});
  manifest["harness"] = std::move(harness);
  Json test = Json::object();
  test["test_id"] = fixture.test_id;
  test["args"] = Json::parse(fixture.args_json);
  test["oracle_id"] = fixture.oracle;
  manifest["test"] = std::move(test);

  fs::path path = dir / (fixture.name + ".manifest.json");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw config_error("cannot write " + path.string());
  out << manifest.dump(2) << "\n";
  return path;
}

fs::path default_harness_binary() {
  char buf[4096];
  ssize_t n = ::readlink("/proc/self/exe", buf, sizeof buf - 1);
  if (n > 0) {
    buf[n] = '\0';
    fs::path candidate = fs::path(buf).parent_path() / "causal-harness";
    if (fs::exists(candidate)) return candidate;
  }
  return "causal-harness"; // PATH lookup
}

} // namespace causal::tools

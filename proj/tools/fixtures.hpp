#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace causal::tools {

/// A bundled example subject: the harness mode plus the original failing
/// test that reproduces its defect.
struct Fixture {
  std::string name;
  std::string summary;
  std::string oracle;
  std::string test_id;
  std::string args_json;   // canonical InputValue array
  bool protocol_fault = false;
};

const std::vector<Fixture>& bundled_fixtures();

const Fixture* find_fixture(const std::string& name);

/// Writes <name>.manifest.json into `dir`, pointing at `harness_binary`.
/// Returns the manifest path.
std::filesystem::path materialize_fixture(const Fixture& fixture,
                                          const std::filesystem::path& dir,
                                          const std::filesystem::path& harness_binary);

/// Locates the causal-harness binary installed next to this executable,
/// falling back to a bare name for PATH lookup.
std::filesystem::path default_harness_binary();

} // namespace causal::tools

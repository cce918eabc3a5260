#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace causal {

/// Engine-level failure that is not an execution outcome. `category` is a
/// stable machine-readable slug; the CLI maps categories to exit codes.
class EngineError : public std::runtime_error {
public:
  EngineError(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

private:
  std::string category_;
};

inline EngineError invalid_spec(const std::string& msg) { return {"invalid-spec", msg}; }
inline EngineError config_error(const std::string& msg) { return {"config", msg}; }
inline EngineError incomparable(const std::string& msg) { return {"incomparable", msg}; }

} // namespace causal

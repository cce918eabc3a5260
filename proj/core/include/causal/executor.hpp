#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "causal/similarity.hpp"
#include "causal/value.hpp"

namespace causal {

struct SubprocessSpec {
  std::vector<std::string> argv;
  std::map<std::string, std::string> env; // additions to the inherited env
};

struct RunRequest {
  std::uint64_t id = 0;
  std::string oracle;
  std::vector<InputValue> args;
};

/// What a harness (or in-process callback) answers for one run request.
/// Outcome is "pass" | "fail" | "crash"; in-process callbacks may also answer
/// "timeout" (subprocess timeouts are enforced by the transport instead).
struct HarnessReply {
  std::string outcome;
  std::string message;
  std::optional<std::vector<Json>> trace_events;
  std::optional<std::int64_t> wall_ms; // replay hint; measured when absent
};

using InProcessCallback = std::function<HarnessReply(const RunRequest&)>;

struct InProcessSpec {
  InProcessCallback callback;
};

class Transcript;

/// Description of how to reach a subject harness. Connections opened from
/// the same handle are independent; when `record_to` is set every exchange
/// is appended to the transcript.
struct HarnessHandle {
  std::variant<SubprocessSpec, InProcessSpec> transport;
  int protocol_version = 1;
  std::shared_ptr<Transcript> record_to;

  static HarnessHandle subprocess(std::vector<std::string> argv,
                                  std::map<std::string, std::string> env = {});
  static HarnessHandle in_process(InProcessCallback cb);
};

struct TranscriptEntry {
  std::string outcome; // "pass" | "fail" | "crash" | "timeout"
  std::string message;
  std::optional<std::vector<Json>> trace_events;
  std::int64_t wall_ms = 0;
};

/// Recorded request/response exchanges keyed by (oracle, canonical args).
/// Substituting a transcript for the live harness replays a search
/// deterministically, wall times included.
class Transcript {
public:
  Transcript() = default;
  Transcript(Transcript&& other) noexcept {
    std::lock_guard lock(other.mu_);
    entries_ = std::move(other.entries_);
  }

  static std::string key_for(const std::string& oracle,
                             const std::vector<InputValue>& args);

  void add(const std::string& key, TranscriptEntry entry);
  std::optional<TranscriptEntry> find(const std::string& key) const;
  std::size_t size() const;

  std::string to_json_lines() const;
  static Transcript from_json_lines(std::string_view text);

private:
  explicit Transcript(std::map<std::string, TranscriptEntry> entries)
      : entries_(std::move(entries)) {}

  mutable std::mutex mu_;
  std::map<std::string, TranscriptEntry> entries_;
};

/// In-process handle answering every request from a recorded transcript.
HarnessHandle replay_handle(std::shared_ptr<const Transcript> transcript);

/// One live harness instance. Subprocess connections own the child process
/// and respawn it after a timeout or protocol desync.
class HarnessConnection {
public:
  enum class Status { ok, timeout, transport_error, protocol_error };

  struct Result {
    Status status = Status::ok;
    HarnessReply reply;     // when ok
    std::string diagnostic; // otherwise (includes captured stderr)
    std::int64_t wall_ms = 0;
  };

  virtual ~HarnessConnection() = default;
  virtual Result request(const std::string& oracle,
                         const std::vector<InputValue>& args,
                         std::int64_t timeout_ms) = 0;
  /// Sends the shutdown op and closes the transport. Returns true when the
  /// harness exited cleanly within the grace period.
  virtual bool shutdown() = 0;
};

/// Opens a connection. Throws EngineError("harness-dead") when the transport
/// cannot be established at all.
std::unique_ptr<HarnessConnection> connect(const HarnessHandle& handle);

/// Runs one test. Every failure mode becomes an Outcome variant so the
/// search can continue; distance_to_original is left 0 for the caller.
ExecutionRecord execute(const TestSpec& spec, HarnessConnection& conn,
                        std::int64_t timeout_ms);

enum class StopReason { target_reached, candidates_exhausted, budget_expired };

const char* stop_reason_name(StopReason r);
StopReason stop_reason_from_name(std::string_view name);

struct SearchResult {
  ExecutionRecord original; // always non-Pass
  std::vector<ExecutionRecord> passing;        // nearest-first, all Pass
  std::vector<ExecutionRecord> closer_failing; // strictly closer than the
                                               // farthest reported pass
  std::size_t executed_count = 0;              // candidates executed
  std::int64_t candidate_wall_ms = 0;          // summed over executed records
  StopReason stop_reason = StopReason::candidates_exhausted;
};

struct SearchHooks {
  /// Called after each candidate execution with the running count.
  std::function<void(const ExecutionRecord&, std::size_t)> on_executed;
  /// When set and flipped true, the search stops with BudgetExpired.
  const std::atomic<bool>* cancel = nullptr;
};

/// Re-executes the original (must not pass), then runs candidates in rank
/// order until target_passing passes are found, the buffer is exhausted, or
/// the budget expires. Throws EngineError("original-passed") or
/// EngineError("harness-dead").
SearchResult run_search(const TestSpec& original,
                        const std::vector<RankedCandidate>& ranked,
                        const HarnessHandle& harness, const SearchConfig& config,
                        const SearchHooks& hooks = {});

} // namespace causal

#include "causal/executor.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <sstream>
#include <thread>

#include "causal/errors.hpp"
#include "causal/trace.hpp"

extern char** environ;

namespace causal {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t ms_since(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start)
      .count();
}

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string request_line(std::uint64_t id, const std::string& oracle,
                         const std::vector<InputValue>& args) {
  Json j = Json::object();
  j["id"] = id;
  j["op"] = "run";
  j["oracle"] = oracle;
  Json arr = Json::array();
  for (const auto& a : args) arr.push_back(a.to_json());
  j["args"] = std::move(arr);
  return j.dump() + "\n";
}

constexpr std::size_t kMaxResponseBytes = 64u * 1024 * 1024;
constexpr std::size_t kStderrKeep = 8192;

} // namespace

HarnessHandle HarnessHandle::subprocess(std::vector<std::string> argv,
                                        std::map<std::string, std::string> env) {
  HarnessHandle h;
  h.transport = SubprocessSpec{std::move(argv), std::move(env)};
  return h;
}

HarnessHandle HarnessHandle::in_process(InProcessCallback cb) {
  HarnessHandle h;
  h.transport = InProcessSpec{std::move(cb)};
  return h;
}

// ---------------------------------------------------------------------------
// Transcript

std::string Transcript::key_for(const std::string& oracle,
                                const std::vector<InputValue>& args) {
  Json j = Json::object();
  j["oracle"] = oracle;
  Json arr = Json::array();
  for (const auto& a : args) arr.push_back(a.to_json());
  j["args"] = std::move(arr);
  return j.dump();
}

void Transcript::add(const std::string& key, TranscriptEntry entry) {
  std::lock_guard lock(mu_);
  entries_.insert_or_assign(key, std::move(entry));
}

std::optional<TranscriptEntry> Transcript::find(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::size_t Transcript::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::string Transcript::to_json_lines() const {
  std::lock_guard lock(mu_);
  std::string out;
  for (const auto& [key, entry] : entries_) {
    Json j = Json::object();
    j["key"] = Json::parse(key);
    j["outcome"] = entry.outcome;
    j["message"] = entry.message;
    j["trace"] = entry.trace_events ? Json(*entry.trace_events) : Json(nullptr);
    j["wall_ms"] = entry.wall_ms;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Transcript Transcript::from_json_lines(std::string_view text) {
  std::map<std::string, TranscriptEntry> entries;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (line.empty()) continue;
    Json j = Json::parse(line);
    TranscriptEntry e;
    e.outcome = j.at("outcome").get<std::string>();
    e.message = j.value("message", std::string{});
    if (j.contains("trace") && !j["trace"].is_null())
      e.trace_events = std::vector<Json>(j["trace"].begin(), j["trace"].end());
    e.wall_ms = j.value("wall_ms", std::int64_t{0});
    entries.emplace(j.at("key").dump(), std::move(e));
  }
  return Transcript(std::move(entries));
}

HarnessHandle replay_handle(std::shared_ptr<const Transcript> transcript) {
  return HarnessHandle::in_process([transcript](const RunRequest& req) -> HarnessReply {
    auto entry = transcript->find(Transcript::key_for(req.oracle, req.args));
    if (!entry)
      return {"crash", "no transcript entry for request", std::nullopt, 0};
    return {entry->outcome, entry->message, entry->trace_events, entry->wall_ms};
  });
}

// ---------------------------------------------------------------------------
// Connections

namespace {

class InProcessConnection : public HarnessConnection {
public:
  explicit InProcessConnection(InProcessCallback cb) : callback_(std::move(cb)) {}

  Result request(const std::string& oracle, const std::vector<InputValue>& args,
                 std::int64_t) override {
    RunRequest req{next_id_++, oracle, args};
    auto start = Clock::now();
    HarnessReply reply;
    try {
      reply = callback_(req);
    } catch (const std::exception& e) {
      return {Status::transport_error, {}, std::string("callback threw: ") + e.what(),
              ms_since(start)};
    }
    std::int64_t wall = reply.wall_ms ? *reply.wall_ms : ms_since(start);
    return {Status::ok, std::move(reply), {}, wall};
  }

  bool shutdown() override { return true; }

private:
  InProcessCallback callback_;
  std::uint64_t next_id_ = 1;
};

class SubprocessConnection : public HarnessConnection {
public:
  explicit SubprocessConnection(SubprocessSpec spec) : spec_(std::move(spec)) {
    ignore_sigpipe_once();
    if (spec_.argv.empty()) throw EngineError("harness-dead", "empty harness command");
    spawn(); // throws harness-dead on first failure
  }

  ~SubprocessConnection() override { kill_child(); }

  Result request(const std::string& oracle, const std::vector<InputValue>& args,
                 std::int64_t timeout_ms) override {
    auto start = Clock::now();
    if (pid_ < 0) {
      // Respawn after a previous timeout/desync; failure here is a Crash for
      // this execution, not a fatal error.
      try {
        spawn();
      } catch (const EngineError& e) {
        return {Status::transport_error, {}, e.what(), ms_since(start)};
      }
    }

    std::uint64_t id = next_id_++;
    std::string line = request_line(id, oracle, args);
    if (!write_all(line)) {
      std::string diag = "harness closed stdin pipe" + stderr_excerpt();
      kill_child();
      return {Status::transport_error, {}, diag, ms_since(start)};
    }

    std::string response;
    ReadStatus rs = read_line(response, timeout_ms);
    std::int64_t wall = ms_since(start);
    if (rs == ReadStatus::timeout) {
      kill_child(); // stuck harness; a fresh one is spawned on the next request
      return {Status::timeout, {}, "no response within deadline", wall};
    }
    if (rs == ReadStatus::eof) {
      std::string diag = "harness exited without responding" + stderr_excerpt();
      kill_child();
      return {Status::transport_error, {}, diag, wall};
    }

    Json j = Json::parse(response, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      std::string diag = "invalid JSON in response: " + clip(response) + stderr_excerpt();
      kill_child(); // stream may be desynced
      return {Status::protocol_error, {}, diag, wall};
    }
    if (!j.contains("id") || !j["id"].is_number_unsigned() ||
        j["id"].get<std::uint64_t>() != id) {
      std::string diag = "response id mismatch (expected " + std::to_string(id) +
                         "): " + clip(response) + stderr_excerpt();
      kill_child();
      return {Status::protocol_error, {}, diag, wall};
    }
    if (!j.contains("outcome") || !j["outcome"].is_string()) {
      kill_child();
      return {Status::protocol_error, {},
              "response missing \"outcome\": " + clip(response) + stderr_excerpt(), wall};
    }

    HarnessReply reply;
    reply.outcome = j["outcome"].get<std::string>();
    reply.message = j.value("message", std::string{});
    if (j.contains("trace") && j["trace"].is_array())
      reply.trace_events = std::vector<Json>(j["trace"].begin(), j["trace"].end());
    return {Status::ok, std::move(reply), {}, wall};
  }

  bool shutdown() override {
    if (pid_ < 0) return true;
    write_all("{\"op\": \"shutdown\"}\n");
    if (stdin_fd_ >= 0) {
      ::close(stdin_fd_);
      stdin_fd_ = -1;
    }
    // Grace period, then force.
    for (int i = 0; i < 100; ++i) {
      int status = 0;
      pid_t r = ::waitpid(pid_, &status, WNOHANG);
      if (r == pid_) {
        pid_ = -1;
        close_fds();
        return WIFEXITED(status) && WEXITSTATUS(status) == 0;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    kill_child();
    return false;
  }

private:
  enum class ReadStatus { ok, timeout, eof };

  void spawn() {
    int in_pipe[2], out_pipe[2], err_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0)
      throw EngineError("harness-dead", std::string("pipe: ") + std::strerror(errno));

    std::vector<std::string> env_strings;
    for (char** e = environ; *e; ++e) {
      std::string_view entry(*e);
      auto eq = entry.find('=');
      if (eq != std::string_view::npos &&
          spec_.env.count(std::string(entry.substr(0, eq))))
        continue; // overridden below
      env_strings.emplace_back(entry);
    }
    for (const auto& [k, v] : spec_.env) env_strings.push_back(k + "=" + v);

    std::vector<char*> argv, envp;
    for (const auto& a : spec_.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    for (const auto& e : env_strings) envp.push_back(const_cast<char*>(e.c_str()));
    envp.push_back(nullptr);

    pid_t pid = ::fork();
    if (pid < 0)
      throw EngineError("harness-dead", std::string("fork: ") + std::strerror(errno));
    if (pid == 0) {
      ::dup2(in_pipe[0], STDIN_FILENO);
      ::dup2(out_pipe[1], STDOUT_FILENO);
      ::dup2(err_pipe[1], STDERR_FILENO);
      for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0],
                     err_pipe[1]})
        ::close(fd);
      ::execve(argv[0], argv.data(), envp.data());
      // execve only returns on failure; try PATH lookup before giving up.
      ::execvpe(argv[0], argv.data(), envp.data());
      ::fprintf(stderr, "exec %s: %s\n", argv[0], std::strerror(errno));
      ::_exit(127);
    }

    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    stdin_fd_ = in_pipe[1];
    stdout_fd_ = out_pipe[0];
    stderr_fd_ = err_pipe[0];
    ::fcntl(stdout_fd_, F_SETFL, O_NONBLOCK);
    ::fcntl(stderr_fd_, F_SETFL, O_NONBLOCK);
    pid_ = pid;
    buffer_.clear();

    // A child that dies instantly (bad command) should surface as
    // harness-dead on the first connect rather than a confusing pipe error.
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    int status = 0;
    if (::waitpid(pid_, &status, WNOHANG) == pid_) {
      pid_ = -1;
      drain_stderr();
      close_fds();
      throw EngineError("harness-dead",
                        "harness exited immediately" + stderr_excerpt());
    }
  }

  bool write_all(std::string_view data) {
    if (stdin_fd_ < 0) return false;
    std::size_t off = 0;
    while (off < data.size()) {
      ssize_t n = ::write(stdin_fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      off += static_cast<std::size_t>(n);
    }
    return true;
  }

  ReadStatus read_line(std::string& out, std::int64_t timeout_ms) {
    auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
    while (true) {
      auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        out = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return ReadStatus::ok;
      }
      if (buffer_.size() > kMaxResponseBytes) return ReadStatus::eof;

      auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
                           deadline - Clock::now())
                           .count();
      if (remaining <= 0) return ReadStatus::timeout;

      struct pollfd fds[2];
      fds[0] = {stdout_fd_, POLLIN, 0};
      fds[1] = {stderr_fd_, POLLIN, 0};
      int rc = ::poll(fds, 2, static_cast<int>(std::min<std::int64_t>(remaining, 1000)));
      if (rc < 0) {
        if (errno == EINTR) continue;
        return ReadStatus::eof;
      }
      if (fds[1].revents & (POLLIN | POLLHUP)) drain_stderr();
      if (fds[0].revents & POLLIN) {
        char chunk[65536];
        ssize_t n = ::read(stdout_fd_, chunk, sizeof chunk);
        if (n > 0)
          buffer_.append(chunk, static_cast<std::size_t>(n));
        else if (n == 0)
          return ReadStatus::eof;
      } else if (fds[0].revents & POLLHUP) {
        char chunk[65536];
        ssize_t n = ::read(stdout_fd_, chunk, sizeof chunk);
        if (n > 0)
          buffer_.append(chunk, static_cast<std::size_t>(n));
        else
          return ReadStatus::eof;
      }
    }
  }

  void drain_stderr() {
    if (stderr_fd_ < 0) return;
    char chunk[4096];
    while (true) {
      ssize_t n = ::read(stderr_fd_, chunk, sizeof chunk);
      if (n <= 0) break;
      stderr_tail_.append(chunk, static_cast<std::size_t>(n));
      if (stderr_tail_.size() > kStderrKeep)
        stderr_tail_.erase(0, stderr_tail_.size() - kStderrKeep);
    }
  }

  std::string stderr_excerpt() {
    drain_stderr();
    if (stderr_tail_.empty()) return {};
    return "; stderr: " + clip(stderr_tail_);
  }

  static std::string clip(const std::string& s) {
    constexpr std::size_t kMax = 400;
    if (s.size() <= kMax) return s;
    return s.substr(0, kMax) + "...";
  }

  void kill_child() {
    if (pid_ >= 0) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
    close_fds();
  }

  void close_fds() {
    for (int* fd : {&stdin_fd_, &stdout_fd_, &stderr_fd_}) {
      if (*fd >= 0) {
        ::close(*fd);
        *fd = -1;
      }
    }
    buffer_.clear();
  }

  SubprocessSpec spec_;
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  int stderr_fd_ = -1;
  std::string buffer_;
  std::string stderr_tail_;
  std::uint64_t next_id_ = 1;
};

class RecordingConnection : public HarnessConnection {
public:
  RecordingConnection(std::unique_ptr<HarnessConnection> inner,
                      std::shared_ptr<Transcript> sink)
      : inner_(std::move(inner)), sink_(std::move(sink)) {}

  Result request(const std::string& oracle, const std::vector<InputValue>& args,
                 std::int64_t timeout_ms) override {
    Result r = inner_->request(oracle, args, timeout_ms);
    TranscriptEntry entry;
    entry.wall_ms = r.wall_ms;
    switch (r.status) {
      case Status::ok:
        entry.outcome = r.reply.outcome;
        entry.message = r.reply.message;
        entry.trace_events = r.reply.trace_events;
        break;
      case Status::timeout:
        entry.outcome = "timeout";
        break;
      default:
        entry.outcome = "crash";
        entry.message = r.diagnostic;
        break;
    }
    sink_->add(Transcript::key_for(oracle, args), std::move(entry));
    return r;
  }

  bool shutdown() override { return inner_->shutdown(); }

private:
  std::unique_ptr<HarnessConnection> inner_;
  std::shared_ptr<Transcript> sink_;
};

} // namespace

std::unique_ptr<HarnessConnection> connect(const HarnessHandle& handle) {
  std::unique_ptr<HarnessConnection> conn;
  if (const auto* sub = std::get_if<SubprocessSpec>(&handle.transport)) {
    conn = std::make_unique<SubprocessConnection>(*sub);
  } else {
    const auto& in = std::get<InProcessSpec>(handle.transport);
    if (!in.callback)
      throw EngineError("harness-dead", "in-process harness has no callback");
    conn = std::make_unique<InProcessConnection>(in.callback);
  }
  if (handle.record_to)
    conn = std::make_unique<RecordingConnection>(std::move(conn), handle.record_to);
  return conn;
}

ExecutionRecord execute(const TestSpec& spec, HarnessConnection& conn,
                        std::int64_t timeout_ms) {
  auto result = conn.request(spec.oracle_id, spec.args, timeout_ms);

  ExecutionRecord rec;
  rec.spec = spec;
  rec.wall_ms = result.wall_ms;
  switch (result.status) {
    case HarnessConnection::Status::timeout:
      rec.outcome = Outcome::timeout();
      return rec;
    case HarnessConnection::Status::transport_error:
    case HarnessConnection::Status::protocol_error:
      rec.outcome = Outcome::crash(result.diagnostic);
      return rec;
    case HarnessConnection::Status::ok:
      break;
  }

  const auto& reply = result.reply;
  if (reply.outcome == "pass")
    rec.outcome = Outcome::pass();
  else if (reply.outcome == "fail")
    rec.outcome = Outcome::fail(reply.message);
  else if (reply.outcome == "crash")
    rec.outcome = Outcome::crash(reply.message);
  else if (reply.outcome == "timeout")
    rec.outcome = Outcome::timeout();
  else
    rec.outcome = Outcome::crash("malformed outcome \"" + reply.outcome + "\"");

  if (reply.trace_events) rec.trace = parse_trace_events(*reply.trace_events).trace;
  return rec;
}

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::target_reached: return "target-reached";
    case StopReason::candidates_exhausted: return "candidates-exhausted";
    case StopReason::budget_expired: return "budget-expired";
  }
  return "unknown";
}

StopReason stop_reason_from_name(std::string_view name) {
  if (name == "target-reached") return StopReason::target_reached;
  if (name == "budget-expired") return StopReason::budget_expired;
  if (name == "candidates-exhausted") return StopReason::candidates_exhausted;
  throw EngineError("decode", "unknown stop reason: " + std::string(name));
}

namespace {

struct IndexedRecord {
  ExecutionRecord record;
  std::uint64_t generation_index;
};

/// Runs one candidate, honoring the repeat/demotion rule.
ExecutionRecord run_candidate(const RankedCandidate& rc, HarnessConnection& conn,
                              const SearchConfig& config) {
  ExecutionRecord rec = execute(rc.candidate.spec, conn, config.per_execution_timeout_ms);
  rec.distance_to_original = rc.distance.value;
  if (rec.outcome.is_pass() && config.repeat > 1) {
    for (int r = 1; r < config.repeat; ++r) {
      ExecutionRecord again =
          execute(rc.candidate.spec, conn, config.per_execution_timeout_ms);
      rec.wall_ms += again.wall_ms;
      if (!again.outcome.is_pass()) {
        rec.outcome = std::move(again.outcome); // flaky: demoted
        rec.trace = std::move(again.trace);
        break;
      }
    }
  }
  return rec;
}

SearchResult assemble(ExecutionRecord original, std::vector<IndexedRecord> records,
                      std::size_t executed, StopReason reason,
                      const SearchConfig& config) {
  std::int64_t candidate_wall = 0;
  for (const auto& r : records) candidate_wall += r.record.wall_ms;
  auto by_rank = [](const IndexedRecord& a, const IndexedRecord& b) {
    if (a.record.distance_to_original != b.record.distance_to_original)
      return a.record.distance_to_original < b.record.distance_to_original;
    return a.generation_index < b.generation_index;
  };

  std::vector<IndexedRecord> passing, failing;
  for (auto& r : records) {
    if (r.record.outcome.is_pass())
      passing.push_back(std::move(r));
    else
      failing.push_back(std::move(r));
  }
  std::sort(passing.begin(), passing.end(), by_rank);
  std::sort(failing.begin(), failing.end(), by_rank);

  // In-flight parallel work can overshoot the target; keep only the nearest.
  if (passing.size() > static_cast<std::size_t>(config.target_passing))
    passing.resize(static_cast<std::size_t>(config.target_passing));

  SearchResult result;
  result.original = std::move(original);
  result.executed_count = executed;
  result.candidate_wall_ms = candidate_wall;
  result.stop_reason = reason;
  for (auto& p : passing) result.passing.push_back(std::move(p.record));
  if (!result.passing.empty()) {
    double max_passing = result.passing.back().distance_to_original;
    for (auto& f : failing) {
      if (f.record.distance_to_original < max_passing)
        result.closer_failing.push_back(std::move(f.record));
    }
  }
  return result;
}

} // namespace

SearchResult run_search(const TestSpec& original,
                        const std::vector<RankedCandidate>& ranked,
                        const HarnessHandle& harness, const SearchConfig& config,
                        const SearchHooks& hooks) {
  auto conn = connect(harness); // throws harness-dead

  ExecutionRecord original_record = execute(original, *conn, config.per_execution_timeout_ms);
  original_record.distance_to_original = 0.0;
  if (original_record.outcome.is_pass()) {
    conn->shutdown();
    throw EngineError("original-passed", "original test passed; nothing to explain");
  }

  const auto cancelled = [&] { return hooks.cancel && hooks.cancel->load(); };

  std::vector<IndexedRecord> records;
  std::size_t executed = 0;
  StopReason reason = StopReason::candidates_exhausted;
  auto budget_start = Clock::now();

  if (config.parallelism <= 1) {
    int passes = 0;
    for (const auto& rc : ranked) {
      if (cancelled() || ms_since(budget_start) > config.total_budget_ms) {
        reason = StopReason::budget_expired;
        break;
      }
      ExecutionRecord rec = run_candidate(rc, *conn, config);
      ++executed;
      if (hooks.on_executed) hooks.on_executed(rec, executed);
      bool passed = rec.outcome.is_pass();
      records.push_back({std::move(rec), rc.candidate.provenance.generation_index});
      if (passed && ++passes >= config.target_passing) {
        reason = StopReason::target_reached;
        break;
      }
    }
  } else {
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::atomic<int> passes{0};
    std::atomic<bool> stop{false};
    std::atomic<bool> budget_hit{false};

    auto worker = [&](HarnessConnection* worker_conn) {
      while (!stop.load()) {
        if (cancelled() || ms_since(budget_start) > config.total_budget_ms) {
          budget_hit.store(true);
          stop.store(true);
          break;
        }
        std::size_t i = next.fetch_add(1);
        if (i >= ranked.size()) break;
        ExecutionRecord rec = run_candidate(ranked[i], *worker_conn, config);
        bool passed = rec.outcome.is_pass();
        {
          std::lock_guard lock(mu);
          ++executed;
          if (hooks.on_executed) hooks.on_executed(rec, executed);
          records.push_back(
              {std::move(rec), ranked[i].candidate.provenance.generation_index});
        }
        if (passed && passes.fetch_add(1) + 1 >= config.target_passing)
          stop.store(true);
      }
    };

    std::vector<std::unique_ptr<HarnessConnection>> extra;
    std::vector<std::thread> threads;
    threads.emplace_back(worker, conn.get());
    for (int w = 1; w < config.parallelism; ++w) {
      try {
        extra.push_back(connect(harness));
        threads.emplace_back(worker, extra.back().get());
      } catch (const EngineError&) {
        break; // degrade to fewer workers
      }
    }
    for (auto& t : threads) t.join();
    for (auto& c : extra) c->shutdown();

    if (passes.load() >= config.target_passing)
      reason = StopReason::target_reached;
    else if (budget_hit.load() || cancelled())
      reason = StopReason::budget_expired;
    else
      reason = StopReason::candidates_exhausted;
  }

  conn->shutdown();
  return assemble(std::move(original_record), std::move(records), executed, reason,
                  config);
}

} // namespace causal

#include "causal/trace.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "causal/errors.hpp"

namespace causal {

Json CallEvent::to_json() const {
  Json j = Json::object();
  j["method"] = method;
  j["call_site"] = call_site;
  j["args"] = args_rendered;
  j["return"] = return_rendered ? Json(*return_rendered) : Json(nullptr);
  j["depth"] = depth;
  return j;
}

CallEvent CallEvent::from_json(const Json& j) {
  CallEvent e;
  e.method = j.value("method", std::string{});
  e.call_site = j.value("call_site", std::string{});
  if (j.contains("args") && j["args"].is_array())
    for (const auto& a : j["args"]) e.args_rendered.push_back(a.get<std::string>());
  if (j.contains("return") && !j["return"].is_null())
    e.return_rendered = j["return"].get<std::string>();
  if (j.contains("depth") && j["depth"].is_number())
    e.depth = j["depth"].is_number_unsigned() || j["depth"].get<std::int64_t>() >= 0
                  ? j["depth"].get<std::size_t>()
                  : 0;
  return e;
}

Json Trace::to_json() const {
  Json j = Json::object();
  Json arr = Json::array();
  for (const auto& e : events) arr.push_back(e.to_json());
  j["events"] = std::move(arr);
  j["truncated_front"] = truncated_front;
  return j;
}

Trace Trace::from_json(const Json& j) {
  Trace t;
  if (j.is_array()) { // bare event list
    for (const auto& e : j) t.events.push_back(CallEvent::from_json(e));
    return t;
  }
  for (const auto& e : j.value("events", Json::array()))
    t.events.push_back(CallEvent::from_json(e));
  t.truncated_front = j.value("truncated_front", false);
  return t;
}

ParsedTrace parse_trace_events(const std::vector<Json>& raw) {
  ParsedTrace out;
  auto& events = out.trace.events;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const Json& obj = raw[i];
    if (!obj.is_object() || !obj.contains("method") || !obj["method"].is_string() ||
        obj["method"].get<std::string>().empty()) {
      out.warnings.push_back("event " + std::to_string(i) +
                             " dropped: missing \"method\"");
      continue;
    }
    CallEvent e = CallEvent::from_json(obj);
    if (obj.contains("depth") && obj["depth"].is_number_integer() &&
        !obj["depth"].is_number_unsigned() && obj["depth"].get<std::int64_t>() < 0) {
      out.warnings.push_back("event " + std::to_string(i) +
                             ": negative depth clamped to 0");
      e.depth = 0;
    }
    // Call discipline: depth may grow by at most one per event.
    if (!events.empty() && e.depth > events.back().depth + 1) {
      out.warnings.push_back("event " + std::to_string(i) + ": depth jump " +
                             std::to_string(e.depth) + " clamped to " +
                             std::to_string(events.back().depth + 1));
      e.depth = events.back().depth + 1;
    }
    events.push_back(std::move(e));
  }
  if (events.size() > kTraceEventCap) {
    std::size_t drop = events.size() - kTraceEventCap;
    events.erase(events.begin(), events.begin() + static_cast<std::ptrdiff_t>(drop));
    out.trace.truncated_front = true;
    out.warnings.push_back("trace truncated: dropped " + std::to_string(drop) +
                           " oldest events");
  }
  return out;
}

ParsedTrace parse_trace_events(const Json& array) {
  std::vector<Json> raw;
  if (array.is_array())
    for (const auto& e : array) raw.push_back(e);
  return parse_trace_events(raw);
}

// ---------------------------------------------------------------------------
// Trace diff

namespace {

// Alignment key: payloads are deliberately excluded so value-level changes
// surface as Payload hunks instead of spurious insert/delete pairs.
using AlignKey = std::tuple<std::string, std::string, std::size_t>;

AlignKey key_of(const CallEvent& e) { return {e.method, e.call_site, e.depth}; }

std::vector<FieldDiff> payload_diffs(const CallEvent& failing, const CallEvent& passing) {
  std::vector<FieldDiff> out;
  std::size_t args = std::max(failing.args_rendered.size(), passing.args_rendered.size());
  for (std::size_t i = 0; i < args; ++i) {
    std::optional<std::string> f, p;
    if (i < failing.args_rendered.size()) f = failing.args_rendered[i];
    if (i < passing.args_rendered.size()) p = passing.args_rendered[i];
    if (f != p) out.push_back({"args[" + std::to_string(i) + "]", f, p});
  }
  if (failing.return_rendered != passing.return_rendered)
    out.push_back({"return", failing.return_rendered, passing.return_rendered});
  return out;
}

// If the alignment DP would exceed this many cells (after affix stripping),
// the middle is reported wholesale rather than aligned.
constexpr std::size_t kMaxDpCells = 8u * 1000 * 1000;

struct Aligner {
  const std::vector<CallEvent>& a; // failing
  const std::vector<CallEvent>& b; // passing
  std::vector<int> ida, idb;       // interned alignment keys
  std::map<AlignKey, int> intern;

  Aligner(const Trace& failing, const Trace& passing)
      : a(failing.events), b(passing.events) {
    // Interning over the sorted key union keeps ids (and tie-breaking)
    // symmetric under argument swap.
    for (const auto& e : a) intern.emplace(key_of(e), 0);
    for (const auto& e : b) intern.emplace(key_of(e), 0);
    int next = 0;
    for (auto& [key, id] : intern) id = next++;
    ida.reserve(a.size());
    idb.reserve(b.size());
    for (const auto& e : a) ida.push_back(intern[key_of(e)]);
    for (const auto& e : b) idb.push_back(intern[key_of(e)]);
  }

  // Pairs of aligned indices (i into a, j into b), ascending.
  std::vector<std::pair<std::size_t, std::size_t>> align() const {
    std::size_t lo = 0;
    while (lo < ida.size() && lo < idb.size() && ida[lo] == idb[lo]) ++lo;
    std::size_t hi = 0; // common suffix length
    while (hi + lo < ida.size() && hi + lo < idb.size() &&
           ida[ida.size() - 1 - hi] == idb[idb.size() - 1 - hi])
      ++hi;

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t k = 0; k < lo; ++k) pairs.emplace_back(k, k);

    const std::size_t n = ida.size() - lo - hi;
    const std::size_t m = idb.size() - lo - hi;
    if (n > 0 && m > 0) {
      if (n * m <= kMaxDpCells) {
        auto mid = lcs_pairs(lo, n, m);
        pairs.insert(pairs.end(), mid.begin(), mid.end());
      }
      // else: no alignment in the middle; both runs become OnlyIn hunks.
    }

    for (std::size_t k = 0; k < hi; ++k)
      pairs.emplace_back(ida.size() - hi + k, idb.size() - hi + k);
    return pairs;
  }

private:
  std::vector<std::pair<std::size_t, std::size_t>> lcs_pairs(std::size_t off,
                                                             std::size_t n,
                                                             std::size_t m) const {
    std::vector<std::vector<std::uint32_t>> dp(n + 1,
                                               std::vector<std::uint32_t>(m + 1, 0));
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t j = 1; j <= m; ++j) {
        if (ida[off + i - 1] == idb[off + j - 1])
          dp[i][j] = dp[i - 1][j - 1] + 1;
        else
          dp[i][j] = std::max(dp[i - 1][j], dp[i][j - 1]);
      }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::size_t i = n, j = m;
    while (i > 0 && j > 0) {
      if (ida[off + i - 1] == idb[off + j - 1]) {
        pairs.emplace_back(off + i - 1, off + j - 1);
        --i, --j;
      } else if (dp[i - 1][j] > dp[i][j - 1]) {
        --i;
      } else if (dp[i - 1][j] < dp[i][j - 1]) {
        --j;
      } else {
        // Tie: step the side with the smaller interned key, so diff(a,b)
        // and diff(b,a) walk mirrored paths.
        if (ida[off + i - 1] <= idb[off + j - 1])
          --i;
        else
          --j;
      }
    }
    std::reverse(pairs.begin(), pairs.end());
    return pairs;
  }
};

} // namespace

TraceDiff diff_traces(const Trace& failing, const Trace& passing) {
  Aligner aligner(failing, passing);
  auto pairs = aligner.align();

  TraceDiff diff;
  std::size_t aligned_before_divergence = 0;
  bool diverged = false;
  const auto mark_divergence = [&]() {
    if (!diverged) {
      diff.first_divergence_index = aligned_before_divergence;
      diverged = true;
    }
  };

  std::size_t ai = 0, bi = 0;
  const auto emit_gaps = [&](std::size_t a_end, std::size_t b_end) {
    if (ai < a_end) {
      mark_divergence();
      OnlyInFailingHunk h;
      h.events.assign(failing.events.begin() + static_cast<std::ptrdiff_t>(ai),
                      failing.events.begin() + static_cast<std::ptrdiff_t>(a_end));
      diff.hunks.emplace_back(std::move(h));
      ai = a_end;
    }
    if (bi < b_end) {
      mark_divergence();
      OnlyInPassingHunk h;
      h.events.assign(passing.events.begin() + static_cast<std::ptrdiff_t>(bi),
                      passing.events.begin() + static_cast<std::ptrdiff_t>(b_end));
      diff.hunks.emplace_back(std::move(h));
      bi = b_end;
    }
  };

  for (const auto& [pa, pb] : pairs) {
    emit_gaps(pa, pb);
    const CallEvent& fe = failing.events[ai];
    const CallEvent& pe = passing.events[bi];
    auto fields = payload_diffs(fe, pe);
    if (fields.empty()) {
      if (!diff.hunks.empty() && std::holds_alternative<CommonHunk>(diff.hunks.back()))
        ++std::get<CommonHunk>(diff.hunks.back()).count;
      else
        diff.hunks.emplace_back(CommonHunk{1});
      if (!diverged) ++aligned_before_divergence;
    } else {
      mark_divergence();
      diff.hunks.emplace_back(PayloadHunk{fe, pe, std::move(fields)});
    }
    ++ai;
    ++bi;
  }
  emit_gaps(failing.events.size(), passing.events.size());
  return diff;
}

std::optional<std::pair<std::size_t, const Hunk*>> first_divergence(const TraceDiff& diff) {
  if (!diff.first_divergence_index) return std::nullopt;
  std::size_t position = 0;
  for (const auto& hunk : diff.hunks) {
    if (const auto* common = std::get_if<CommonHunk>(&hunk)) {
      position += common->count;
      continue;
    }
    return std::make_pair(position, &hunk);
  }
  return std::nullopt; // unreachable for a well-formed diff
}

namespace {

EngineError diff_mismatch(const char* what) {
  return {"trace-diff", std::string("diff does not match trace: ") + what};
}

Trace apply(const TraceDiff& diff, const Trace& source, bool source_is_failing) {
  Trace out;
  std::size_t pos = 0;
  const auto& events = source.events;
  const auto take = [&](std::size_t k) {
    if (pos + k > events.size()) throw diff_mismatch("source exhausted");
    pos += k;
  };
  for (const auto& hunk : diff.hunks) {
    if (const auto* common = std::get_if<CommonHunk>(&hunk)) {
      for (std::size_t k = 0; k < common->count; ++k) {
        if (pos >= events.size()) throw diff_mismatch("source exhausted");
        out.events.push_back(events[pos++]);
      }
    } else if (const auto* fo = std::get_if<OnlyInFailingHunk>(&hunk)) {
      if (source_is_failing)
        take(fo->events.size());
      else
        out.events.insert(out.events.end(), fo->events.begin(), fo->events.end());
    } else if (const auto* po = std::get_if<OnlyInPassingHunk>(&hunk)) {
      if (source_is_failing)
        out.events.insert(out.events.end(), po->events.begin(), po->events.end());
      else
        take(po->events.size());
    } else {
      const auto& payload = std::get<PayloadHunk>(hunk);
      take(1);
      out.events.push_back(source_is_failing ? payload.passing : payload.failing);
    }
  }
  if (pos != events.size()) throw diff_mismatch("trailing source events");
  return out;
}

} // namespace

Trace apply_to_failing(const TraceDiff& diff, const Trace& failing) {
  return apply(diff, failing, true);
}

Trace apply_to_passing(const TraceDiff& diff, const Trace& passing) {
  return apply(diff, passing, false);
}

// ---------------------------------------------------------------------------
// Serialization

Json TraceDiff::to_json() const {
  Json j = Json::object();
  j["first_divergence"] =
      first_divergence_index ? Json(*first_divergence_index) : Json(nullptr);
  Json arr = Json::array();
  for (const auto& hunk : hunks) {
    Json h = Json::object();
    if (const auto* common = std::get_if<CommonHunk>(&hunk)) {
      h["kind"] = "common";
      h["count"] = common->count;
    } else if (const auto* fo = std::get_if<OnlyInFailingHunk>(&hunk)) {
      h["kind"] = "only-in-failing";
      Json evs = Json::array();
      for (const auto& e : fo->events) evs.push_back(e.to_json());
      h["events"] = std::move(evs);
    } else if (const auto* po = std::get_if<OnlyInPassingHunk>(&hunk)) {
      h["kind"] = "only-in-passing";
      Json evs = Json::array();
      for (const auto& e : po->events) evs.push_back(e.to_json());
      h["events"] = std::move(evs);
    } else {
      const auto& payload = std::get<PayloadHunk>(hunk);
      h["kind"] = "payload";
      h["failing"] = payload.failing.to_json();
      h["passing"] = payload.passing.to_json();
      Json fields = Json::array();
      for (const auto& f : payload.fields) {
        Json fd = Json::object();
        fd["field"] = f.field;
        fd["failing"] = f.failing ? Json(*f.failing) : Json(nullptr);
        fd["passing"] = f.passing ? Json(*f.passing) : Json(nullptr);
        fields.push_back(std::move(fd));
      }
      h["fields"] = std::move(fields);
    }
    arr.push_back(std::move(h));
  }
  j["hunks"] = std::move(arr);
  return j;
}

TraceDiff TraceDiff::from_json(const Json& j) {
  TraceDiff diff;
  if (j.contains("first_divergence") && !j["first_divergence"].is_null())
    diff.first_divergence_index = j["first_divergence"].get<std::size_t>();
  for (const auto& h : j.value("hunks", Json::array())) {
    std::string kind = h.at("kind").get<std::string>();
    if (kind == "common") {
      diff.hunks.emplace_back(CommonHunk{h.at("count").get<std::size_t>()});
    } else if (kind == "only-in-failing") {
      OnlyInFailingHunk hunk;
      for (const auto& e : h.at("events")) hunk.events.push_back(CallEvent::from_json(e));
      diff.hunks.emplace_back(std::move(hunk));
    } else if (kind == "only-in-passing") {
      OnlyInPassingHunk hunk;
      for (const auto& e : h.at("events")) hunk.events.push_back(CallEvent::from_json(e));
      diff.hunks.emplace_back(std::move(hunk));
    } else if (kind == "payload") {
      PayloadHunk hunk;
      hunk.failing = CallEvent::from_json(h.at("failing"));
      hunk.passing = CallEvent::from_json(h.at("passing"));
      for (const auto& f : h.value("fields", Json::array())) {
        FieldDiff fd;
        fd.field = f.at("field").get<std::string>();
        if (!f.at("failing").is_null()) fd.failing = f["failing"].get<std::string>();
        if (!f.at("passing").is_null()) fd.passing = f["passing"].get<std::string>();
        hunk.fields.push_back(std::move(fd));
      }
      diff.hunks.emplace_back(std::move(hunk));
    } else {
      throw EngineError("decode", "unknown hunk kind: " + kind);
    }
  }
  return diff;
}

} // namespace causal

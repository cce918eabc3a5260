#include "causal/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "causal/errors.hpp"
#include "causal/similarity.hpp"
#include "causal/utf8.hpp"
#include "causal/version.hpp"

namespace causal {

namespace {

std::string format_distance(double d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", d);
  return buf;
}

std::vector<ArgHighlight> highlight_args(const TestSpec& failing, const TestSpec& passing) {
  std::vector<ArgHighlight> out;
  for (std::size_t i = 0; i < failing.args.size() && i < passing.args.size(); ++i) {
    const InputValue& f = failing.args[i];
    const InputValue& p = passing.args[i];
    if (f == p) continue;
    ArgHighlight h;
    h.arg_index = i;
    if (f.kind() == InputValue::Kind::text && p.kind() == InputValue::Kind::text) {
      h.textual = true;
      h.failing_rendered = f.as_text();
      h.passing_rendered = p.as_text();
      for (const auto& op : edit_script(f.as_text(), p.as_text())) {
        if (op.kind == EditOp::Kind::match) continue;
        ArgEdit e;
        e.failing_pos = op.a_pos;
        e.passing_pos = op.b_pos;
        switch (op.kind) {
          case EditOp::Kind::substitute:
            e.op = ArgEdit::Op::substitute;
            e.failing_ch = utf8_encode(op.a_ch);
            e.passing_ch = utf8_encode(op.b_ch);
            break;
          case EditOp::Kind::insert:
            e.op = ArgEdit::Op::insert;
            e.passing_ch = utf8_encode(op.b_ch);
            break;
          case EditOp::Kind::erase:
            e.op = ArgEdit::Op::erase;
            e.failing_ch = utf8_encode(op.a_ch);
            break;
          default:
            continue;
        }
        h.edits.push_back(std::move(e));
      }
    } else {
      h.textual = false;
      h.failing_rendered = canonical_json(f);
      h.passing_rendered = canonical_json(p);
    }
    out.push_back(std::move(h));
  }
  return out;
}

} // namespace

CausalReport build_report(const SearchResult& result, const SearchConfig& config) {
  CausalReport report;
  report.engine_version = kEngineVersion;
  report.original = result.original;
  report.stop_reason = result.stop_reason;
  report.config = config;
  report.timing = {result.original.wall_ms, result.candidate_wall_ms,
                   result.executed_count};

  std::size_t k = std::min<std::size_t>(result.passing.size(),
                                        static_cast<std::size_t>(config.report_k));
  for (std::size_t i = 0; i < k; ++i) {
    PassingEntry entry;
    entry.record = result.passing[i];
    if (result.original.trace && entry.record.trace)
      entry.trace_diff = diff_traces(*result.original.trace, *entry.record.trace);
    entry.highlights = highlight_args(result.original.spec, entry.record.spec);
    report.nearest_passing.push_back(std::move(entry));
  }
  report.closer_failing = result.closer_failing;
  return report;
}

// ---------------------------------------------------------------------------
// JSON format

namespace {

const char* arg_edit_op_name(ArgEdit::Op op) {
  switch (op) {
    case ArgEdit::Op::substitute: return "substitute";
    case ArgEdit::Op::insert: return "insert";
    case ArgEdit::Op::erase: return "erase";
  }
  return "unknown";
}

ArgEdit::Op arg_edit_op_from_name(const std::string& name) {
  if (name == "substitute") return ArgEdit::Op::substitute;
  if (name == "insert") return ArgEdit::Op::insert;
  if (name == "erase") return ArgEdit::Op::erase;
  throw EngineError("decode", "unknown edit op: " + name);
}

Json highlight_to_json(const ArgHighlight& h) {
  Json j = Json::object();
  j["arg"] = h.arg_index;
  j["kind"] = h.textual ? "text" : "value";
  Json edits = Json::array();
  for (const auto& e : h.edits) {
    Json je = Json::object();
    je["op"] = arg_edit_op_name(e.op);
    je["failing_pos"] = e.failing_pos;
    je["passing_pos"] = e.passing_pos;
    je["failing"] = e.failing_ch;
    je["passing"] = e.passing_ch;
    edits.push_back(std::move(je));
  }
  j["edits"] = std::move(edits);
  j["failing"] = h.failing_rendered;
  j["passing"] = h.passing_rendered;
  return j;
}

ArgHighlight highlight_from_json(const Json& j) {
  ArgHighlight h;
  h.arg_index = j.at("arg").get<std::size_t>();
  h.textual = j.at("kind").get<std::string>() == "text";
  for (const auto& je : j.value("edits", Json::array())) {
    ArgEdit e;
    e.op = arg_edit_op_from_name(je.at("op").get<std::string>());
    e.failing_pos = je.at("failing_pos").get<std::size_t>();
    e.passing_pos = je.at("passing_pos").get<std::size_t>();
    e.failing_ch = je.value("failing", std::string{});
    e.passing_ch = je.value("passing", std::string{});
    h.edits.push_back(std::move(e));
  }
  h.failing_rendered = j.value("failing", std::string{});
  h.passing_rendered = j.value("passing", std::string{});
  return h;
}

} // namespace

Json report_to_json(const CausalReport& report) {
  Json j = Json::object();
  j["schema"] = kReportSchema;
  j["engine_version"] = report.engine_version;
  j["stop_reason"] = stop_reason_name(report.stop_reason);
  j["config"] = report.config.to_json();
  Json timing = Json::object();
  timing["original_ms"] = report.timing.original_ms;
  timing["candidates_ms"] = report.timing.candidates_ms;
  timing["executed"] = report.timing.executed;
  j["timing"] = std::move(timing);
  j["original"] = report.original.to_json();
  Json passing = Json::array();
  for (const auto& entry : report.nearest_passing) {
    Json e = Json::object();
    e["record"] = entry.record.to_json();
    e["trace_diff"] = entry.trace_diff ? entry.trace_diff->to_json() : Json(nullptr);
    Json highlights = Json::array();
    for (const auto& h : entry.highlights) highlights.push_back(highlight_to_json(h));
    e["highlights"] = std::move(highlights);
    passing.push_back(std::move(e));
  }
  j["nearest_passing"] = std::move(passing);
  Json failing = Json::array();
  for (const auto& rec : report.closer_failing) failing.push_back(rec.to_json());
  j["closer_failing"] = std::move(failing);
  return j;
}

CausalReport report_from_json(const Json& j) {
  if (j.value("schema", std::string{}) != kReportSchema)
    throw EngineError("decode", "unsupported report schema");
  CausalReport report;
  report.engine_version = j.at("engine_version").get<std::string>();
  report.stop_reason = stop_reason_from_name(j.at("stop_reason").get<std::string>());
  report.config = SearchConfig::from_json(j.at("config"));
  const Json& timing = j.at("timing");
  report.timing.original_ms = timing.at("original_ms").get<std::int64_t>();
  report.timing.candidates_ms = timing.at("candidates_ms").get<std::int64_t>();
  report.timing.executed = timing.at("executed").get<std::size_t>();
  report.original = ExecutionRecord::from_json(j.at("original"));
  for (const auto& e : j.at("nearest_passing")) {
    PassingEntry entry;
    entry.record = ExecutionRecord::from_json(e.at("record"));
    if (!e.at("trace_diff").is_null())
      entry.trace_diff = TraceDiff::from_json(e["trace_diff"]);
    for (const auto& h : e.value("highlights", Json::array()))
      entry.highlights.push_back(highlight_from_json(h));
    report.nearest_passing.push_back(std::move(entry));
  }
  for (const auto& r : j.at("closer_failing"))
    report.closer_failing.push_back(ExecutionRecord::from_json(r));
  return report;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::string render_args(const std::vector<InputValue>& args) {
  return canonical_args_json(args);
}

/// The passing text with changed scalar positions bracketed: "0[x]fade".
/// Adjacent changed positions merge into one bracket run.
std::string bracket_passing_text(const std::string& passing,
                                 const std::vector<ArgEdit>& edits) {
  std::u32string t = utf8_decode_checked(passing);
  std::vector<bool> changed(t.size(), false);
  for (const auto& e : edits) {
    if (e.op == ArgEdit::Op::erase) continue; // nothing to mark on this side
    if (e.passing_pos < t.size()) changed[e.passing_pos] = true;
  }
  std::string out;
  std::size_t i = 0;
  while (i < t.size()) {
    if (!changed[i]) {
      out += utf8_encode(t[i]);
      ++i;
      continue;
    }
    out += '[';
    while (i < t.size() && changed[i]) {
      out += utf8_encode(t[i]);
      ++i;
    }
    out += ']';
  }
  return out;
}

std::string describe_edit(const ArgEdit& e) {
  std::ostringstream os;
  switch (e.op) {
    case ArgEdit::Op::substitute:
      os << "substitute @" << e.failing_pos << " '" << e.failing_ch << "'->'"
         << e.passing_ch << "'";
      break;
    case ArgEdit::Op::insert:
      os << "insert @" << e.failing_pos << " '" << e.passing_ch << "'";
      break;
    case ArgEdit::Op::erase:
      os << "delete @" << e.failing_pos << " '" << e.failing_ch << "'";
      break;
  }
  return os.str();
}

std::string render_event(const CallEvent& e) {
  std::ostringstream os;
  os << e.method;
  if (!e.call_site.empty()) os << " @" << e.call_site;
  os << " (";
  for (std::size_t i = 0; i < e.args_rendered.size(); ++i) {
    if (i) os << ", ";
    os << e.args_rendered[i];
  }
  os << ")";
  if (e.return_rendered) os << " -> " << *e.return_rendered;
  return os.str();
}

void render_diff_summary(std::ostringstream& os, const TraceDiff& diff, bool verbose) {
  std::size_t common = 0, payload = 0, only_failing = 0, only_passing = 0;
  for (const auto& hunk : diff.hunks) {
    if (const auto* c = std::get_if<CommonHunk>(&hunk))
      common += c->count;
    else if (std::holds_alternative<PayloadHunk>(hunk))
      ++payload;
    else if (const auto* f = std::get_if<OnlyInFailingHunk>(&hunk))
      only_failing += f->events.size();
    else if (const auto* p = std::get_if<OnlyInPassingHunk>(&hunk))
      only_passing += p->events.size();
  }
  os << "  trace: ";
  if (!diff.first_divergence_index) {
    os << "identical (" << common << " events)\n";
    return;
  }
  os << "first divergence at event " << *diff.first_divergence_index << "; " << common
     << " common, " << payload << " payload, " << only_failing << " only-in-failing, "
     << only_passing << " only-in-passing\n";
  if (!verbose) return;
  std::size_t index = 1;
  for (const auto& hunk : diff.hunks) {
    os << "    hunk " << index++ << ": ";
    if (const auto* c = std::get_if<CommonHunk>(&hunk)) {
      os << "common x" << c->count << "\n";
    } else if (const auto* pl = std::get_if<PayloadHunk>(&hunk)) {
      os << "payload " << pl->failing.method << "\n";
      for (const auto& f : pl->fields)
        os << "      " << f.field << ": " << (f.failing ? *f.failing : "(none)")
           << " -> " << (f.passing ? *f.passing : "(none)") << "\n";
    } else if (const auto* fo = std::get_if<OnlyInFailingHunk>(&hunk)) {
      os << "only in failing:\n";
      for (const auto& e : fo->events) os << "      " << render_event(e) << "\n";
    } else if (const auto* po = std::get_if<OnlyInPassingHunk>(&hunk)) {
      os << "only in passing:\n";
      for (const auto& e : po->events) os << "      " << render_event(e) << "\n";
    }
  }
}

std::string render_passing_args(const PassingEntry& entry) {
  // Args rendered canonically, with text highlights applied inline.
  Json arr = Json::array();
  for (const auto& a : entry.record.spec.args) arr.push_back(a.to_json());
  // Replace highlighted text args with their bracketed form.
  for (const auto& h : entry.highlights) {
    if (!h.textual || h.arg_index >= arr.size()) continue;
    arr[h.arg_index] = bracket_passing_text(h.passing_rendered, h.edits);
  }
  return arr.dump();
}

constexpr std::size_t kMaxCloserFailingLines = 10;

} // namespace

std::string render(const CausalReport& report, ReportFormat format,
                   const RenderOptions& options) {
  if (format == ReportFormat::json) return report_to_json(report).dump(2) + "\n";

  std::ostringstream os;
  os << "causal report (engine " << report.engine_version << ")\n";
  os << "oracle: " << report.original.spec.oracle_id
     << "   stop: " << stop_reason_name(report.stop_reason)
     << "   executed: " << report.timing.executed << " candidates\n";
  os << "timing: original " << report.timing.original_ms << " ms, candidates "
     << report.timing.candidates_ms << " ms\n";
  os << "\n";
  os << "Failing: " << render_args(report.original.spec.args) << "\n";
  os << "  outcome: " << report.original.outcome.name();
  if (!report.original.outcome.message.empty())
    os << " - " << report.original.outcome.message;
  os << "\n\n";

  if (report.nearest_passing.empty()) {
    os << "No passing perturbation found within budget.\n";
  } else {
    for (const auto& entry : report.nearest_passing) {
      os << "Passing: " << render_passing_args(entry) << "   distance "
         << format_distance(entry.record.distance_to_original) << "\n";
      for (const auto& h : entry.highlights) {
        os << "  arg " << h.arg_index << ": ";
        if (h.textual) {
          os << "\"" << h.failing_rendered << "\" -> \"" << h.passing_rendered << "\"";
          os << "   " << h.edits.size() << (h.edits.size() == 1 ? " edit: " : " edits: ");
          for (std::size_t i = 0; i < h.edits.size(); ++i) {
            if (i) os << ", ";
            os << describe_edit(h.edits[i]);
          }
        } else {
          os << h.failing_rendered << " -> " << h.passing_rendered;
        }
        os << "\n";
      }
      if (entry.trace_diff)
        render_diff_summary(os, *entry.trace_diff, options.verbose);
      else
        os << "  trace: (not available for both runs)\n";
      os << "\n";
    }
  }

  if (!report.closer_failing.empty()) {
    os << "Closer failing inputs (even more similar than the farthest reported pass):\n";
    std::size_t shown = 0;
    for (const auto& rec : report.closer_failing) {
      if (shown == kMaxCloserFailingLines) {
        os << "  ... and " << (report.closer_failing.size() - shown) << " more\n";
        break;
      }
      os << "  " << render_args(rec.spec.args) << "   distance "
         << format_distance(rec.distance_to_original) << "   [" << rec.outcome.name()
         << "]\n";
      ++shown;
    }
  }
  return os.str();
}

} // namespace causal

#include "causal/value.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

#include "causal/errors.hpp"
#include "causal/utf8.hpp"

namespace causal {

InputValue InputValue::real(double r) {
  if (r == 0.0) r = 0.0; // collapse -0.0: indistinguishable under the metric
  return InputValue(r);
}

const char* InputValue::kind_name() const noexcept {
  switch (kind()) {
    case Kind::text: return "text";
    case Kind::integer: return "integer";
    case Kind::real: return "real";
    case Kind::boolean: return "boolean";
    case Kind::sequence: return "sequence";
    case Kind::record: return "record";
  }
  return "unknown";
}

Json InputValue::to_json() const {
  switch (kind()) {
    case Kind::text: return Json(as_text());
    case Kind::integer: return Json(as_integer());
    case Kind::real: return Json(as_real());
    case Kind::boolean: return Json(as_boolean());
    case Kind::sequence: {
      Json arr = Json::array();
      for (const auto& e : as_sequence()) arr.push_back(e.to_json());
      return arr;
    }
    case Kind::record: {
      Json obj = Json::object();
      for (const auto& [name, value] : as_record()) obj[name] = value.to_json();
      return obj;
    }
  }
  return Json();
}

InputValue InputValue::from_json(const Json& j) {
  switch (j.type()) {
    case Json::value_t::string:
      return InputValue::text(j.get<std::string>());
    case Json::value_t::number_integer:
      return InputValue::integer(j.get<std::int64_t>());
    case Json::value_t::number_unsigned: {
      auto u = j.get<std::uint64_t>();
      if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
        throw EngineError("decode",
                          "integer out of range; pass values wider than 64-bit "
                          "signed as text");
      return InputValue::integer(static_cast<std::int64_t>(u));
    }
    case Json::value_t::number_float:
      return InputValue::real(j.get<double>());
    case Json::value_t::boolean:
      return InputValue::boolean(j.get<bool>());
    case Json::value_t::array: {
      Sequence elems;
      elems.reserve(j.size());
      for (const auto& e : j) elems.push_back(from_json(e));
      return InputValue::sequence(std::move(elems));
    }
    case Json::value_t::object: {
      Record fields;
      fields.reserve(j.size());
      for (auto it = j.begin(); it != j.end(); ++it)
        fields.emplace_back(it.key(), from_json(it.value()));
      return InputValue::record(std::move(fields));
    }
    default:
      throw EngineError("decode", "unsupported JSON value for an input: " +
                                      std::string(j.type_name()));
  }
}

bool InputValue::operator==(const InputValue& other) const {
  if (kind() != other.kind()) return false;
  switch (kind()) {
    case Kind::text: return as_text() == other.as_text();
    case Kind::integer: return as_integer() == other.as_integer();
    case Kind::real: return as_real() == other.as_real();
    case Kind::boolean: return as_boolean() == other.as_boolean();
    case Kind::sequence: {
      const auto& a = as_sequence();
      const auto& b = other.as_sequence();
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) return false;
      return true;
    }
    case Kind::record: {
      // Name-based, order-insensitive: matches the distance metric, which
      // aligns record fields by name.
      const auto& a = as_record();
      const auto& b = other.as_record();
      if (a.size() != b.size()) return false;
      for (const auto& [name, value] : a) {
        bool found = false;
        for (const auto& [bname, bvalue] : b) {
          if (bname == name) {
            if (!(bvalue == value)) return false;
            found = true;
            break;
          }
        }
        if (!found) return false;
      }
      return true;
    }
  }
  return false;
}

std::string canonical_json(const InputValue& v) { return v.to_json().dump(); }

std::string canonical_args_json(const std::vector<InputValue>& args) {
  Json arr = Json::array();
  for (const auto& a : args) arr.push_back(a.to_json());
  return arr.dump();
}

Json TestSpec::to_json() const {
  Json j = Json::object();
  j["test_id"] = test_id;
  Json arr = Json::array();
  for (const auto& a : args) arr.push_back(a.to_json());
  j["args"] = std::move(arr);
  j["oracle_id"] = oracle_id;
  return j;
}

TestSpec TestSpec::from_json(const Json& j) {
  TestSpec spec;
  spec.test_id = j.value("test_id", std::string{});
  spec.oracle_id = j.value("oracle_id", std::string{});
  if (!j.contains("args") || !j["args"].is_array())
    throw EngineError("decode", "test spec requires an \"args\" array");
  for (const auto& a : j["args"]) spec.args.push_back(InputValue::from_json(a));
  return spec;
}

bool same_args(const TestSpec& a, const TestSpec& b) {
  if (a.args.size() != b.args.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (a.args[i] != b.args[i]) return false;
  return true;
}

namespace {

void validate_value(const InputValue& v, const std::string& path) {
  switch (v.kind()) {
    case InputValue::Kind::text:
      if (!utf8_valid(v.as_text()))
        throw invalid_spec(path + ": text is not well-formed UTF-8");
      break;
    case InputValue::Kind::real: {
      double r = v.as_real();
      if (std::isnan(r)) throw invalid_spec(path + ": NaN not permitted");
      if (std::isinf(r)) throw invalid_spec(path + ": non-finite real not permitted");
      break;
    }
    case InputValue::Kind::sequence: {
      const auto& elems = v.as_sequence();
      for (std::size_t i = 0; i < elems.size(); ++i)
        validate_value(elems[i], path + "[" + std::to_string(i) + "]");
      break;
    }
    case InputValue::Kind::record: {
      std::unordered_set<std::string> seen;
      for (const auto& [name, value] : v.as_record()) {
        if (!seen.insert(name).second)
          throw invalid_spec(path + ": duplicate record field \"" + name + "\"");
        validate_value(value, path + "." + name);
      }
      break;
    }
    default:
      break;
  }
}

} // namespace

TestSpec validate_spec(TestSpec spec) {
  if (spec.args.empty()) throw invalid_spec("args: empty argument vector");
  for (std::size_t i = 0; i < spec.args.size(); ++i)
    validate_value(spec.args[i], "args[" + std::to_string(i) + "]");
  return spec;
}

const char* Outcome::name() const noexcept {
  switch (kind) {
    case Kind::pass: return "pass";
    case Kind::fail: return "fail";
    case Kind::crash: return "crash";
    case Kind::timeout: return "timeout";
  }
  return "unknown";
}

Json ExecutionRecord::to_json() const {
  Json j = Json::object();
  j["test"] = spec.to_json();
  Json o = Json::object();
  o["kind"] = outcome.name();
  if (!outcome.message.empty()) o["message"] = outcome.message;
  j["outcome"] = std::move(o);
  j["distance"] = distance_to_original;
  j["wall_ms"] = wall_ms;
  j["trace"] = trace ? trace->to_json() : Json(nullptr);
  return j;
}

ExecutionRecord ExecutionRecord::from_json(const Json& j) {
  ExecutionRecord rec;
  rec.spec = TestSpec::from_json(j.at("test"));
  const Json& o = j.at("outcome");
  std::string kind = o.at("kind").get<std::string>();
  std::string message = o.value("message", std::string{});
  if (kind == "pass")
    rec.outcome = Outcome::pass();
  else if (kind == "fail")
    rec.outcome = Outcome::fail(message);
  else if (kind == "crash")
    rec.outcome = Outcome::crash(message);
  else if (kind == "timeout")
    rec.outcome = Outcome::timeout();
  else
    throw EngineError("decode", "unknown outcome kind: " + kind);
  rec.distance_to_original = j.at("distance").get<double>();
  rec.wall_ms = j.at("wall_ms").get<std::int64_t>();
  if (j.contains("trace") && !j["trace"].is_null())
    rec.trace = Trace::from_json(j["trace"]);
  return rec;
}

Json SearchConfig::to_json() const {
  Json j = Json::object();
  j["target_passing"] = target_passing;
  j["max_candidates"] = max_candidates;
  j["per_execution_timeout_ms"] = per_execution_timeout_ms;
  j["total_budget_ms"] = total_budget_ms;
  j["rng_seed"] = rng_seed;
  j["parallelism"] = parallelism;
  j["report_k"] = report_k;
  j["weights"] = weights ? Json(*weights) : Json(nullptr);
  j["repeat"] = repeat;
  return j;
}

SearchConfig SearchConfig::from_json(const Json& j) {
  SearchConfig c;
  c.target_passing = j.value("target_passing", c.target_passing);
  c.max_candidates = j.value("max_candidates", c.max_candidates);
  c.per_execution_timeout_ms = j.value("per_execution_timeout_ms", c.per_execution_timeout_ms);
  c.total_budget_ms = j.value("total_budget_ms", c.total_budget_ms);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
  c.parallelism = j.value("parallelism", c.parallelism);
  c.report_k = j.value("report_k", c.report_k);
  if (j.contains("weights") && !j["weights"].is_null())
    c.weights = j["weights"].get<std::vector<double>>();
  c.repeat = j.value("repeat", c.repeat);
  return c;
}

void validate_config(const SearchConfig& config, std::size_t arity) {
  if (config.target_passing < 1) throw config_error("target_passing must be >= 1");
  if (config.report_k < 0 || config.report_k > config.target_passing)
    throw config_error("report_k must be between 0 and target_passing");
  if (config.max_candidates < 0) throw config_error("max_candidates must be >= 0");
  if (config.per_execution_timeout_ms <= 0)
    throw config_error("per_execution_timeout must be positive");
  if (config.total_budget_ms <= 0) throw config_error("total_budget must be positive");
  if (config.parallelism < 1) throw config_error("parallelism must be >= 1");
  if (config.repeat < 1) throw config_error("repeat must be >= 1");
  if (config.weights) {
    if (arity != 0 && config.weights->size() != arity)
      throw config_error("weights length " + std::to_string(config.weights->size()) +
                         " does not match arity " + std::to_string(arity));
    double sum = 0.0;
    for (double w : *config.weights) {
      if (w < 0.0 || std::isnan(w)) throw config_error("weights must be non-negative");
      sum += w;
    }
    if (!(sum > 0.0)) throw config_error("weights must sum to a positive value");
  }
}

} // namespace causal

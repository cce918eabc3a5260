#include <doctest.h>

#include <cmath>
#include <random>

#include "causal/errors.hpp"
#include "causal/value.hpp"
#include "../support/generators.hpp"

using namespace causal;

TEST_CASE("validate_spec accepts the hex-parse scenario") {
  TestSpec spec{"hex-parse-9b", {InputValue::text("0Xfade")}, "hex-parse"};
  CHECK_NOTHROW(validate_spec(spec));
}

TEST_CASE("validate_spec rejects an empty argument vector") {
  TestSpec spec{"t", {}, "o"};
  CHECK_THROWS_WITH_AS(validate_spec(spec), "args: empty argument vector", EngineError);
}

TEST_CASE("validate_spec rejects NaN reals, also inside nested values") {
  TestSpec spec{"t", {InputValue::real(std::nan(""))}, "o"};
  CHECK_THROWS_WITH_AS(validate_spec(spec), "args[0]: NaN not permitted", EngineError);

  TestSpec nested{
      "t",
      {InputValue::sequence({InputValue::record(
          {{"x", InputValue::real(std::numeric_limits<double>::quiet_NaN())}})})},
      "o"};
  CHECK_THROWS_AS(validate_spec(nested), EngineError);
}

TEST_CASE("validate_spec rejects infinities and duplicate record fields") {
  TestSpec inf_spec{"t", {InputValue::real(INFINITY)}, "o"};
  CHECK_THROWS_AS(validate_spec(inf_spec), EngineError);

  TestSpec dup{"t",
               {InputValue::record({{"a", InputValue::integer(1)},
                                    {"a", InputValue::integer(2)}})},
               "o"};
  CHECK_THROWS_AS(validate_spec(dup), EngineError);
}

TEST_CASE("validate_spec rejects malformed UTF-8 text") {
  TestSpec spec{"t", {InputValue::text("\xff\xfe")}, "o"};
  CHECK_THROWS_AS(validate_spec(spec), EngineError);
}

TEST_CASE("negative zero is normalized at construction") {
  CHECK(InputValue::real(-0.0) == InputValue::real(0.0));
  CHECK(canonical_json(InputValue::real(-0.0)) == canonical_json(InputValue::real(0.0)));
}

TEST_CASE("record equality is name-based, order-insensitive") {
  auto a = InputValue::record({{"x", InputValue::integer(1)}, {"y", InputValue::integer(2)}});
  auto b = InputValue::record({{"y", InputValue::integer(2)}, {"x", InputValue::integer(1)}});
  CHECK(a == b);
  auto c = InputValue::record({{"x", InputValue::integer(1)}, {"z", InputValue::integer(2)}});
  CHECK(a != c);
}

TEST_CASE("canonical JSON distinguishes integers from reals") {
  CHECK(canonical_json(InputValue::integer(5)) == "5");
  CHECK(canonical_json(InputValue::real(5.0)) == "5.0");
  CHECK(InputValue::integer(5) != InputValue::real(5.0));
}

TEST_CASE("decode rejects unsigned integers beyond int64") {
  Json too_big = Json::parse("18446744073709551615");
  CHECK_THROWS_AS(InputValue::from_json(too_big), EngineError);
}

TEST_CASE("serialization round-trip holds for randomized values") {
  std::mt19937_64 rng(20260810);
  for (int i = 0; i < 500; ++i) {
    InputValue v = gen::random_value(rng);
    InputValue back = InputValue::from_json(v.to_json());
    CAPTURE(canonical_json(v));
    CHECK(back == v);
    CHECK(canonical_json(back) == canonical_json(v));
  }
}

TEST_CASE("canonical encoding follows the wire mapping") {
  auto v = InputValue::record({
      {"name", InputValue::text("René")},
      {"count", InputValue::integer(-3)},
      {"ratio", InputValue::real(0.5)},
      {"ok", InputValue::boolean(true)},
      {"tags", InputValue::sequence({InputValue::text("a"), InputValue::text("b")})},
  });
  CHECK(canonical_json(v) ==
        R"({"name":"René","count":-3,"ratio":0.5,"ok":true,"tags":["a","b"]})");
}

TEST_CASE("search config invariants are enforced") {
  SearchConfig config;
  config.target_passing = 0;
  CHECK_THROWS_AS(validate_config(config), EngineError);

  config = {};
  config.report_k = 5; // > target_passing (3)
  CHECK_THROWS_AS(validate_config(config), EngineError);

  config = {};
  config.weights = std::vector<double>{0.0, 0.0};
  CHECK_THROWS_AS(validate_config(config, 2), EngineError);

  config = {};
  config.weights = std::vector<double>{1.0};
  CHECK_THROWS_AS(validate_config(config, 2), EngineError); // arity mismatch

  config = {};
  config.weights = std::vector<double>{1.0, 2.0};
  CHECK_NOTHROW(validate_config(config, 2));
}

TEST_CASE("comparability requires oracle and arity to match") {
  TestSpec a{"a", {InputValue::integer(1)}, "o"};
  TestSpec b{"b", {InputValue::integer(2)}, "o"};
  TestSpec c{"c", {InputValue::integer(1), InputValue::integer(2)}, "o"};
  TestSpec d{"d", {InputValue::integer(1)}, "other"};
  CHECK(a.comparable_with(b));
  CHECK_FALSE(a.comparable_with(c));
  CHECK_FALSE(a.comparable_with(d));
}

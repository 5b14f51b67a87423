#include <doctest.h>

#include <cstdlib>

#include "sciagent/config.hpp"
#include "sciagent/errors.hpp"
#include "support.hpp"

using namespace sciagent;

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    auto c = default_config();
    CHECK(c.limits.n_max == LoopLimits{}.n_max);
    REQUIRE(c.workbench.bo.size() == 2);
    CHECK(c.workbench.bo[0].campaign.n_init == 50);
    CHECK(c.workbench.bo[1].campaign.n_init == 10);
    CHECK(c.workbench.camel.eval_budget == 60);
  }

  TEST_CASE("sections parse and paths resolve against the file") {
    testing::TempDir tmp;
    write_file_atomic(tmp.path() / "c.json", R"({
      "backend": {"script": "s.json"},
      "limits": {"n_max": 2, "f_max": 4},
      "tools": {"search_fixtures": "fx"},
      "workbench": {"camel": {"seed": 5}, "svg": false}
    })");
    auto c = load_config(tmp.path() / "c.json");
    CHECK(c.backend.script == tmp.path() / "s.json");
    CHECK(c.limits.n_max == 2);
    CHECK(c.limits.f_max == 4);
    CHECK(c.tools.search_fixtures == tmp.path() / "fx");
    CHECK(c.workbench.camel.seed == 5);
    CHECK_FALSE(c.workbench.svg);
  }

  TEST_CASE("unknown keys and bad values are rejected") {
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"nope": 1})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"limits": {"n_maxx": 1}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"limits": {"n_max": -1}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(Json::parse(R"({"workbench": {"camel": {"n_init": 70}}})")), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/c.json"), ConfigError);
  }

  TEST_CASE("live backend needs its credential") {
    BackendSettings s;
    s.live.credential_ref = "SCIAGENT_TEST_MISSING_KEY";
    ::unsetenv("SCIAGENT_TEST_MISSING_KEY");
    CHECK_THROWS_AS(make_backend(s), ConfigError);
    s.script = testing::fixtures() / "scripts" / "plan.json";
    CHECK(make_backend(s) != nullptr);
  }
}

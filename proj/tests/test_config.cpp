#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "config.hpp"
#include "errors.hpp"

using namespace surgnav;

TEST_CASE("key=value parsing with comments and blanks") {
  const Config cfg = Config::parse(
      "# header comment\n"
      "fx=1000.5\n"
      "\n"
      "name = tool mesh \n"
      "count=3\n");
  CHECK(cfg.get_double("fx") == doctest::Approx(1000.5));
  CHECK(cfg.get_string("name") == "tool mesh");
  CHECK(cfg.get_int("count") == 3);
  CHECK(cfg.has("fx"));
  CHECK_FALSE(cfg.has("missing"));
}

TEST_CASE("fallbacks and missing keys") {
  const Config cfg = Config::parse("a=1\n");
  CHECK(cfg.get_double("b", 2.5) == 2.5);
  CHECK(cfg.get_int("b", 7) == 7);
  CHECK(cfg.get_string("b", "x") == "x");
  CHECK_THROWS_AS(cfg.get_double("b"), Error);
  CHECK_THROWS_AS(cfg.get_string("b"), Error);
}

TEST_CASE("repeated keys accumulate in order") {
  const Config cfg = Config::parse("phase=a\nphase=b\nphase=c\n");
  const auto all = cfg.get_all("phase");
  REQUIRE(all.size() == 3);
  CHECK(all[0] == "a");
  CHECK(all[1] == "b");
  CHECK(all[2] == "c");
  // single-value getters see the last binding, so overrides can append
  CHECK(cfg.get_string("phase") == "c");
}

TEST_CASE("set appends") {
  Config cfg;
  cfg.set("k", "v");
  CHECK(cfg.get_string("k") == "v");
}

TEST_CASE("split_fields trims") {
  const auto fields = split_fields(" a , b,c ", ',');
  REQUIRE(fields.size() == 3);
  CHECK(fields[0] == "a");
  CHECK(fields[1] == "b");
  CHECK(fields[2] == "c");
}

#include <doctest.h>

#include "rlab/toml_lite.hpp"

using namespace rlab;

TEST_CASE("toml: scalars, tables, arrays, comments") {
    const std::string text = R"(# top comment
title = "demo"
count = 42
ratio = 0.5
flag = true

[section]
name = "inner"   # trailing comment
values = [1, 2, 3]
floats = [1.0, 2.5]

[section.sub]
deep = -7
)";
    const toml::Table doc = toml::parse(text);
    CHECK(toml::require_string(doc, "title") == "demo");
    CHECK(toml::require_int(doc, "count") == 42);
    CHECK(toml::require_double(doc, "ratio") == doctest::Approx(0.5));
    CHECK(toml::require_bool(doc, "flag"));
    CHECK(toml::require_string(doc, "section.name") == "inner");
    CHECK(toml::require_int(doc, "section.sub.deep") == -7);

    const auto ints = toml::as_int_array(toml::require_array(doc, "section.values"), "values");
    REQUIRE(ints.size() == 3);
    CHECK(ints[2] == 3);
    const auto fl = toml::as_double_array(toml::require_array(doc, "section.floats"), "floats");
    CHECK(fl[1] == doctest::Approx(2.5));
    // Integer arrays read as doubles too.
    const auto as_fl = toml::as_double_array(toml::require_array(doc, "section.values"), "values");
    CHECK(as_fl[0] == doctest::Approx(1.0));
}

TEST_CASE("toml: multiline arrays and scientific notation") {
    const std::string text = R"(
[grid]
k = [
  2,
  4,
  8,
]
eps = 1e-3
big = 2.5e+10
)";
    const toml::Table doc = toml::parse(text);
    const auto k = toml::as_int_array(toml::require_array(doc, "grid.k"), "k");
    REQUIRE(k.size() == 3);
    CHECK(k[1] == 4);
    CHECK(toml::require_double(doc, "grid.eps") == doctest::Approx(1e-3));
    CHECK(toml::require_double(doc, "grid.big") == doctest::Approx(2.5e10));
}

TEST_CASE("toml: fallbacks and missing keys") {
    const toml::Table doc = toml::parse("x = 1\n");
    CHECK(toml::get_int(doc, "x", 9) == 1);
    CHECK(toml::get_int(doc, "missing", 9) == 9);
    CHECK(toml::get_string(doc, "missing", "d") == "d");
    CHECK(toml::find(doc, "missing") == nullptr);
    CHECK_THROWS_AS((void)toml::require_int(doc, "missing"), toml::ParseError);
    CHECK_THROWS_AS((void)toml::require_string(doc, "x"), toml::ParseError);
}

TEST_CASE("toml: malformed input reports the line") {
    CHECK_THROWS_AS((void)toml::parse("= nokey\n"), toml::ParseError);
    CHECK_THROWS_AS((void)toml::parse("[unclosed\n"), toml::ParseError);
    CHECK_THROWS_AS((void)toml::parse("a = [1, 2\n"), toml::ParseError);
    try {
        (void)toml::parse("ok = 1\nbroken ==\n");
        FAIL("expected a parse error");
    } catch (const toml::ParseError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

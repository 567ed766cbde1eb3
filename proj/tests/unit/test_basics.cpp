#include <doctest.h>

#include "flowshift/csv.hpp"
#include "flowshift/error.hpp"
#include "flowshift/net.hpp"
#include "flowshift/time.hpp"

using namespace flowshift;

TEST_SUITE("basics") {
  TEST_CASE("timestamps round-trip in canonical form") {
    const Millis t = parse_timestamp("2020-03-14T08:05:09.123Z");
    CHECK(t == 1584173109123);
    CHECK(format_timestamp(t) == "2020-03-14T08:05:09.123Z");
    CHECK(parse_timestamp("2020-03-14 08:05:09") == 1584173109000);
    CHECK(format_timestamp(0) == "1970-01-01T00:00:00.000Z");
  }

  TEST_CASE("malformed timestamps are input errors") {
    for (const char* bad : {"", "2020-13-01T00:00:00Z", "2020-02-30T00:00:00Z", "2020-03-01T25:00:00Z", "yesterday"}) {
      CAPTURE(bad);
      try {
        parse_timestamp(bad);
        FAIL("accepted");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::input);
        CHECK(e.exit_code() == 2);
      }
    }
  }

  TEST_CASE("dates and epoch days") {
    CHECK(days_since_epoch({1970, 1, 1}) == 0);
    CHECK(days_since_epoch({2020, 3, 1}) == 18322);
    CHECK(date_from_days(18322) == Date{2020, 3, 1});
    CHECK(date_from_days(-1) == Date{1969, 12, 31});
    for (std::int64_t d = 18000; d < 18800; ++d) CHECK(days_since_epoch(date_from_days(d)) == d);
    CHECK(format_date(parse_date("2020-02-29")) == "2020-02-29");
    CHECK_THROWS_AS(parse_date("2019-02-29"), Error);
  }

  TEST_CASE("floor division rounds toward negative infinity") {
    CHECK(floor_div(7, 3) == 2);
    CHECK(floor_div(-7, 3) == -3);
    CHECK(floor_div(-6, 3) == -2);
    CHECK(floor_div(0, 5) == 0);
  }

  TEST_CASE("IPv4 parsing and /24 prefixes") {
    CHECK(parse_ipv4("10.1.2.3") == 0x0A010203u);
    CHECK(format_ipv4(0xC0A80001u) == "192.168.0.1");
    CHECK_THROWS_AS(parse_ipv4("10.1.2"), Error);
    CHECK_THROWS_AS(parse_ipv4("10.1.2.256"), Error);
    CHECK_THROWS_AS(parse_ipv4("10.1.2.3.4"), Error);
    const auto p = PrefixId::of(parse_ipv4("10.1.2.77"));
    CHECK(p.to_string() == "10.1.2.0/24");
    CHECK(PrefixId::parse("10.1.2.9/24") == p);
    CHECK(PrefixId::from_key(p.key()) == p);
    const auto c = Cidr::parse("10.4.0.0/15");
    CHECK(c.length == 15);
    CHECK(c.to_string() == "10.4.0.0/15");
    CHECK_THROWS_AS(Cidr::parse("10.4.0.0/33"), Error);
  }

  TEST_CASE("CSV split and escape") {
    CHECK(csv::split("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(csv::split("\"x,y\",\"he said \"\"hi\"\"\"") == std::vector<std::string>{"x,y", "he said \"hi\""});
    CHECK(csv::escape("plain") == "plain");
    CHECK(csv::escape("a,b") == "\"a,b\"");
    CHECK(csv::escape("q\"") == "\"q\"\"\"");
    CHECK(csv::trim("  x \t") == "x");
    CHECK(csv::skippable("# comment"));
    CHECK(csv::skippable("   "));
    CHECK_FALSE(csv::skippable("a"));
  }
}

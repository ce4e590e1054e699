#include <doctest.h>

#include "sleepd/rational.hpp"

using namespace sleepd;

TEST_CASE("rational parsing") {
  CHECK(Rational::parse("42") == Rational::from_int(42));
  CHECK(Rational::parse("+42") == Rational::from_int(42));
  CHECK(Rational::parse("-17") == Rational::from_int(-17));
  CHECK(Rational::parse("1,234") == Rational::from_int(1234));
  CHECK(Rational::parse("12,345,678") == Rational::from_int(12345678));
  CHECK(Rational::parse("3.5") == normalize(7, 2));
  CHECK(Rational::parse("-0.25") == normalize(-1, 4));
  CHECK(Rational::parse("0.0") == Rational::from_int(0));
  CHECK(Rational::parse("1,234.5") == normalize(2469, 2));
}

TEST_CASE("rational parse rejects junk") {
  CHECK_FALSE(Rational::parse("").has_value());
  CHECK_FALSE(Rational::parse("abc").has_value());
  CHECK_FALSE(Rational::parse("1.").has_value());
  CHECK_FALSE(Rational::parse(".5").has_value());
  CHECK_FALSE(Rational::parse("1,23").has_value());
  CHECK_FALSE(Rational::parse("1,2345").has_value());
  CHECK_FALSE(Rational::parse("4 2").has_value());
  CHECK_FALSE(Rational::parse("--3").has_value());
  CHECK_FALSE(Rational::parse("99999999999999999999999999").has_value());
}

TEST_CASE("normalization") {
  CHECK(normalize(2, 4) == normalize(1, 2));
  CHECK(normalize(-2, -4) == normalize(1, 2));
  CHECK(normalize(2, -4).num == -1);
  CHECK(normalize(0, 7) == Rational::from_int(0));
}

TEST_CASE("canonical text form") {
  CHECK(Rational::from_int(42).to_string() == "42");
  CHECK(Rational::from_int(-7).to_string() == "-7");
  CHECK(Rational::parse("3.5")->to_string() == "3.5");
  CHECK(Rational::parse("0.05")->to_string() == "0.05");
  CHECK(Rational::parse("-12.250")->to_string() == "-12.25");
  CHECK(normalize(1, 3).to_string() == "1/3");
}

TEST_CASE("equality is exact after normalization") {
  CHECK(*Rational::parse("7.0") == Rational::from_int(7));
  CHECK(*Rational::parse("7.50") == *Rational::parse("7.5"));
  CHECK_FALSE(*Rational::parse("7.5") == Rational::from_int(7));
}

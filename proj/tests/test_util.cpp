#include <doctest.h>

#include <random>
#include <string>

#include "oracles.hpp"
#include "xsslab/util.hpp"

using namespace xsslab;

TEST_CASE("percent_decode handles well-formed escapes") {
  CHECK(percent_decode("%3Cscript%3E") == "<script>");
  CHECK(percent_decode("%3cscript%3e") == "<script>");  // hex digits case-insensitive
  CHECK(percent_decode("a%20b") == "a b");
  CHECK(percent_decode("%00").size() == 1);
  CHECK(percent_decode("%00")[0] == '\0');
  CHECK(percent_decode("") == "");
  CHECK(percent_decode("plain") == "plain");
}

TEST_CASE("percent_decode passes malformed escapes through verbatim") {
  CHECK(percent_decode("%") == "%");
  CHECK(percent_decode("%2") == "%2");
  CHECK(percent_decode("%G1") == "%G1");
  CHECK(percent_decode("%%341") == "%41");  // second % starts a valid escape
  CHECK(percent_decode("100%") == "100%");
}

TEST_CASE("percent_decode is single-pass") {
  // %2532 decodes to %32 and stops; it never becomes "2".
  CHECK(percent_decode("%2532") == "%32");
  CHECK(percent_decode("%253Cscript%253E") == "%3Cscript%3E");
}

TEST_CASE("percent_decode plus handling is opt-in") {
  CHECK(percent_decode("a+b") == "a+b");
  CHECK(percent_decode("a+b", true) == "a b");
  CHECK(percent_decode("%2B", true) == "+");  // encoded plus survives
}

TEST_CASE("percent_decode agrees with reference decoder on random inputs") {
  std::mt19937 rng(7);
  const std::string alphabet = "%0123456789abcdefABCDEFG+ <>\"'";
  for (int i = 0; i < 500; ++i) {
    std::string s = testref::random_string(rng, 24, alphabet);
    CHECK(percent_decode(s) == testref::pct_decode(s));
    CHECK(percent_decode(s, true) == testref::pct_decode(s, true));
  }
}

TEST_CASE("percent_encode covers non-unreserved bytes and round-trips") {
  CHECK(percent_encode("abcXYZ019-._~") == "abcXYZ019-._~");
  CHECK(percent_encode("<script>") == "%3Cscript%3E");
  CHECK(percent_encode(" ") == "%20");
  CHECK(percent_encode(std::string(1, '\0')) == "%00");

  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    std::string s;
    size_t len = rng() % 20;
    for (size_t k = 0; k < len; ++k) s.push_back(static_cast<char>(rng() % 256));
    CHECK(percent_decode(percent_encode(s)) == s);
  }
}

TEST_CASE("base64 known vectors and round-trip") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foo") == "Zm9v");
  CHECK(base64_decode("aGVsbG8=") == "hello");
  CHECK(base64_decode("aGVs bG8=") == "hello");  // embedded whitespace tolerated
  CHECK(base64_decode("!!!") == "");             // invalid input yields empty

  std::mt19937 rng(13);
  for (int i = 0; i < 200; ++i) {
    std::string s;
    size_t len = rng() % 40;
    for (size_t k = 0; k < len; ++k) s.push_back(static_cast<char>(rng() % 256));
    CHECK(base64_decode(base64_encode(s)) == s);
  }
}

TEST_CASE("string helpers") {
  CHECK(to_lower("AbC<>'") == "abc<>'");

  CHECK(contains_ci("<ScRiPt>", "script"));
  CHECK(contains_ci("abc", ""));
  CHECK_FALSE(contains_ci("abc", "abcd"));
  CHECK_FALSE(contains_ci("", "x"));

  CHECK(replace_all_ci("a<SCRIPT>b<script>c", "<script>", "") == "abc");
  CHECK(replace_all_ci("aaa", "a", "bb") == "bbbbbb");
  CHECK(replace_all_ci("abc", "zz", "y") == "abc");

  CHECK(split("a=1&b=2", '&') == std::vector<std::string>{"a=1", "b=2"});
  CHECK(split("", '&') == std::vector<std::string>{""});
  CHECK(split("a&&b", '&') == std::vector<std::string>{"a", "", "b"});

  CHECK(trim("  x y\t\r\n") == "x y");
  CHECK(trim("\t \r\n") == "");
  CHECK(trim("x") == "x");

  CHECK(is_digits("0123456789"));
  CHECK(is_digits(""));  // vacuously digits; NUM gaps may be empty
  CHECK_FALSE(is_digits("12a"));
  CHECK_FALSE(is_digits(" 1"));
}

TEST_CASE("read_file and write_file round-trip binary content") {
  std::string body = "line1\nline2";
  body.push_back('\0');
  body += "binary";
  body.push_back('\xff');
  std::string path = testref::write_temp("util_rw.bin", "");
  write_file(path, body);
  CHECK(read_file(path) == body);
  CHECK_THROWS(read_file(path + ".does-not-exist"));
}

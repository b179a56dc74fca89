#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace xsslab {

/** Decodes one pass of URL percent-encoding. Malformed escapes pass through verbatim. */
std::string percent_decode(const std::string& s, bool plus_to_space = false);

/** Percent-encodes everything outside RFC 3986 unreserved characters. */
std::string percent_encode(const std::string& s);

/** Standard base64 with padding. */
std::string base64_encode(const std::string& bytes);

/** Inverse of base64_encode; whitespace tolerated, invalid input yields empty string. */
std::string base64_decode(const std::string& text);

std::string to_lower(const std::string& s);

bool contains_ci(const std::string& haystack, const std::string& needle);

/** Replaces every occurrence of `from` (case-insensitive) with `to`. */
std::string replace_all_ci(const std::string& s, const std::string& from, const std::string& to);

std::vector<std::string> split(const std::string& s, char sep);

std::string trim(const std::string& s);

bool is_digits(const std::string& s);

std::string read_file(const std::string& path);

void write_file(const std::string& path, const std::string& content);

}  // namespace xsslab

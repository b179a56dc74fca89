#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xsslab/capture.hpp"

namespace xsslab {

enum class EntryPointKind { kQuery, kBody, kPath, kHeader };

std::string entry_point_kind_name(EntryPointKind kind);
EntryPointKind entry_point_kind_from_name(const std::string& name);

/** Where a value entered the request: parameter name, header name, or path-segment index. */
struct EntryPoint {
  EntryPointKind kind = EntryPointKind::kQuery;
  std::string name;

  bool operator==(const EntryPoint&) const = default;
  auto operator<=>(const EntryPoint&) const = default;
};

/** One suspected attack payload recovered from captured traffic. */
struct Payload {
  uint64_t id = 0;
  std::string value;      // decoded form, byte-identical to the entry point's decoded_value
  std::string raw_value;  // wire form
  uint64_t request_id = 0;
  EntryPoint entry_point;
  std::string scanner_id;
  std::vector<std::string> flagged_by;  // non-empty; subset of {attack-chars, signature, cross-scanner}
};

inline constexpr const char* kFlagAttackChars = "attack-chars";
inline constexpr const char* kFlagSignature = "signature";
inline constexpr const char* kFlagCrossScanner = "cross-scanner";

/** Per-scanner flagging patterns plus the (configurable) attack character set. */
struct SignatureSet {
  std::map<std::string, std::vector<std::string>> patterns;  // scanner_id -> substring patterns
  std::string attack_chars = "<>\"'";
};

/**
 * Loads a signatures JSON object {scanner_id: [pattern, ...]}. The reserved key
 * "$attack_chars" (array of single-character strings) overrides the attack set.
 */
SignatureSet load_signatures(const std::string& path);

/** (path, parameter) -> expected crawl value. */
using BaselineMap = std::map<std::pair<std::string, std::string>, std::string>;

BaselineMap load_baseline(const std::string& path);

/**
 * Flags every query/body/header value whose decoded or raw form contains an attack
 * character or a URL-percent encoding of one (case-insensitive).
 */
std::vector<Payload> flag_by_attack_chars(const std::vector<CapturedRequest>& requests,
                                          const SignatureSet& sigs);

/** Flags every query/body/header value matching a pattern of the request's scanner. */
std::vector<Payload> flag_by_signature(const std::vector<CapturedRequest>& requests,
                                       const SignatureSet& sigs);

/**
 * Flags path segments carrying attack characters. Entry point kind is path and the
 * name is the 0-based segment index; downstream analysis excludes these by default.
 */
std::vector<Payload> extract_path_payloads(const std::vector<CapturedRequest>& requests,
                                           const SignatureSet& sigs);

/**
 * Union of the heuristics, deduplicated by (value, entry point, request path,
 * scanner), ordered by (scanner_id, request_id, entry_point), ids assigned 1..n.
 * Values equal to the baseline for their (path, parameter) are skipped.
 */
std::vector<Payload> extract_all(const std::vector<CapturedRequest>& requests,
                                 const SignatureSet& sigs, const BaselineMap& baseline = {});

/** One suspicious divergence between two scanners' requests to the same target. */
struct ReviewEntry {
  uint64_t request_a = 0;
  uint64_t request_b = 0;
  std::string scanner_a;
  std::string scanner_b;
  std::string path;
  std::string param;
  std::string value_a;
  std::string value_b;
  std::string baseline;
};

/**
 * Compares same-shape requests (equal path and parameter-name set) across scanners
 * and reports parameters whose values differ from each other or from baseline.
 * Output feeds the human review queue; it never auto-promotes to payloads.
 */
std::vector<ReviewEntry> cross_scanner_diff(const std::vector<CapturedRequest>& requests,
                                            const BaselineMap& baseline);

std::string to_payload_jsonl_line(const Payload& p);
Payload payload_from_jsonl_line(const std::string& line);

std::string to_review_jsonl_line(const ReviewEntry& e);

void write_payloads_jsonl(const std::string& path, const std::vector<Payload>& payloads);
std::vector<Payload> read_payloads_jsonl(const std::string& path);

}  // namespace xsslab

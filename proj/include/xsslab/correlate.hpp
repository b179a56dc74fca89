#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xsslab/capture.hpp"
#include "xsslab/extract.hpp"
#include "xsslab/templating.hpp"

namespace xsslab {

/** One finding from a scanner's normalized report. */
struct ReportFinding {
  std::string url;
  std::string parameter;
  std::string vuln_type;
  std::string evidence;  // may be empty
};

struct NormalizedReport {
  std::string scanner_id;
  std::vector<ReportFinding> findings;
};

/** Parses {"scanner_id": ..., "findings": [{url, parameter, vuln_type, evidence}]}. */
NormalizedReport load_report(const std::string& path);

inline constexpr const char* kNegativeReasons[] = {"unknown", "malformed", "wrong-context",
                                                   "detection-failure", "redundant"};

bool is_valid_negative_reason(const std::string& reason);

/** A payload joined with the report verdict for its injection point. */
struct ClassifiedPayload {
  Payload payload;
  bool positive = false;
  std::string negative_reason;  // meaningful only when !positive; starts as "unknown"
  std::string matched_url;      // finding that confirmed a positive
  std::string matched_parameter;
};

struct CorrelationResult {
  std::vector<ClassifiedPayload> classified;
  std::vector<std::string> diagnostics;  // findings with no corresponding traffic
};

/** Path component of a finding URL (scheme/host/query/fragment stripped). */
std::string url_path(const std::string& url);

/**
 * True when the evidence string and the payload agree under templated matching:
 * byte equality, or the pair merges into one template under the given params.
 */
bool evidence_matches(const std::string& evidence, const std::string& value,
                      const TemplatingParams& params);

/**
 * Splits payloads into positive (a same-scanner finding matches the originating
 * request's path and the payload's parameter, and its evidence, when present,
 * matches the payload) and negative (reason "unknown", pending triage).
 */
CorrelationResult correlate(const std::vector<Payload>& payloads,
                            const std::vector<NormalizedReport>& reports,
                            const std::vector<CapturedRequest>& requests,
                            const TemplatingParams& params);

struct TriageOutcome {
  size_t applied = 0;
  std::vector<std::string> rejected;  // human-readable rejection notes
};

/**
 * Applies human-supplied negative reasons. "redundant" is accepted only when a
 * positive payload exists at the same (path, parameter); invalid reasons and
 * annotations on positives are rejected.
 */
TriageOutcome apply_triage(std::vector<ClassifiedPayload>& classified,
                           const std::map<uint64_t, std::string>& annotations,
                           const std::vector<CapturedRequest>& requests);

/** Loads JSONL annotations {"payload_id": n, "reason": s}. */
std::map<uint64_t, std::string> load_annotations(const std::string& path);

/**
 * Clusters negative payload values into templates (one per candidate retrofit
 * case), ordered by descending member count.
 */
std::vector<Template> dedup_negatives(const std::vector<ClassifiedPayload>& classified,
                                      const TemplatingParams& params);

std::string to_classified_jsonl_line(const ClassifiedPayload& c);
ClassifiedPayload classified_from_jsonl_line(const std::string& line);

}  // namespace xsslab

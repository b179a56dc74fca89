#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "xsslab/correlate.hpp"
#include "xsslab/templating.hpp"

namespace xsslab {

/**
 * A replayable scanner behavior: a payload corpus with generator slots, an
 * optional signature literal, and a detection mode used to claim findings.
 *
 * Corpus slot syntax:
 *   <NUMk>  k random digits
 *   <STRk>  k random alphanumerics, first one a letter
 *   <SEQ>   zero-padded monotonically increasing id (6 digits)
 */
struct ScannerProfile {
  std::string scanner_id;
  std::vector<std::string> corpus;
  std::string signature_tag;                // literal required in every corpus entry
  std::string detection = "reflection";     // or "reflection-ignore-retrofit"
  std::string vuln_type = "xss-reflected";
};

/** Parses and validates a profile JSON document; throws std::runtime_error. */
ScannerProfile profile_from_json(const std::string& text);
ScannerProfile load_profile(const std::string& path);

/** Expands corpus slots deterministically from a seed. */
class CorpusInstantiator {
 public:
  explicit CorpusInstantiator(uint64_t seed) : rng_(seed) {}

  /** One fresh payload from a corpus entry; throws on malformed slot syntax. */
  std::string instantiate(const std::string& entry);

 private:
  std::mt19937_64 rng_;
  uint64_t seq_ = 0;
};

/** The template a corpus entry denotes: slots become placeholders (SEQ/NUM -> NUM). */
Template corpus_entry_template(const std::string& entry);

struct MockScanResult {
  std::vector<std::string> log_lines;      // canonical request-log lines, send order
  NormalizedReport report;
  std::vector<std::string> payloads_sent;  // instantiated payloads, send order
};

/**
 * Visits every route of the catalog served at base_url: baseline value first,
 * then each instantiated corpus payload, logging all requests. A finding is
 * claimed for (route, q) when the response reflects the payload; the
 * reflection-ignore-retrofit mode never claims findings on retrofit routes.
 * Throws std::runtime_error when the target is unreachable.
 */
MockScanResult run_scan(const ScannerProfile& profile, const std::string& base_url, uint64_t seed);

}  // namespace xsslab

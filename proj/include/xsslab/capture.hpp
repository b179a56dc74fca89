#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace xsslab {

/** One query/body parameter: raw form as seen on the wire plus its single-pass decoding. */
struct QueryParam {
  std::string name;
  std::string raw_value;
  std::string decoded_value;

  bool operator==(const QueryParam&) const = default;
};

/** A single HTTP request recovered from a capture source. */
struct CapturedRequest {
  uint64_t id = 0;
  double ts = 0.0;
  std::string scanner_id;
  std::string method;
  std::string path;                    // percent-encoding preserved verbatim
  std::vector<QueryParam> query_params;
  std::vector<std::pair<std::string, std::string>> headers;
  std::string raw_body;
  std::vector<QueryParam> body_params; // populated for form-encoded bodies

  std::string header(const std::string& name) const;
};

/** Where requests come from: a pcap file or a JSON-lines request log. */
struct CaptureSource {
  enum class Kind { kPcap, kRequestLog };
  Kind kind = Kind::kRequestLog;
  std::string path;
  std::string scanner_id;  // opaque label attached to every request from this source
};

/** Recoverable-trouble tallies for one ingestion run. */
struct IngestDiagnostics {
  uint64_t malformed_requests = 0;
  uint64_t malformed_log_lines = 0;
  uint64_t truncated_packets = 0;
  uint64_t skipped_packets = 0;
  uint64_t content_encoding_flagged = 0;

  uint64_t total() const {
    return malformed_requests + malformed_log_lines + truncated_packets + skipped_packets +
           content_encoding_flagged;
  }
};

/** Fatal ingestion failure: unreadable file, bad pcap magic, TLS stream, unsupported linktype. */
struct IngestError : std::runtime_error {
  explicit IngestError(const std::string& what) : std::runtime_error(what) {}
};

/**
 * Splits a raw query string on '&' and '=' and percent-decodes each value once.
 * Pairs without '=' yield an empty raw_value; '+' becomes space in decoded_value only.
 */
std::vector<QueryParam> parse_query_string(const std::string& raw_query);

/** Derives body_params from a form-encoded body; other content types leave it empty. */
void derive_body_params(CapturedRequest& req);

/**
 * Reads capture sources and yields requests ordered by (source order, capture order).
 * Ids are unique and monotonically increasing within one ingestor's lifetime.
 */
class Ingestor {
 public:
  std::vector<CapturedRequest> ingest(const CaptureSource& source);

  const IngestDiagnostics& diagnostics() const { return diag_; }

 private:
  std::vector<CapturedRequest> ingest_request_log(const CaptureSource& source);

  uint64_t next_id_ = 1;
  IngestDiagnostics diag_;
};

/** Serializes one request as a request-log JSON line (no trailing newline). */
std::string to_request_log_line(const CapturedRequest& req);

/** Parses one request-log JSON line; throws IngestError on schema violations. */
CapturedRequest from_request_log_line(const std::string& line, const std::string& scanner_id);

}  // namespace xsslab

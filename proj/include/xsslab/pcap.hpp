#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xsslab/capture.hpp"

namespace xsslab {

/**
 * Decodes a classic pcap file (Ethernet linktype, IPv4/TCP), reassembles each client
 * stream in sequence order, and parses the plaintext HTTP requests found inside.
 * Pipelined requests are split, chunked bodies are de-chunked, duplicate segments are
 * dropped. Throws IngestError on bad magic, non-Ethernet linktype, or TLS streams;
 * recoverable trouble is tallied in diag.
 */
std::vector<CapturedRequest> ingest_pcap(const std::string& path, const std::string& scanner_id,
                                         uint64_t& next_id, IngestDiagnostics& diag);

}  // namespace xsslab

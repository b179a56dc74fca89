#include "xsslab/capture.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "xsslab/pcap.hpp"
#include "xsslab/util.hpp"

namespace xsslab {

using nlohmann::json;

std::string CapturedRequest::header(const std::string& name) const {
  for (const auto& [k, v] : headers) {
    if (to_lower(k) == to_lower(name)) return v;
  }
  return {};
}

std::vector<QueryParam> parse_query_string(const std::string& raw_query) {
  std::vector<QueryParam> out;
  if (raw_query.empty()) return out;
  for (const std::string& piece : split(raw_query, '&')) {
    if (piece.empty()) continue;
    QueryParam p;
    size_t eq = piece.find('=');
    if (eq == std::string::npos) {
      p.name = percent_decode(piece, true);
    } else {
      p.name = percent_decode(piece.substr(0, eq), true);
      p.raw_value = piece.substr(eq + 1);
    }
    p.decoded_value = percent_decode(p.raw_value, true);
    out.push_back(std::move(p));
  }
  return out;
}

void derive_body_params(CapturedRequest& req) {
  req.body_params.clear();
  std::string ctype = to_lower(req.header("Content-Type"));
  if (ctype.find("application/x-www-form-urlencoded") != std::string::npos && !req.raw_body.empty()) {
    req.body_params = parse_query_string(req.raw_body);
  }
}

std::string to_request_log_line(const CapturedRequest& req) {
  nlohmann::ordered_json j;
  j["ts"] = req.ts;
  if (!req.scanner_id.empty()) j["scanner_id"] = req.scanner_id;
  j["method"] = req.method;
  j["path"] = req.path;
  json query = json::array();
  for (const auto& p : req.query_params) query.push_back({p.name, p.raw_value});
  j["query"] = query;
  json headers = json::array();
  for (const auto& [k, v] : req.headers) headers.push_back({k, v});
  j["headers"] = headers;
  j["body"] = base64_encode(req.raw_body);
  return j.dump();
}

CapturedRequest from_request_log_line(const std::string& line, const std::string& scanner_id) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw IngestError(std::string("bad request-log line: ") + e.what());
  }
  if (!j.is_object() || !j.contains("method") || !j.contains("path")) {
    throw IngestError("bad request-log line: missing method/path");
  }
  CapturedRequest req;
  req.scanner_id = j.value("scanner_id", scanner_id);  // line's own label wins
  req.ts = j.value("ts", 0.0);
  req.method = j.at("method").get<std::string>();
  req.path = j.at("path").get<std::string>();
  if (j.contains("query")) {
    for (const auto& pair : j.at("query")) {
      if (!pair.is_array() || pair.size() != 2) throw IngestError("bad request-log query pair");
      QueryParam p;
      p.name = pair[0].get<std::string>();
      p.raw_value = pair[1].get<std::string>();
      p.decoded_value = percent_decode(p.raw_value, true);
      req.query_params.push_back(std::move(p));
    }
  }
  if (j.contains("headers")) {
    for (const auto& pair : j.at("headers")) {
      if (!pair.is_array() || pair.size() != 2) throw IngestError("bad request-log header pair");
      req.headers.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
    }
  }
  if (j.contains("body")) req.raw_body = base64_decode(j.at("body").get<std::string>());

  // Lenient reading: a path carrying its own query string is split and merged.
  size_t qmark = req.path.find('?');
  if (qmark != std::string::npos) {
    std::string extra = req.path.substr(qmark + 1);
    req.path = req.path.substr(0, qmark);
    for (auto& p : parse_query_string(extra)) req.query_params.push_back(std::move(p));
  }
  derive_body_params(req);
  return req;
}

std::vector<CapturedRequest> Ingestor::ingest_request_log(const CaptureSource& source) {
  std::ifstream in(source.path);
  if (!in) throw IngestError("cannot open request log: " + source.path);
  std::vector<CapturedRequest> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      CapturedRequest req = from_request_log_line(line, source.scanner_id);
      req.id = next_id_++;
      out.push_back(std::move(req));
    } catch (const IngestError&) {
      ++diag_.malformed_log_lines;
    }
  }
  return out;
}

std::vector<CapturedRequest> Ingestor::ingest(const CaptureSource& source) {
  if (source.kind == CaptureSource::Kind::kRequestLog) return ingest_request_log(source);
  return ingest_pcap(source.path, source.scanner_id, next_id_, diag_);
}

}  // namespace xsslab

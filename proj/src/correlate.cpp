#include "xsslab/correlate.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "xsslab/util.hpp"

namespace xsslab {

using nlohmann::json;

NormalizedReport load_report(const std::string& path) {
  NormalizedReport report;
  json j = json::parse(read_file(path));
  report.scanner_id = j.at("scanner_id").get<std::string>();
  for (const auto& f : j.value("findings", json::array())) {
    ReportFinding finding;
    finding.url = f.at("url").get<std::string>();
    finding.parameter = f.at("parameter").get<std::string>();
    finding.vuln_type = f.value("vuln_type", std::string());
    finding.evidence = f.value("evidence", std::string());
    report.findings.push_back(std::move(finding));
  }
  return report;
}

bool is_valid_negative_reason(const std::string& reason) {
  for (const char* r : kNegativeReasons) {
    if (reason == r) return true;
  }
  return false;
}

std::string url_path(const std::string& url) {
  std::string s = url;
  size_t scheme = s.find("://");
  if (scheme != std::string::npos) {
    size_t slash = s.find('/', scheme + 3);
    s = slash == std::string::npos ? "/" : s.substr(slash);
  }
  size_t cut = s.find_first_of("?#");
  if (cut != std::string::npos) s = s.substr(0, cut);
  return s.empty() ? "/" : s;
}

bool evidence_matches(const std::string& evidence, const std::string& value,
                      const TemplatingParams& params) {
  if (evidence == value) return true;
  return merge_pair(evidence, value, params).has_value();
}

CorrelationResult correlate(const std::vector<Payload>& payloads,
                            const std::vector<NormalizedReport>& reports,
                            const std::vector<CapturedRequest>& requests,
                            const TemplatingParams& params) {
  CorrelationResult result;

  std::map<uint64_t, const CapturedRequest*> requests_by_id;
  std::set<std::pair<std::string, std::string>> traffic_points;
  for (const CapturedRequest& req : requests) {
    requests_by_id[req.id] = &req;
    for (const QueryParam& p : req.query_params) traffic_points.insert({req.path, p.name});
    for (const QueryParam& p : req.body_params) traffic_points.insert({req.path, p.name});
  }

  for (const Payload& payload : payloads) {
    ClassifiedPayload c;
    c.payload = payload;
    c.negative_reason = "unknown";
    auto req_it = requests_by_id.find(payload.request_id);
    const std::string path = req_it == requests_by_id.end() ? std::string() : req_it->second->path;
    for (const NormalizedReport& report : reports) {
      if (report.scanner_id != payload.scanner_id) continue;
      for (const ReportFinding& finding : report.findings) {
        if (url_path(finding.url) != path) continue;
        if (finding.parameter != payload.entry_point.name) continue;
        if (!finding.evidence.empty() && !evidence_matches(finding.evidence, payload.value, params))
          continue;
        c.positive = true;
        c.negative_reason.clear();
        c.matched_url = finding.url;
        c.matched_parameter = finding.parameter;
        break;
      }
      if (c.positive) break;
    }
    result.classified.push_back(std::move(c));
  }

  for (const NormalizedReport& report : reports) {
    for (const ReportFinding& finding : report.findings) {
      if (!traffic_points.count({url_path(finding.url), finding.parameter})) {
        result.diagnostics.push_back("finding for " + url_path(finding.url) + " parameter '" +
                                     finding.parameter + "' (scanner " + report.scanner_id +
                                     ") has no matching traffic");
      }
    }
  }
  return result;
}

TriageOutcome apply_triage(std::vector<ClassifiedPayload>& classified,
                           const std::map<uint64_t, std::string>& annotations,
                           const std::vector<CapturedRequest>& requests) {
  TriageOutcome outcome;
  std::map<uint64_t, std::string> paths;
  for (const CapturedRequest& req : requests) paths[req.id] = req.path;

  // Injection points that already carry a confirmed positive.
  std::set<std::pair<std::string, std::string>> positive_points;
  for (const ClassifiedPayload& c : classified) {
    if (c.positive) positive_points.insert({paths[c.payload.request_id], c.payload.entry_point.name});
  }

  for (ClassifiedPayload& c : classified) {
    auto it = annotations.find(c.payload.id);
    if (it == annotations.end()) continue;
    const std::string& reason = it->second;
    if (!is_valid_negative_reason(reason)) {
      outcome.rejected.push_back("payload " + std::to_string(c.payload.id) + ": unknown reason '" +
                                 reason + "'");
      continue;
    }
    if (c.positive) {
      outcome.rejected.push_back("payload " + std::to_string(c.payload.id) +
                                 ": cannot annotate a positive");
      continue;
    }
    if (reason == "redundant" &&
        !positive_points.count({paths[c.payload.request_id], c.payload.entry_point.name})) {
      outcome.rejected.push_back("payload " + std::to_string(c.payload.id) +
                                 ": 'redundant' requires a positive at the same injection point");
      continue;
    }
    c.negative_reason = reason;
    ++outcome.applied;
  }
  return outcome;
}

std::map<uint64_t, std::string> load_annotations(const std::string& path) {
  std::map<uint64_t, std::string> out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open annotations file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    json j = json::parse(line);
    out[j.at("payload_id").get<uint64_t>()] = j.at("reason").get<std::string>();
  }
  return out;
}

std::vector<Template> dedup_negatives(const std::vector<ClassifiedPayload>& classified,
                                      const TemplatingParams& params) {
  std::vector<ClusterInput> inputs;
  for (const ClassifiedPayload& c : classified) {
    if (!c.positive) inputs.push_back({c.payload.id, c.payload.value});
  }
  return cluster(inputs, params);
}

std::string to_classified_jsonl_line(const ClassifiedPayload& c) {
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(to_payload_jsonl_line(c.payload));
  j["positive"] = c.positive;
  if (!c.positive) {
    j["negative_reason"] = c.negative_reason;
  } else {
    j["matched_url"] = c.matched_url;
    j["matched_parameter"] = c.matched_parameter;
  }
  return j.dump();
}

ClassifiedPayload classified_from_jsonl_line(const std::string& line) {
  ClassifiedPayload c;
  c.payload = payload_from_jsonl_line(line);
  json j = json::parse(line);
  c.positive = j.at("positive").get<bool>();
  if (!c.positive) {
    c.negative_reason = j.value("negative_reason", "unknown");
  } else {
    c.matched_url = j.value("matched_url", std::string());
    c.matched_parameter = j.value("matched_parameter", std::string());
  }
  return c;
}

}  // namespace xsslab

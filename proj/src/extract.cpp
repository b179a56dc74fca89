#include "xsslab/extract.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "xsslab/util.hpp"

namespace xsslab {

using nlohmann::json;

namespace {

struct EntryValue {
  EntryPoint point;
  std::string raw;
  std::string decoded;
};

// Query, body, and header values of one request, in that order.
std::vector<EntryValue> entry_values(const CapturedRequest& req) {
  std::vector<EntryValue> out;
  for (const QueryParam& p : req.query_params) {
    out.push_back({{EntryPointKind::kQuery, p.name}, p.raw_value, p.decoded_value});
  }
  for (const QueryParam& p : req.body_params) {
    out.push_back({{EntryPointKind::kBody, p.name}, p.raw_value, p.decoded_value});
  }
  for (const auto& [name, value] : req.headers) {
    out.push_back({{EntryPointKind::kHeader, name}, value, value});
  }
  return out;
}

bool value_has_attack_chars(const std::string& raw, const std::string& decoded,
                            const std::string& attack_chars) {
  for (char c : attack_chars) {
    if (decoded.find(c) != std::string::npos) return true;
    char buf[4];
    std::snprintf(buf, sizeof(buf), "%%%02X", static_cast<unsigned char>(c));
    std::string pct(buf);
    if (contains_ci(decoded, pct) || contains_ci(raw, pct)) return true;
  }
  return false;
}

bool matches_pattern(const std::string& value, const std::string& pattern) {
  if (pattern.empty()) return false;
  bool anchor_front = pattern.front() == '^';
  bool anchor_back = pattern.size() > 1 && pattern.back() == '$';
  std::string body = pattern.substr(anchor_front ? 1 : 0,
                                    pattern.size() - (anchor_front ? 1 : 0) - (anchor_back ? 1 : 0));
  if (anchor_front && anchor_back) return value == body;
  if (anchor_front) return value.rfind(body, 0) == 0;
  if (anchor_back)
    return value.size() >= body.size() && value.compare(value.size() - body.size(), body.size(), body) == 0;
  return value.find(body) != std::string::npos;
}

Payload make_payload(const CapturedRequest& req, const EntryValue& ev, const char* flag) {
  Payload p;
  p.value = ev.decoded;
  p.raw_value = ev.raw;
  p.request_id = req.id;
  p.entry_point = ev.point;
  p.scanner_id = req.scanner_id;
  p.flagged_by = {flag};
  return p;
}

int kind_rank(EntryPointKind kind) {
  switch (kind) {
    case EntryPointKind::kQuery: return 0;
    case EntryPointKind::kBody: return 1;
    case EntryPointKind::kPath: return 2;
    case EntryPointKind::kHeader: return 3;
  }
  return 4;
}

}  // namespace

std::string entry_point_kind_name(EntryPointKind kind) {
  switch (kind) {
    case EntryPointKind::kQuery: return "query";
    case EntryPointKind::kBody: return "body";
    case EntryPointKind::kPath: return "path";
    case EntryPointKind::kHeader: return "header";
  }
  return "query";
}

EntryPointKind entry_point_kind_from_name(const std::string& name) {
  if (name == "query") return EntryPointKind::kQuery;
  if (name == "body") return EntryPointKind::kBody;
  if (name == "path") return EntryPointKind::kPath;
  if (name == "header") return EntryPointKind::kHeader;
  throw std::runtime_error("unknown entry point kind: " + name);
}

SignatureSet load_signatures(const std::string& path) {
  SignatureSet sigs;
  json j = json::parse(read_file(path));
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "$attack_chars") {
      std::string chars;
      for (const auto& c : it.value()) {
        std::string s = c.get<std::string>();
        if (s.size() == 1) chars += s;
      }
      if (!chars.empty()) sigs.attack_chars = chars;
      continue;
    }
    std::vector<std::string> patterns;
    for (const auto& p : it.value()) patterns.push_back(p.get<std::string>());
    sigs.patterns[it.key()] = std::move(patterns);
  }
  return sigs;
}

BaselineMap load_baseline(const std::string& path) {
  BaselineMap out;
  json j = json::parse(read_file(path));
  for (const auto& entry : j) {
    out[{entry.at("path").get<std::string>(), entry.at("param").get<std::string>()}] =
        entry.at("value").get<std::string>();
  }
  return out;
}

std::vector<Payload> flag_by_attack_chars(const std::vector<CapturedRequest>& requests,
                                          const SignatureSet& sigs) {
  std::vector<Payload> out;
  for (const CapturedRequest& req : requests) {
    for (const EntryValue& ev : entry_values(req)) {
      if (value_has_attack_chars(ev.raw, ev.decoded, sigs.attack_chars)) {
        out.push_back(make_payload(req, ev, kFlagAttackChars));
      }
    }
  }
  return out;
}

std::vector<Payload> flag_by_signature(const std::vector<CapturedRequest>& requests,
                                       const SignatureSet& sigs) {
  std::vector<Payload> out;
  for (const CapturedRequest& req : requests) {
    auto it = sigs.patterns.find(req.scanner_id);
    if (it == sigs.patterns.end()) continue;
    for (const EntryValue& ev : entry_values(req)) {
      bool hit = std::any_of(it->second.begin(), it->second.end(), [&](const std::string& pat) {
        return matches_pattern(ev.decoded, pat);
      });
      if (hit) out.push_back(make_payload(req, ev, kFlagSignature));
    }
  }
  return out;
}

std::vector<Payload> extract_path_payloads(const std::vector<CapturedRequest>& requests,
                                           const SignatureSet& sigs) {
  std::vector<Payload> out;
  for (const CapturedRequest& req : requests) {
    std::vector<std::string> segments = split(req.path, '/');
    size_t index = 0;
    for (const std::string& raw_segment : segments) {
      if (raw_segment.empty()) continue;
      std::string decoded = percent_decode(raw_segment);
      if (value_has_attack_chars(raw_segment, decoded, sigs.attack_chars)) {
        EntryValue ev{{EntryPointKind::kPath, std::to_string(index)}, raw_segment, decoded};
        out.push_back(make_payload(req, ev, kFlagAttackChars));
      }
      ++index;
    }
  }
  return out;
}

std::vector<Payload> extract_all(const std::vector<CapturedRequest>& requests,
                                 const SignatureSet& sigs, const BaselineMap& baseline) {
  std::vector<Payload> merged;
  for (auto& p : flag_by_attack_chars(requests, sigs)) merged.push_back(std::move(p));
  for (auto& p : flag_by_signature(requests, sigs)) merged.push_back(std::move(p));
  for (auto& p : extract_path_payloads(requests, sigs)) merged.push_back(std::move(p));

  std::map<uint64_t, const CapturedRequest*> by_id;
  for (const CapturedRequest& req : requests) by_id[req.id] = &req;
  auto path_of = [&](uint64_t id) -> const std::string& {
    static const std::string empty;
    auto it = by_id.find(id);
    return it == by_id.end() ? empty : it->second->path;
  };

  if (!baseline.empty()) {
    std::erase_if(merged, [&](const Payload& p) {
      auto it = baseline.find({path_of(p.request_id), p.entry_point.name});
      return it != baseline.end() && it->second == p.value;
    });
  }

  std::sort(merged.begin(), merged.end(), [](const Payload& a, const Payload& b) {
    int ra = kind_rank(a.entry_point.kind);
    int rb = kind_rank(b.entry_point.kind);
    return std::tie(a.scanner_id, a.request_id, ra, a.entry_point.name) <
           std::tie(b.scanner_id, b.request_id, rb, b.entry_point.name);
  });

  std::vector<Payload> out;
  std::map<std::tuple<std::string, int, std::string, std::string, std::string>, size_t> seen;
  for (Payload& p : merged) {
    auto key = std::make_tuple(p.value, kind_rank(p.entry_point.kind), p.entry_point.name,
                               path_of(p.request_id), p.scanner_id);
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen[key] = out.size();
      out.push_back(std::move(p));
    } else {
      Payload& kept = out[it->second];
      for (const std::string& flag : p.flagged_by) {
        if (std::find(kept.flagged_by.begin(), kept.flagged_by.end(), flag) == kept.flagged_by.end())
          kept.flagged_by.push_back(flag);
      }
    }
  }
  for (Payload& p : out) std::sort(p.flagged_by.begin(), p.flagged_by.end());
  for (size_t i = 0; i < out.size(); ++i) out[i].id = i + 1;
  return out;
}

std::vector<ReviewEntry> cross_scanner_diff(const std::vector<CapturedRequest>& requests,
                                            const BaselineMap& baseline) {
  // Bucket requests by (path, sorted query parameter names).
  std::map<std::pair<std::string, std::string>, std::vector<const CapturedRequest*>> buckets;
  for (const CapturedRequest& req : requests) {
    std::vector<std::string> names;
    for (const QueryParam& p : req.query_params) names.push_back(p.name);
    std::sort(names.begin(), names.end());
    std::string shape;
    for (const std::string& n : names) {
      shape += n;
      shape += '\0';
    }
    buckets[{req.path, shape}].push_back(&req);
  }

  std::vector<ReviewEntry> out;
  std::set<std::tuple<std::string, std::string, std::string, std::string, std::string, std::string>>
      seen;
  for (const auto& [shape, reqs] : buckets) {
    for (size_t i = 0; i < reqs.size(); ++i) {
      for (size_t j = i + 1; j < reqs.size(); ++j) {
        const CapturedRequest& a = *reqs[i];
        const CapturedRequest& b = *reqs[j];
        if (a.scanner_id == b.scanner_id) continue;
        for (const QueryParam& pa : a.query_params) {
          const QueryParam* pb = nullptr;
          for (const QueryParam& candidate : b.query_params) {
            if (candidate.name == pa.name) {
              pb = &candidate;
              break;
            }
          }
          if (!pb) continue;
          auto base_it = baseline.find({a.path, pa.name});
          bool has_base = base_it != baseline.end();
          std::string base = has_base ? base_it->second : std::string();
          bool differs = pa.decoded_value != pb->decoded_value ||
                         (has_base && (pa.decoded_value != base || pb->decoded_value != base));
          if (!differs) continue;
          auto key = std::make_tuple(a.scanner_id, b.scanner_id, a.path, pa.name, pa.decoded_value,
                                     pb->decoded_value);
          if (!seen.insert(key).second) continue;
          ReviewEntry e;
          e.request_a = a.id;
          e.request_b = b.id;
          e.scanner_a = a.scanner_id;
          e.scanner_b = b.scanner_id;
          e.path = a.path;
          e.param = pa.name;
          e.value_a = pa.decoded_value;
          e.value_b = pb->decoded_value;
          e.baseline = base;
          out.push_back(std::move(e));
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const ReviewEntry& x, const ReviewEntry& y) {
    return std::tie(x.path, x.param, x.scanner_a, x.scanner_b, x.value_a, x.value_b) <
           std::tie(y.path, y.param, y.scanner_a, y.scanner_b, y.value_a, y.value_b);
  });
  return out;
}

std::string to_payload_jsonl_line(const Payload& p) {
  nlohmann::ordered_json j;
  j["id"] = p.id;
  j["value"] = p.value;
  j["raw_value"] = p.raw_value;
  j["request_id"] = p.request_id;
  j["entry_point"] = {{"kind", entry_point_kind_name(p.entry_point.kind)},
                      {"name", p.entry_point.name}};
  j["scanner_id"] = p.scanner_id;
  j["flagged_by"] = p.flagged_by;
  return j.dump();
}

Payload payload_from_jsonl_line(const std::string& line) {
  json j = json::parse(line);
  Payload p;
  p.id = j.at("id").get<uint64_t>();
  p.value = j.at("value").get<std::string>();
  p.raw_value = j.at("raw_value").get<std::string>();
  p.request_id = j.at("request_id").get<uint64_t>();
  p.entry_point.kind = entry_point_kind_from_name(j.at("entry_point").at("kind").get<std::string>());
  p.entry_point.name = j.at("entry_point").at("name").get<std::string>();
  p.scanner_id = j.at("scanner_id").get<std::string>();
  for (const auto& f : j.at("flagged_by")) p.flagged_by.push_back(f.get<std::string>());
  return p;
}

std::string to_review_jsonl_line(const ReviewEntry& e) {
  nlohmann::ordered_json j;
  j["request_a"] = e.request_a;
  j["request_b"] = e.request_b;
  j["scanner_a"] = e.scanner_a;
  j["scanner_b"] = e.scanner_b;
  j["path"] = e.path;
  j["param"] = e.param;
  j["value_a"] = e.value_a;
  j["value_b"] = e.value_b;
  j["baseline"] = e.baseline;
  return j.dump();
}

void write_payloads_jsonl(const std::string& path, const std::vector<Payload>& payloads) {
  std::ostringstream ss;
  for (const Payload& p : payloads) ss << to_payload_jsonl_line(p) << '\n';
  write_file(path, ss.str());
}

std::vector<Payload> read_payloads_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open payloads file: " + path);
  std::vector<Payload> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    out.push_back(payload_from_jsonl_line(line));
  }
  return out;
}

}  // namespace xsslab

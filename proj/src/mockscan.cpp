#include "xsslab/mockscan.hpp"

#include <cctype>
#include <stdexcept>

#include <httplib.h>
#include <json.hpp>

#include "xsslab/capture.hpp"
#include "xsslab/util.hpp"

namespace xsslab {

namespace {

using nlohmann::json;

struct SlotPiece {
  enum Kind { kLit, kNum, kStr, kSeq } kind = kLit;
  std::string text;   // kLit only
  size_t width = 0;   // kNum/kStr only
};

// Recognizes <NUMk>, <STRk>, <SEQ>; any other text (including other <...> runs)
// stays literal.
std::vector<SlotPiece> parse_corpus_entry(const std::string& entry) {
  std::vector<SlotPiece> pieces;
  std::string lit;
  size_t i = 0;
  auto flush_lit = [&]() {
    if (!lit.empty()) {
      pieces.push_back({SlotPiece::kLit, lit, 0});
      lit.clear();
    }
  };
  while (i < entry.size()) {
    if (entry[i] == '<') {
      auto try_slot = [&](const std::string& word, SlotPiece::Kind kind, bool sized) -> bool {
        if (entry.compare(i + 1, word.size(), word) != 0) return false;
        size_t p = i + 1 + word.size();
        size_t width = 0;
        if (sized) {
          size_t start = p;
          while (p < entry.size() && std::isdigit(static_cast<unsigned char>(entry[p]))) ++p;
          if (p == start) return false;
          width = std::stoull(entry.substr(start, p - start));
          if (width == 0 || width > 64) throw std::runtime_error("corpus slot width out of range");
        }
        if (p >= entry.size() || entry[p] != '>') return false;
        flush_lit();
        pieces.push_back({kind, "", width});
        i = p + 1;
        return true;
      };
      if (try_slot("NUM", SlotPiece::kNum, true)) continue;
      if (try_slot("STR", SlotPiece::kStr, true)) continue;
      if (try_slot("SEQ", SlotPiece::kSeq, false)) continue;
    }
    lit += entry[i++];
  }
  flush_lit();
  return pieces;
}

}  // namespace

ScannerProfile profile_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad profile JSON: ") + e.what());
  }
  ScannerProfile p;
  if (!j.is_object() || !j.contains("scanner_id") || !j.contains("corpus"))
    throw std::runtime_error("profile needs scanner_id and corpus");
  p.scanner_id = j.at("scanner_id").get<std::string>();
  for (const auto& entry : j.at("corpus")) p.corpus.push_back(entry.get<std::string>());
  p.signature_tag = j.value("signature_tag", std::string());
  p.detection = j.value("detection", std::string("reflection"));
  p.vuln_type = j.value("vuln_type", std::string("xss-reflected"));
  if (p.detection != "reflection" && p.detection != "reflection-ignore-retrofit")
    throw std::runtime_error("unknown detection mode: " + p.detection);
  for (const std::string& entry : p.corpus) {
    parse_corpus_entry(entry);  // validates slot syntax
    if (!p.signature_tag.empty() && entry.find(p.signature_tag) == std::string::npos)
      throw std::runtime_error("corpus entry lacks signature_tag: " + entry);
  }
  return p;
}

ScannerProfile load_profile(const std::string& path) {
  return profile_from_json(read_file(path));
}

std::string CorpusInstantiator::instantiate(const std::string& entry) {
  std::string out;
  for (const SlotPiece& piece : parse_corpus_entry(entry)) {
    switch (piece.kind) {
      case SlotPiece::kLit:
        out += piece.text;
        break;
      case SlotPiece::kNum:
        for (size_t k = 0; k < piece.width; ++k)
          out += static_cast<char>('0' + rng_() % 10);
        break;
      case SlotPiece::kStr:
        for (size_t k = 0; k < piece.width; ++k) {
          if (k == 0) {
            out += static_cast<char>('a' + rng_() % 26);
          } else {
            uint64_t v = rng_() % 36;
            out += static_cast<char>(v < 26 ? 'a' + v : '0' + (v - 26));
          }
        }
        break;
      case SlotPiece::kSeq: {
        std::string n = std::to_string(++seq_);
        out += std::string(n.size() < 6 ? 6 - n.size() : 0, '0') + n;
        break;
      }
    }
  }
  return out;
}

Template corpus_entry_template(const std::string& entry) {
  std::string rendered;
  for (const SlotPiece& piece : parse_corpus_entry(entry)) {
    switch (piece.kind) {
      case SlotPiece::kLit: rendered += piece.text; break;
      case SlotPiece::kNum:
      case SlotPiece::kSeq: rendered += kNumMarker; break;
      case SlotPiece::kStr: rendered += kStrMarker; break;
    }
  }
  return template_from_rendered(rendered);
}

MockScanResult run_scan(const ScannerProfile& profile, const std::string& base_url, uint64_t seed) {
  httplib::Client client(base_url);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(10, 0);
  auto cat_res = client.Get("/catalog.json");
  if (!cat_res || cat_res->status != 200)
    throw std::runtime_error("target unreachable: " + base_url);
  json catalog;
  try {
    catalog = json::parse(cat_res->body);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad catalog from target: ") + e.what());
  }

  CorpusInstantiator inst(seed);
  MockScanResult out;
  out.report.scanner_id = profile.scanner_id;

  double ts = 1700000000.0;
  auto log_request = [&](const std::string& route, const std::string& raw_q) {
    CapturedRequest r;
    r.ts = ts;
    ts += 0.001;
    r.scanner_id = profile.scanner_id;
    r.method = "GET";
    r.path = route;
    r.query_params.push_back({"q", raw_q, percent_decode(raw_q, true)});
    r.headers = {{"host", "testbed"}, {"user-agent", profile.scanner_id}};
    out.log_lines.push_back(to_request_log_line(r));
  };

  for (const auto& entry : catalog) {
    std::string route = entry.at("route").get<std::string>();
    std::string kind = entry.at("kind").get<std::string>();
    std::string baseline = entry.value("sample_input", std::string("sample"));

    std::string base_raw = percent_encode(baseline);
    client.Get(route + "?q=" + base_raw);
    log_request(route, base_raw);

    for (const std::string& corpus_entry : profile.corpus) {
      std::string payload = inst.instantiate(corpus_entry);
      std::string raw = percent_encode(payload);
      auto res = client.Get(route + "?q=" + raw);
      log_request(route, raw);
      out.payloads_sent.push_back(payload);
      if (!res || res->status != 200) continue;  // logged, skipped
      if (profile.detection == "reflection-ignore-retrofit" && kind == "retrofit") continue;
      if (res->body.find(payload) != std::string::npos) {
        out.report.findings.push_back({route + "?q=" + raw, "q", profile.vuln_type, payload});
      }
    }
  }
  return out;
}

}  // namespace xsslab

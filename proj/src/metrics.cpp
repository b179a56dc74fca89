#include "xsslab/metrics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "xsslab/util.hpp"

namespace xsslab {

using nlohmann::json;

namespace {

const std::regex& identifier_call_re() {
  static const std::regex re(
      R"(([A-Za-z_$][A-Za-z0-9_$]*(?:\.[A-Za-z_$][A-Za-z0-9_$]*)*)\()");
  return re;
}

bool text_has_encoding_artifacts(const std::string& text) {
  static const std::regex entity_re(R"(&#(?:x[0-9a-fA-F]+|[0-9]+);)");
  static const std::regex escape_re(R"(\\x[0-9a-fA-F]{2}|\\u[0-9a-fA-F]{4})");
  static const std::regex utf7_re(R"(\+A[A-Za-z0-9+/]{2,}-)");
  for (char c : text) {
    if (c == '\r' || c == '\n' || c == '\t' || c == '\0') return true;
  }
  if (std::regex_search(text.begin(), text.end(), entity_re)) return true;
  if (std::regex_search(text.begin(), text.end(), escape_re)) return true;
  if (std::regex_search(text.begin(), text.end(), utf7_re)) return true;
  return false;
}

}  // namespace

std::vector<EvasionRule> load_evasion_rules(const std::string& path) {
  std::vector<EvasionRule> rules;
  json j = json::parse(read_file(path));
  for (const auto& entry : j) {
    EvasionRule rule;
    rule.name = entry.at("name").get<std::string>();
    rule.pattern = entry.at("pattern").get<std::string>();
    rule.reference = entry.value("reference", std::string());
    try {
      rule.compiled = std::regex(rule.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw std::runtime_error("bad evasion rule '" + rule.name + "': " + e.what());
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::vector<std::string> load_builtins(const std::string& path) {
  std::vector<std::string> out;
  json j = json::parse(read_file(path));
  for (const auto& name : j) out.push_back(name.get<std::string>());
  return out;
}

std::vector<std::string> default_builtins() {
  return {"alert",          "prompt",      "confirm", "eval",
          "setTimeout",     "setInterval", "document.write", "document.writeln",
          "console.log",    "unescape",    "escape",  "String.fromCharCode",
          "Function",       "print"};
}

size_t m1_length(const Template& t) {
  size_t total = 0;
  for (const Token& tok : t.tokens) {
    if (tok.kind == TokenKind::kLit) total += tok.text.size();
  }
  return total;
}

size_t m2_distinct_chars(const Template& t) {
  std::set<char> chars;
  for (const Token& tok : t.tokens) {
    if (tok.kind == TokenKind::kLit) chars.insert(tok.text.begin(), tok.text.end());
  }
  return chars.size();
}

bool m3_custom_callbacks(const Template& t, const std::vector<std::string>& builtins) {
  for (const Token& tok : t.tokens) {
    if (tok.kind != TokenKind::kLit) continue;
    auto begin = std::sregex_iterator(tok.text.begin(), tok.text.end(), identifier_call_re());
    for (auto it = begin; it != std::sregex_iterator(); ++it) {
      std::string name = (*it)[1].str();
      if (std::find(builtins.begin(), builtins.end(), name) != builtins.end()) continue;
      size_t dot = name.rfind('.');
      std::string last = dot == std::string::npos ? name : name.substr(dot + 1);
      if (std::find(builtins.begin(), builtins.end(), last) != builtins.end()) continue;
      return true;
    }
  }
  return false;
}

bool m4_multiple_encodings(const Template& t) {
  for (const Token& tok : t.tokens) {
    if (tok.kind == TokenKind::kLit && text_has_encoding_artifacts(tok.text)) return true;
  }
  return false;
}

M5Result m5_evasion(const Template& t, const std::vector<EvasionRule>& rules) {
  M5Result result;
  for (const EvasionRule& rule : rules) {
    if (std::regex_search(t.rendered.begin(), t.rendered.end(), rule.compiled)) {
      ++result.count;
      result.rule_names.push_back(rule.name);
    }
  }
  return result;
}

M6Result m6_intra_cluster(const Template& t, const std::map<uint64_t, std::string>& payload_values) {
  std::vector<const std::string*> values;
  for (uint64_t id : t.members) {
    auto it = payload_values.find(id);
    if (it != payload_values.end()) values.push_back(&it->second);
  }
  M6Result result;
  if (values.size() < 2) return result;
  std::vector<double> distances;
  for (size_t i = 0; i < values.size(); ++i) {
    for (size_t j = i + 1; j < values.size(); ++j) {
      distances.push_back(static_cast<double>(levenshtein(*values[i], *values[j])));
    }
  }
  double sum = 0.0;
  for (double d : distances) sum += d;
  result.mean = sum / static_cast<double>(distances.size());
  double sq = 0.0;
  for (double d : distances) sq += (d - result.mean) * (d - result.mean);
  result.variance = sq / static_cast<double>(distances.size());
  return result;
}

TemplateMetrics evaluate_template(const Template& t, const std::vector<std::string>& builtins,
                                  const std::vector<EvasionRule>& rules,
                                  const std::map<uint64_t, std::string>& payload_values) {
  TemplateMetrics m;
  m.m1 = m1_length(t);
  m.m2 = m2_distinct_chars(t);
  m.m3 = m3_custom_callbacks(t, builtins);
  m.m4 = m4_multiple_encodings(t);
  m.m5 = m5_evasion(t, rules);
  m.m6 = m6_intra_cluster(t, payload_values);
  return m;
}

ScannerSummary summarize(const std::string& scanner_id, const std::vector<Template>& templates,
                         const std::vector<TemplateMetrics>& metrics) {
  ScannerSummary s;
  s.scanner_id = scanner_id;
  s.template_count = templates.size();
  bool any_m2 = false;
  bool any_m4 = false;
  bool any_m5 = false;
  double m1_sum = 0.0;
  for (size_t i = 0; i < metrics.size(); ++i) {
    const TemplateMetrics& m = metrics[i];
    any_m2 = any_m2 || m.m2 > 0;
    any_m4 = any_m4 || m.m4;
    any_m5 = any_m5 || m.m5.count >= 1;
    s.uses_callbacks = s.uses_callbacks || m.m3;
    m1_sum += static_cast<double>(m.m1);
  }
  for (const Template& t : templates) s.payload_count += t.members.size();
  s.uses_mutations = any_m4;
  s.uses_filter_evasion = any_m2 && any_m4 && any_m5;
  s.mean_m1 = metrics.empty() ? 0.0 : m1_sum / static_cast<double>(metrics.size());
  return s;
}

}  // namespace xsslab

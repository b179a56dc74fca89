#pragma once

#include <cstdint>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include "xsslab/templating.hpp"

namespace xsslab {

/** One filter-evasion detection rule (substring/structure regex over rendered templates). */
struct EvasionRule {
  std::string name;
  std::string pattern;
  std::string reference;
  std::regex compiled;
};

/** Loads a rules JSON array [{name, pattern, reference}]; throws on bad regexes. */
std::vector<EvasionRule> load_evasion_rules(const std::string& path);

/** Loads the known-callback list (JSON array of names, dotted names allowed). */
std::vector<std::string> load_builtins(const std::string& path);

/** Fallback callback list used when no file is supplied. */
std::vector<std::string> default_builtins();

/** M1: total number of literal characters (placeholders count zero). */
size_t m1_length(const Template& t);

/** M2: number of distinct characters across literal runs. */
size_t m2_distinct_chars(const Template& t);

/** M3: true iff a literal run calls an identifier outside the builtin list. */
bool m3_custom_callbacks(const Template& t, const std::vector<std::string>& builtins);

/** M4: true iff literal runs carry entities, escape spellings, raw control bytes, or UTF-7 shifts. */
bool m4_multiple_encodings(const Template& t);

struct M5Result {
  size_t count = 0;
  std::vector<std::string> rule_names;
};

/** M5: distinct evasion rules matching the rendered template. */
M5Result m5_evasion(const Template& t, const std::vector<EvasionRule>& rules);

struct M6Result {
  double mean = 0.0;
  double variance = 0.0;  // population variance
};

/** M6: mean/variance of pairwise edit distance across member payloads; (0,0) for singletons. */
M6Result m6_intra_cluster(const Template& t, const std::map<uint64_t, std::string>& payload_values);

struct TemplateMetrics {
  size_t m1 = 0;
  size_t m2 = 0;
  bool m3 = false;
  bool m4 = false;
  M5Result m5;
  M6Result m6;
};

TemplateMetrics evaluate_template(const Template& t, const std::vector<std::string>& builtins,
                                  const std::vector<EvasionRule>& rules,
                                  const std::map<uint64_t, std::string>& payload_values);

/** Behavioral profile of one scanner derived from its template metrics. */
struct ScannerSummary {
  std::string scanner_id;
  bool uses_mutations = false;       // any template with M4
  bool uses_callbacks = false;       // any template with M3
  bool uses_filter_evasion = false;  // some M2 > 0, some M4, and some M5 >= 1
  size_t template_count = 0;
  size_t payload_count = 0;
  double mean_m1 = 0.0;
};

ScannerSummary summarize(const std::string& scanner_id, const std::vector<Template>& templates,
                         const std::vector<TemplateMetrics>& metrics);

}  // namespace xsslab

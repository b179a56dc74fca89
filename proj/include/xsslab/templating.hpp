#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace xsslab {

enum class TokenKind { kLit, kStr, kNum };

/** One template token. text is non-empty iff kind == kLit. */
struct Token {
  TokenKind kind = TokenKind::kLit;
  std::string text;

  bool operator==(const Token&) const = default;
};

/** Placeholder spellings used in rendered template forms. */
inline constexpr const char* kStrMarker = "_STR_";
inline constexpr const char* kNumMarker = "_NUM_";

/**
 * A payload template: literal runs interleaved with STR/NUM placeholders.
 * The rendered form uniquely identifies the token list.
 */
struct Template {
  std::vector<Token> tokens;
  std::string rendered;
  std::vector<uint64_t> members;  // payload ids, ascending
  int generation = 0;             // recursion round that produced it; 0 = never merged
};

struct TemplatingParams {
  double lev_threshold = 20.0;
  double min_block_len = 3.0;
  double oblivion = 0.9;       // per-round threshold decay factor, in (0, 1]
  int max_rounds = 12;
  bool decay_block_len = true;
};

/** Named parameter presets; throws std::out_of_range on unknown names. */
TemplatingParams preset(const std::string& name);
std::vector<std::string> preset_names();

/** Classic edit distance (insert/delete/substitute, unit costs). */
size_t levenshtein(const std::string& a, const std::string& b);

/** A common contiguous run: a[a_start .. a_start+len) == b[b_start .. b_start+len). */
struct MatchingBlock {
  size_t a_start = 0;
  size_t b_start = 0;
  size_t len = 0;

  bool operator==(const MatchingBlock&) const = default;
};

/**
 * Recursive longest-common-contiguous-substring decomposition. Ties on length are
 * broken by earliest start in a, then in b. Blocks are non-overlapping and ordered
 * in both strings.
 */
std::vector<MatchingBlock> matching_blocks(const std::string& a, const std::string& b);

/** Concatenation of token texts with placeholders spelled _STR_ / _NUM_. */
std::string render(const std::vector<Token>& tokens);

/** Inverse of render: extracts placeholder markers and normalizes adjacency. */
std::vector<Token> parse_rendered(const std::string& rendered);

/** Wraps a single payload as the template it trivially is (one LIT run, or empty). */
Template singleton_template(const std::string& value);

/** Builds a template from its rendered form (markers become placeholders). */
Template template_from_rendered(const std::string& rendered);

/**
 * Merges two strings into a template: matching blocks at least min_block_len long
 * become LIT runs, gaps become NUM (both gap strings digit-only, at most one empty)
 * or STR (both non-empty). Returns nothing when the distance exceeds lev_threshold,
 * no block survives, or a gap pair fits neither placeholder kind.
 */
std::optional<Template> merge_pair(const std::string& a, const std::string& b,
                                   const TemplatingParams& p);

/**
 * True iff payload can be segmented so LIT runs occur in order and each placeholder
 * gap satisfies its kind (NUM: a possibly empty digit run; STR: any non-empty run).
 */
bool match(const Template& t, const std::string& payload);

struct ClusterInput {
  uint64_t id = 0;
  std::string value;
};

/**
 * Clusters payloads into templates. Each round canonically sorts the working set,
 * greedily merges pairs, unions identical rendered forms, then feeds rendered forms
 * into the next round with thresholds scaled by the oblivion factor. Stops when a
 * round yields no new rendered form or max_rounds is hit. Output is sorted by
 * descending member count, then rendered form.
 */
std::vector<Template> cluster(const std::vector<ClusterInput>& payloads,
                              const TemplatingParams& p);

/** cluster() over bare strings; ids are assigned by position (0-based). */
std::vector<Template> cluster_strings(const std::vector<std::string>& payloads,
                                      const TemplatingParams& p);

}  // namespace xsslab

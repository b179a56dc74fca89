#include "xsslab/templating.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "xsslab/util.hpp"

namespace xsslab {

namespace {

const std::map<std::string, TemplatingParams>& preset_table() {
  static const std::map<std::string, TemplatingParams> table = {
      {"default", {20.0, 3.0, 0.9, 12, true}},
      {"lev20-ob09", {20.0, 3.0, 0.9, 12, true}},
      {"lev15-ob05", {15.0, 3.0, 0.5, 12, true}},
      {"lev15-ob08", {15.0, 3.0, 0.8, 12, true}},
      {"lev15-ob09", {15.0, 3.0, 0.9, 12, true}},
  };
  return table;
}

std::vector<Token> normalize_tokens(std::vector<Token> tokens) {
  std::vector<Token> out;
  for (auto& tok : tokens) {
    if (tok.kind == TokenKind::kLit && tok.text.empty()) continue;
    if (!out.empty() && out.back().kind == tok.kind) {
      if (tok.kind == TokenKind::kLit) {
        out.back().text += tok.text;
        continue;
      }
      continue;  // adjacent placeholders of the same kind collapse
    }
    out.push_back(std::move(tok));
  }
  return out;
}

void find_longest_block(const std::string& a, size_t alo, size_t ahi, const std::string& b,
                        size_t blo, size_t bhi, MatchingBlock& best) {
  best = MatchingBlock{alo, blo, 0};
  if (alo >= ahi || blo >= bhi) return;
  std::vector<size_t> prev(bhi - blo + 1, 0);
  std::vector<size_t> cur(bhi - blo + 1, 0);
  for (size_t i = alo; i < ahi; ++i) {
    for (size_t j = blo; j < bhi; ++j) {
      size_t jj = j - blo + 1;
      if (a[i] != b[j]) {
        cur[jj] = 0;
        continue;
      }
      cur[jj] = prev[jj - 1] + 1;
      size_t len = cur[jj];
      size_t a_start = i + 1 - len;
      size_t b_start = j + 1 - len;
      if (len > best.len ||
          (len == best.len && (a_start < best.a_start ||
                               (a_start == best.a_start && b_start < best.b_start)))) {
        best = MatchingBlock{a_start, b_start, len};
      }
    }
    std::swap(prev, cur);
  }
}

void blocks_rec(const std::string& a, size_t alo, size_t ahi, const std::string& b, size_t blo,
                size_t bhi, std::vector<MatchingBlock>& out) {
  MatchingBlock block;
  find_longest_block(a, alo, ahi, b, blo, bhi, block);
  if (block.len == 0) return;
  blocks_rec(a, alo, block.a_start, b, blo, block.b_start, out);
  out.push_back(block);
  blocks_rec(a, block.a_start + block.len, ahi, b, block.b_start + block.len, bhi, out);
}

// Builds the rendered merge of a and b under the given thresholds, or nothing when
// no block survives or some gap pair fits neither placeholder kind.
std::optional<std::string> merge_rendered(const std::string& a, const std::string& b,
                                          double min_block_len) {
  std::vector<MatchingBlock> blocks;
  for (const MatchingBlock& blk : matching_blocks(a, b)) {
    if (static_cast<double>(blk.len) + 1e-9 >= min_block_len) blocks.push_back(blk);
  }
  if (blocks.empty()) return std::nullopt;

  std::string rendered;
  size_t a_pos = 0;
  size_t b_pos = 0;
  auto emit_gap = [&](const std::string& ga, const std::string& gb) -> bool {
    if (ga.empty() && gb.empty()) return true;
    if (is_digits(ga) && is_digits(gb)) {
      rendered += kNumMarker;
      return true;
    }
    if (!ga.empty() && !gb.empty()) {
      rendered += kStrMarker;
      return true;
    }
    return false;  // one side empty, the other non-digit: no placeholder kind fits
  };
  for (const MatchingBlock& blk : blocks) {
    if (!emit_gap(a.substr(a_pos, blk.a_start - a_pos), b.substr(b_pos, blk.b_start - b_pos)))
      return std::nullopt;
    rendered.append(a, blk.a_start, blk.len);
    a_pos = blk.a_start + blk.len;
    b_pos = blk.b_start + blk.len;
  }
  if (!emit_gap(a.substr(a_pos), b.substr(b_pos))) return std::nullopt;
  return rendered;
}

bool match_rec(const std::vector<Token>& tokens, size_t ti, const std::string& payload, size_t pos,
               std::vector<std::vector<char>>& memo) {
  char& slot = memo[ti][pos];
  if (slot != 0) return slot == 1;
  bool ok = false;
  if (ti == tokens.size()) {
    ok = pos == payload.size();
  } else {
    const Token& tok = tokens[ti];
    switch (tok.kind) {
      case TokenKind::kLit:
        ok = payload.compare(pos, tok.text.size(), tok.text) == 0 &&
             match_rec(tokens, ti + 1, payload, pos + tok.text.size(), memo);
        break;
      case TokenKind::kNum: {
        size_t len = 0;
        while (true) {
          if (match_rec(tokens, ti + 1, payload, pos + len, memo)) {
            ok = true;
            break;
          }
          if (pos + len >= payload.size() || !std::isdigit(static_cast<unsigned char>(payload[pos + len])))
            break;
          ++len;
        }
        break;
      }
      case TokenKind::kStr: {
        for (size_t len = 1; pos + len <= payload.size(); ++len) {
          if (match_rec(tokens, ti + 1, payload, pos + len, memo)) {
            ok = true;
            break;
          }
        }
        break;
      }
    }
  }
  slot = ok ? 1 : 2;
  return ok;
}

// Working cluster entry: a rendered form, its tokens, and everything folded into it.
struct Working {
  std::string rendered;
  std::vector<Token> tokens;
  std::set<uint64_t> members;
  std::set<const std::string*> member_values;  // distinct original payload strings
  int generation = 0;
};

bool template_covers(const Template& t, const std::set<const std::string*>& values) {
  return std::all_of(values.begin(), values.end(),
                     [&](const std::string* v) { return match(t, *v); });
}

}  // namespace

TemplatingParams preset(const std::string& name) { return preset_table().at(name); }

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, params] : preset_table()) names.push_back(name);
  return names;
}

size_t levenshtein(const std::string& a, const std::string& b) {
  if (a.size() < b.size()) return levenshtein(b, a);
  std::vector<size_t> costs(b.size() + 1);
  std::iota(costs.begin(), costs.end(), 0);
  for (size_t i = 0; i < a.size(); ++i) {
    size_t corner = costs[0];
    costs[0] = i + 1;
    for (size_t j = 0; j < b.size(); ++j) {
      size_t upper = costs[j + 1];
      costs[j + 1] = a[i] == b[j] ? corner : 1 + std::min({corner, upper, costs[j]});
      corner = upper;
    }
  }
  return costs[b.size()];
}

std::vector<MatchingBlock> matching_blocks(const std::string& a, const std::string& b) {
  std::vector<MatchingBlock> out;
  blocks_rec(a, 0, a.size(), b, 0, b.size(), out);
  return out;
}

std::string render(const std::vector<Token>& tokens) {
  std::string out;
  for (const Token& tok : tokens) {
    switch (tok.kind) {
      case TokenKind::kLit: out += tok.text; break;
      case TokenKind::kStr: out += kStrMarker; break;
      case TokenKind::kNum: out += kNumMarker; break;
    }
  }
  return out;
}

std::vector<Token> parse_rendered(const std::string& rendered) {
  std::vector<Token> tokens;
  size_t pos = 0;
  while (pos < rendered.size()) {
    size_t str_at = rendered.find(kStrMarker, pos);
    size_t num_at = rendered.find(kNumMarker, pos);
    size_t next = std::min(str_at, num_at);
    if (next == std::string::npos) {
      tokens.push_back({TokenKind::kLit, rendered.substr(pos)});
      break;
    }
    if (next > pos) tokens.push_back({TokenKind::kLit, rendered.substr(pos, next - pos)});
    tokens.push_back({next == str_at ? TokenKind::kStr : TokenKind::kNum, {}});
    pos = next + 5;
  }
  return normalize_tokens(std::move(tokens));
}

Template singleton_template(const std::string& value) {
  Template t;
  if (!value.empty()) t.tokens.push_back({TokenKind::kLit, value});
  t.rendered = value;
  return t;
}

Template template_from_rendered(const std::string& rendered) {
  Template t;
  t.tokens = parse_rendered(rendered);
  t.rendered = render(t.tokens);
  return t;
}

std::optional<Template> merge_pair(const std::string& a, const std::string& b,
                                   const TemplatingParams& p) {
  if (levenshtein(a, b) > p.lev_threshold) return std::nullopt;
  std::optional<std::string> rendered = merge_rendered(a, b, p.min_block_len);
  if (!rendered) return std::nullopt;
  Template t = template_from_rendered(*rendered);
  t.generation = 1;
  return t;
}

bool match(const Template& t, const std::string& payload) {
  std::vector<std::vector<char>> memo(t.tokens.size() + 1,
                                      std::vector<char>(payload.size() + 1, 0));
  return match_rec(t.tokens, 0, payload, 0, memo);
}

std::vector<Template> cluster(const std::vector<ClusterInput>& payloads,
                              const TemplatingParams& p) {
  // Distinct strings form the working set; duplicate values share one entry.
  std::map<std::string, std::set<uint64_t>> by_value;
  for (const ClusterInput& in : payloads) by_value[in.value].insert(in.id);

  std::vector<Working> working;
  for (const auto& [value, ids] : by_value) {
    Working w;
    w.rendered = value;
    w.tokens = singleton_template(value).tokens;
    w.members = ids;
    w.member_values.insert(&by_value.find(value)->first);
    working.push_back(std::move(w));
  }

  double lev_t = p.lev_threshold;
  double block_t = p.min_block_len;
  for (int round = 1; round <= p.max_rounds && working.size() > 1; ++round) {
    std::sort(working.begin(), working.end(),
              [](const Working& x, const Working& y) { return x.rendered < y.rendered; });
    std::set<std::string> input_forms;
    for (const Working& w : working) input_forms.insert(w.rendered);

    std::vector<Working> produced;
    std::vector<bool> consumed(working.size(), false);
    for (size_t i = 0; i < working.size(); ++i) {
      if (consumed[i]) continue;
      bool merged = false;
      for (size_t j = i + 1; j < working.size(); ++j) {
        if (consumed[j]) continue;
        const std::string& ra = working[i].rendered;
        const std::string& rb = working[j].rendered;
        double len_gap = ra.size() > rb.size() ? static_cast<double>(ra.size() - rb.size())
                                               : static_cast<double>(rb.size() - ra.size());
        if (len_gap > lev_t) continue;
        if (static_cast<double>(levenshtein(ra, rb)) > lev_t) continue;
        std::optional<std::string> merged_form = merge_rendered(ra, rb, block_t);
        if (!merged_form) continue;
        Template probe = template_from_rendered(*merged_form);
        std::set<const std::string*> values = working[i].member_values;
        values.insert(working[j].member_values.begin(), working[j].member_values.end());
        if (!template_covers(probe, values)) continue;

        Working w;
        w.rendered = probe.rendered;
        w.tokens = probe.tokens;
        w.members = working[i].members;
        w.members.insert(working[j].members.begin(), working[j].members.end());
        w.member_values = std::move(values);
        w.generation = round;
        produced.push_back(std::move(w));
        consumed[i] = consumed[j] = true;
        merged = true;
        break;
      }
      if (!merged) produced.push_back(working[i]);
    }

    // Identical rendered forms denote one template: union their members.
    std::map<std::string, Working> coalesced;
    for (Working& w : produced) {
      auto [it, inserted] = coalesced.try_emplace(w.rendered, w);
      if (!inserted) {
        it->second.members.insert(w.members.begin(), w.members.end());
        it->second.member_values.insert(w.member_values.begin(), w.member_values.end());
        it->second.generation = std::min(it->second.generation, w.generation);
      }
    }
    bool new_form = false;
    working.clear();
    for (auto& [form, w] : coalesced) {
      if (!input_forms.count(form)) new_form = true;
      working.push_back(std::move(w));
    }
    if (!new_form) break;
    lev_t = std::max(1.0, lev_t * p.oblivion);
    if (p.decay_block_len) block_t = std::max(1.0, block_t * p.oblivion);
  }

  std::vector<Template> out;
  for (Working& w : working) {
    Template t;
    t.tokens = std::move(w.tokens);
    t.rendered = std::move(w.rendered);
    t.members.assign(w.members.begin(), w.members.end());
    t.generation = w.generation;
    out.push_back(std::move(t));
  }
  std::sort(out.begin(), out.end(), [](const Template& x, const Template& y) {
    if (x.members.size() != y.members.size()) return x.members.size() > y.members.size();
    return x.rendered < y.rendered;
  });
  return out;
}

std::vector<Template> cluster_strings(const std::vector<std::string>& payloads,
                                      const TemplatingParams& p) {
  std::vector<ClusterInput> inputs;
  inputs.reserve(payloads.size());
  for (size_t i = 0; i < payloads.size(); ++i) inputs.push_back({i, payloads[i]});
  return cluster(inputs, p);
}

}  // namespace xsslab

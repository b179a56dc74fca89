#include "xsslab/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xsslab/capture.hpp"
#include "xsslab/correlate.hpp"
#include "xsslab/extract.hpp"
#include "xsslab/metrics.hpp"
#include "xsslab/mockscan.hpp"
#include "xsslab/testbed.hpp"
#include "xsslab/util.hpp"

namespace xsslab {

namespace {

using nlohmann::ordered_json;

std::string token_kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::kLit: return "lit";
    case TokenKind::kStr: return "str";
    case TokenKind::kNum: return "num";
  }
  return "lit";
}

TokenKind token_kind_from_name(const std::string& name) {
  if (name == "str") return TokenKind::kStr;
  if (name == "num") return TokenKind::kNum;
  if (name == "lit") return TokenKind::kLit;
  throw std::runtime_error("unknown token kind: " + name);
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

/** "-" means stdout. */
void emit_output(const std::string& target, const std::string& content) {
  if (target == "-" || target.empty()) {
    std::cout << content;
    return;
  }
  write_file(target, content);
}

struct IngestedTraffic {
  std::vector<CapturedRequest> requests;
  IngestDiagnostics diag;
};

IngestedTraffic ingest_sources(const std::vector<std::string>& logs,
                               const std::vector<std::string>& pcaps) {
  Ingestor ingestor;
  IngestedTraffic out;
  for (const std::string& path : logs) {
    CaptureSource src{CaptureSource::Kind::kRequestLog, path, stem_of(path)};
    auto batch = ingestor.ingest(src);
    out.requests.insert(out.requests.end(), batch.begin(), batch.end());
  }
  for (const std::string& path : pcaps) {
    CaptureSource src{CaptureSource::Kind::kPcap, path, stem_of(path)};
    auto batch = ingestor.ingest(src);
    out.requests.insert(out.requests.end(), batch.begin(), batch.end());
  }
  out.diag = ingestor.diagnostics();
  return out;
}

void report_diag(const IngestDiagnostics& diag) {
  if (diag.total() == 0) return;
  std::cerr << "ingest diagnostics: " << diag.malformed_requests << " malformed requests, "
            << diag.malformed_log_lines << " malformed log lines, " << diag.truncated_packets
            << " truncated packets, " << diag.skipped_packets << " skipped packets, "
            << diag.content_encoding_flagged << " content-encoding flagged\n";
}

/** Preset, then key=value overrides from --params (lev=, block=, oblivion=, rounds=). */
TemplatingParams make_params(const std::string& preset_name, const std::string& overrides) {
  TemplatingParams p;
  try {
    p = preset(preset_name.empty() ? "default" : preset_name);
  } catch (const std::out_of_range&) {
    throw CLI::ValidationError("--preset", "unknown preset: " + preset_name);
  }
  if (overrides.empty()) return p;
  for (const std::string& piece : split(overrides, ',')) {
    size_t eq = piece.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--params", "expected key=value, got: " + piece);
    std::string key = trim(piece.substr(0, eq));
    std::string value = trim(piece.substr(eq + 1));
    try {
      if (key == "lev") p.lev_threshold = std::stod(value);
      else if (key == "block") p.min_block_len = std::stod(value);
      else if (key == "oblivion") p.oblivion = std::stod(value);
      else if (key == "rounds") p.max_rounds = std::stoi(value);
      else if (key == "decay_block") p.decay_block_len = value == "1" || value == "true";
      else throw CLI::ValidationError("--params", "unknown key: " + key);
    } catch (const std::invalid_argument&) {
      throw CLI::ValidationError("--params", "bad value for " + key + ": " + value);
    }
  }
  if (p.lev_threshold <= 0 || p.min_block_len <= 0 || p.oblivion <= 0 || p.oblivion > 1 ||
      p.max_rounds < 1)
    throw CLI::ValidationError("--params", "parameters out of range");
  return p;
}

std::vector<Payload> analysis_payloads(const std::vector<Payload>& payloads, bool include_path) {
  std::vector<Payload> out;
  for (const Payload& p : payloads) {
    if (include_path || p.entry_point.kind != EntryPointKind::kPath) out.push_back(p);
  }
  return out;
}

std::vector<std::string> scanner_order(const std::vector<Payload>& payloads) {
  std::set<std::string> ids;
  for (const Payload& p : payloads) ids.insert(p.scanner_id);
  return {ids.begin(), ids.end()};
}

// ---- extract ----

struct ExtractOptions {
  std::vector<std::string> logs;
  std::vector<std::string> pcaps;
  std::string signatures;
  std::string baseline;
};

std::vector<Payload> do_extract(const IngestedTraffic& traffic, const ExtractOptions& opt) {
  SignatureSet sigs;
  if (!opt.signatures.empty()) sigs = load_signatures(opt.signatures);
  BaselineMap base;
  if (!opt.baseline.empty()) base = load_baseline(opt.baseline);
  return extract_all(traffic.requests, sigs, base);
}

std::string payloads_to_jsonl(const std::vector<Payload>& payloads) {
  std::string out;
  for (const Payload& p : payloads) out += to_payload_jsonl_line(p) + "\n";
  return out;
}

// ---- template ----

std::vector<TemplateRecord> do_template(const std::vector<Payload>& payloads,
                                        const TemplatingParams& params) {
  std::vector<TemplateRecord> records;
  for (const std::string& scanner : scanner_order(payloads)) {
    std::vector<ClusterInput> inputs;
    for (const Payload& p : payloads) {
      if (p.scanner_id == scanner) inputs.push_back({p.id, p.value});
    }
    for (Template& t : cluster(inputs, params)) records.push_back({scanner, std::move(t)});
  }
  return records;
}

std::string records_to_jsonl(const std::vector<TemplateRecord>& records) {
  std::string out;
  for (const TemplateRecord& r : records) out += template_record_to_jsonl(r) + "\n";
  return out;
}

std::vector<TemplateRecord> records_from_file(const std::string& path) {
  std::vector<TemplateRecord> records;
  for (const std::string& line : split(read_file(path), '\n')) {
    if (trim(line).empty()) continue;
    records.push_back(template_record_from_jsonl(line));
  }
  return records;
}

// ---- evaluate ----

struct EvalRow {
  std::string scanner_id;
  ScannerSummary summary;
};

struct EvalOutput {
  std::string metrics_json;
  std::vector<EvalRow> rows;
};

EvalOutput do_evaluate(const std::vector<TemplateRecord>& records,
                       const std::vector<Payload>& payloads, const std::string& rules_path,
                       const std::string& builtins_path) {
  std::vector<EvasionRule> rules;
  if (!rules_path.empty()) rules = load_evasion_rules(rules_path);
  std::vector<std::string> builtins =
      builtins_path.empty() ? default_builtins() : load_builtins(builtins_path);
  std::map<uint64_t, std::string> values;
  for (const Payload& p : payloads) values[p.id] = p.value;

  std::vector<std::string> scanners;
  for (const TemplateRecord& r : records) {
    if (scanners.empty() || scanners.back() != r.scanner_id) {
      if (std::find(scanners.begin(), scanners.end(), r.scanner_id) == scanners.end())
        scanners.push_back(r.scanner_id);
    }
  }
  std::sort(scanners.begin(), scanners.end());

  EvalOutput out;
  ordered_json doc;
  doc["scanners"] = ordered_json::array();
  for (const std::string& scanner : scanners) {
    std::vector<Template> templates;
    for (const TemplateRecord& r : records) {
      if (r.scanner_id == scanner) templates.push_back(r.tmpl);
    }
    std::vector<TemplateMetrics> metrics;
    ordered_json jtemplates = ordered_json::array();
    for (const Template& t : templates) {
      TemplateMetrics m = evaluate_template(t, builtins, rules, values);
      ordered_json jt;
      jt["rendered"] = t.rendered;
      jt["member_count"] = t.members.size();
      jt["m1"] = m.m1;
      jt["m2"] = m.m2;
      jt["m3"] = m.m3;
      jt["m4"] = m.m4;
      jt["m5"] = {{"count", m.m5.count}, {"rules", m.m5.rule_names}};
      jt["m6"] = {{"mean", m.m6.mean}, {"variance", m.m6.variance}};
      jtemplates.push_back(std::move(jt));
      metrics.push_back(std::move(m));
    }
    ScannerSummary summary = summarize(scanner, templates, metrics);
    ordered_json js;
    js["scanner_id"] = scanner;
    js["summary"] = {{"uses_mutations", summary.uses_mutations},
                     {"uses_callbacks", summary.uses_callbacks},
                     {"uses_filter_evasion", summary.uses_filter_evasion},
                     {"template_count", summary.template_count},
                     {"payload_count", summary.payload_count},
                     {"mean_m1", summary.mean_m1}};
    js["templates"] = std::move(jtemplates);
    doc["scanners"].push_back(std::move(js));
    out.rows.push_back({scanner, summary});
  }
  out.metrics_json = doc.dump(2) + "\n";
  return out;
}

std::string eval_table_text(const std::vector<EvalRow>& rows) {
  std::ostringstream os;
  size_t name_w = 12;
  for (const EvalRow& r : rows) name_w = std::max(name_w, r.scanner_id.size() + 2);
  os << std::left << std::setw(static_cast<int>(name_w)) << "scanner" << std::right
     << std::setw(9) << "payloads" << std::setw(10) << "templates" << std::setw(9) << "mean_m1"
     << std::setw(10) << "mutations" << std::setw(10) << "callbacks" << std::setw(8) << "evasion"
     << "\n";
  for (const EvalRow& r : rows) {
    os << std::left << std::setw(static_cast<int>(name_w)) << r.scanner_id << std::right
       << std::setw(9) << r.summary.payload_count << std::setw(10) << r.summary.template_count
       << std::setw(9) << format_double(r.summary.mean_m1) << std::setw(10)
       << (r.summary.uses_mutations ? "yes" : "no") << std::setw(10)
       << (r.summary.uses_callbacks ? "yes" : "no") << std::setw(8)
       << (r.summary.uses_filter_evasion ? "yes" : "no") << "\n";
  }
  return os.str();
}

std::string eval_table_csv(const std::vector<EvalRow>& rows) {
  std::string out =
      "scanner_id,payloads,templates,mean_m1,uses_mutations,uses_callbacks,uses_filter_evasion\n";
  for (const EvalRow& r : rows) {
    out += r.scanner_id + "," + std::to_string(r.summary.payload_count) + "," +
           std::to_string(r.summary.template_count) + "," + format_double(r.summary.mean_m1) +
           "," + (r.summary.uses_mutations ? "1" : "0") + "," +
           (r.summary.uses_callbacks ? "1" : "0") + "," +
           (r.summary.uses_filter_evasion ? "1" : "0") + "\n";
  }
  return out;
}

// ---- correlate ----

struct DetectionRow {
  std::string scanner_id;
  size_t positives = 0;
  size_t negatives = 0;
};

std::vector<DetectionRow> detection_rows(const std::vector<ClassifiedPayload>& classified) {
  std::map<std::string, DetectionRow> by_scanner;
  for (const ClassifiedPayload& c : classified) {
    DetectionRow& row = by_scanner[c.payload.scanner_id];
    row.scanner_id = c.payload.scanner_id;
    if (c.positive) ++row.positives; else ++row.negatives;
  }
  std::vector<DetectionRow> rows;
  for (auto& [_, row] : by_scanner) rows.push_back(row);
  return rows;
}

std::string detection_table_text(const std::vector<DetectionRow>& rows) {
  std::ostringstream os;
  size_t name_w = 12;
  for (const DetectionRow& r : rows) name_w = std::max(name_w, r.scanner_id.size() + 2);
  os << std::left << std::setw(static_cast<int>(name_w)) << "scanner" << std::right
     << std::setw(10) << "detected" << std::setw(13) << "not-detected" << "\n";
  for (const DetectionRow& r : rows) {
    os << std::left << std::setw(static_cast<int>(name_w)) << r.scanner_id << std::right
       << std::setw(10) << r.positives << std::setw(13) << r.negatives << "\n";
  }
  return os.str();
}

std::string detection_table_csv(const std::vector<DetectionRow>& rows) {
  std::string out = "scanner_id,detected,not_detected\n";
  for (const DetectionRow& r : rows) {
    out += r.scanner_id + "," + std::to_string(r.positives) + "," +
           std::to_string(r.negatives) + "\n";
  }
  return out;
}

struct CorrOutput {
  std::string classified_jsonl;
  std::string negatives_jsonl;
  std::vector<DetectionRow> rows;
  std::vector<std::string> diagnostics;
};

CorrOutput do_correlate(const std::vector<Payload>& payloads,
                        const std::vector<NormalizedReport>& reports,
                        const std::vector<CapturedRequest>& requests,
                        const TemplatingParams& params, const std::string& annotations_path) {
  CorrelationResult result = correlate(payloads, reports, requests, params);
  if (!annotations_path.empty()) {
    auto annotations = load_annotations(annotations_path);
    TriageOutcome outcome = apply_triage(result.classified, annotations, requests);
    for (const std::string& note : outcome.rejected)
      result.diagnostics.push_back("triage rejected: " + note);
  }
  CorrOutput out;
  for (const ClassifiedPayload& c : result.classified)
    out.classified_jsonl += to_classified_jsonl_line(c) + "\n";
  for (const Template& t : dedup_negatives(result.classified, params))
    out.negatives_jsonl += template_record_to_jsonl({"", t}) + "\n";
  out.rows = detection_rows(result.classified);
  out.diagnostics = std::move(result.diagnostics);
  return out;
}

std::vector<NormalizedReport> load_reports(const std::vector<std::string>& paths) {
  std::vector<NormalizedReport> reports;
  for (const std::string& path : paths) reports.push_back(load_report(path));
  return reports;
}

std::pair<std::string, int> parse_bind(const std::string& bind) {
  size_t colon = bind.rfind(':');
  if (colon == std::string::npos) return {bind, 8710};
  return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
}

}  // namespace

std::string template_record_to_jsonl(const TemplateRecord& r) {
  ordered_json j;
  if (!r.scanner_id.empty()) j["scanner_id"] = r.scanner_id;
  j["rendered"] = r.tmpl.rendered;
  ordered_json tokens = ordered_json::array();
  for (const Token& t : r.tmpl.tokens)
    tokens.push_back(ordered_json::array({token_kind_name(t.kind), t.text}));
  j["tokens"] = tokens;
  j["members"] = r.tmpl.members;
  j["member_count"] = r.tmpl.members.size();
  j["generation"] = r.tmpl.generation;
  return j.dump();
}

TemplateRecord template_record_from_jsonl(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line);
  TemplateRecord r;
  r.scanner_id = j.value("scanner_id", std::string());
  r.tmpl.rendered = j.at("rendered").get<std::string>();
  for (const auto& t : j.at("tokens")) {
    if (!t.is_array() || t.size() != 2) throw std::runtime_error("bad template token");
    r.tmpl.tokens.push_back({token_kind_from_name(t[0].get<std::string>()),
                             t[1].get<std::string>()});
  }
  for (const auto& m : j.at("members")) r.tmpl.members.push_back(m.get<uint64_t>());
  r.tmpl.generation = j.value("generation", 0);
  return r;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"XSS payload extraction, templating, and scanner-evaluation toolkit"};
  app.require_subcommand(1);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the vulnerable testbed HTTP service");
  std::string bind = "127.0.0.1:8710";
  serve->add_option("--bind", bind, "host:port to listen on (default 127.0.0.1:8710)");

  // mock-scan
  auto* mock = app.add_subcommand("mock-scan", "Replay a scanner profile against the testbed");
  std::string profile_path, target, mock_log, mock_report;
  uint64_t seed = 1;
  mock->add_option("--profile", profile_path, "scanner profile JSON")->required();
  mock->add_option("--target", target, "testbed base URL (default: self-hosted instance)");
  mock->add_option("--log", mock_log, "request-log output path")->required();
  mock->add_option("--report", mock_report, "normalized report output path")->required();
  mock->add_option("--seed", seed, "payload generator seed (default 1)");

  // shared ingestion/output flags
  std::vector<std::string> logs, pcaps, report_paths;
  std::string signatures, baseline, out_path = "-";
  std::string preset_name = "default", params_flag;
  std::string in_path, payloads_path, rules_path, builtins_path, annotations_path;
  std::string negatives_out, emit = "text";
  bool include_path_payloads = false;

  auto add_traffic_flags = [&](CLI::App* sub) {
    sub->add_option("--log", logs, "request-log JSONL input (repeatable)");
    sub->add_option("--pcap", pcaps, "pcap capture input (repeatable)");
  };

  // extract
  auto* extract = app.add_subcommand("extract", "Extract payloads from captured traffic");
  add_traffic_flags(extract);
  extract->add_option("--signatures", signatures, "signatures JSON");
  extract->add_option("--baseline", baseline, "baseline values JSON");
  extract->add_option("--out", out_path, "payload JSONL output (default stdout)");

  // template
  auto* tmpl = app.add_subcommand("template", "Cluster payloads into templates");
  tmpl->add_option("--in", in_path, "payload JSONL input")->required();
  tmpl->add_option("--preset", preset_name, "parameter preset name");
  tmpl->add_option("--params", params_flag, "overrides: lev=,block=,oblivion=,rounds=");
  tmpl->add_flag("--include-path", include_path_payloads, "keep path-segment payloads");
  tmpl->add_option("--out", out_path, "template JSONL output (default stdout)");

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score templates on the six metrics");
  eval->add_option("--in", in_path, "template JSONL input")->required();
  eval->add_option("--payloads", payloads_path, "payload JSONL input (member values)")->required();
  eval->add_option("--rules", rules_path, "evasion rules JSON");
  eval->add_option("--builtins", builtins_path, "builtin callback list JSON");
  eval->add_option("--out", out_path, "metrics JSON output (default stdout)");
  eval->add_option("--emit", emit, "summary format: text, csv, json")
      ->check(CLI::IsMember({"text", "csv", "json"}));

  // correlate
  auto* corr = app.add_subcommand("correlate", "Join payloads with scan reports");
  corr->add_option("--in", in_path, "payload JSONL input")->required();
  add_traffic_flags(corr);
  corr->add_option("--report", report_paths, "normalized report JSON (repeatable)");
  corr->add_option("--annotations", annotations_path, "triage annotations JSONL");
  corr->add_option("--preset", preset_name, "parameter preset name");
  corr->add_option("--params", params_flag, "overrides: lev=,block=,oblivion=,rounds=");
  corr->add_flag("--include-path", include_path_payloads, "keep path-segment payloads");
  corr->add_option("--out", out_path, "classified JSONL output (default stdout)");
  corr->add_option("--negatives-out", negatives_out, "deduplicated negative templates JSONL");
  corr->add_option("--emit", emit, "tally format: text, csv, json")
      ->check(CLI::IsMember({"text", "csv", "json"}));

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "extract, template, evaluate, correlate in order");
  add_traffic_flags(pipe);
  pipe->add_option("--signatures", signatures, "signatures JSON");
  pipe->add_option("--baseline", baseline, "baseline values JSON");
  pipe->add_option("--report", report_paths, "normalized report JSON (repeatable)");
  pipe->add_option("--annotations", annotations_path, "triage annotations JSONL");
  pipe->add_option("--preset", preset_name, "parameter preset name");
  pipe->add_option("--params", params_flag, "overrides: lev=,block=,oblivion=,rounds=");
  pipe->add_flag("--include-path", include_path_payloads, "keep path-segment payloads");
  pipe->add_option("--rules", rules_path, "evasion rules JSON");
  pipe->add_option("--builtins", builtins_path, "builtin callback list JSON");
  std::string out_dir;
  pipe->add_option("--out", out_dir, "output directory")->required();
  pipe->add_option("--emit", emit, "summary format: text, csv, json")
      ->check(CLI::IsMember({"text", "csv", "json"}));

  // review-queue
  auto* review = app.add_subcommand("review-queue", "Cross-scanner value divergences for review");
  add_traffic_flags(review);
  review->add_option("--baseline", baseline, "baseline values JSON");
  review->add_option("--out", out_path, "review JSONL output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(serve)) {
      auto [host, port] = parse_bind(bind);
      TestbedServer server;
      std::cout << "serving " << build_catalog().size() << " cases on http://" << host << ":"
                << port << "/\n"
                << std::flush;
      if (!server.listen_blocking(host, port))
        throw std::runtime_error("cannot bind " + bind);
      return 0;
    }

    if (app.got_subcommand(mock)) {
      ScannerProfile profile = load_profile(profile_path);
      MockScanResult result;
      if (target.empty()) {
        TestbedServer server;
        if (!server.start("127.0.0.1", 0))
          throw std::runtime_error("cannot start embedded testbed");
        result = run_scan(profile, "http://127.0.0.1:" + std::to_string(server.port()), seed);
        server.stop();
      } else {
        result = run_scan(profile, target, seed);
      }
      std::string log_text;
      for (const std::string& line : result.log_lines) log_text += line + "\n";
      write_file(mock_log, log_text);
      ordered_json report;
      report["scanner_id"] = result.report.scanner_id;
      report["findings"] = ordered_json::array();
      for (const ReportFinding& f : result.report.findings) {
        report["findings"].push_back({{"url", f.url},
                                      {"parameter", f.parameter},
                                      {"vuln_type", f.vuln_type},
                                      {"evidence", f.evidence}});
      }
      write_file(mock_report, report.dump(2) + "\n");
      std::cout << result.payloads_sent.size() << " payloads sent, "
                << result.report.findings.size() << " findings\n";
      return 0;
    }

    if (app.got_subcommand(extract)) {
      IngestedTraffic traffic = ingest_sources(logs, pcaps);
      report_diag(traffic.diag);
      auto payloads = do_extract(traffic, {logs, pcaps, signatures, baseline});
      emit_output(out_path, payloads_to_jsonl(payloads));
      return 0;
    }

    if (app.got_subcommand(tmpl)) {
      auto payloads = analysis_payloads(read_payloads_jsonl(in_path), include_path_payloads);
      auto records = do_template(payloads, make_params(preset_name, params_flag));
      emit_output(out_path, records_to_jsonl(records));
      return 0;
    }

    if (app.got_subcommand(eval)) {
      auto records = records_from_file(in_path);
      auto payloads = read_payloads_jsonl(payloads_path);
      EvalOutput result = do_evaluate(records, payloads, rules_path, builtins_path);
      emit_output(out_path, result.metrics_json);
      if (emit == "csv") std::cout << eval_table_csv(result.rows);
      else if (emit == "text") std::cout << eval_table_text(result.rows);
      return 0;
    }

    if (app.got_subcommand(corr)) {
      IngestedTraffic traffic = ingest_sources(logs, pcaps);
      auto payloads = analysis_payloads(read_payloads_jsonl(in_path), include_path_payloads);
      TemplatingParams params = make_params(preset_name, params_flag);
      CorrOutput result = do_correlate(payloads, load_reports(report_paths), traffic.requests,
                                       params, annotations_path);
      for (const std::string& d : result.diagnostics) std::cerr << d << "\n";
      emit_output(out_path, result.classified_jsonl);
      if (!negatives_out.empty()) emit_output(negatives_out, result.negatives_jsonl);
      if (emit == "csv") std::cout << detection_table_csv(result.rows);
      else if (emit == "text") std::cout << detection_table_text(result.rows);
      return 0;
    }

    if (app.got_subcommand(pipe)) {
      std::filesystem::create_directories(out_dir);
      auto file = [&](const std::string& name) { return out_dir + "/" + name; };
      TemplatingParams params = make_params(preset_name, params_flag);

      IngestedTraffic traffic = ingest_sources(logs, pcaps);
      report_diag(traffic.diag);
      auto extracted = do_extract(traffic, {logs, pcaps, signatures, baseline});
      emit_output(file("payloads.jsonl"), payloads_to_jsonl(extracted));

      // Every stage re-reads the previous stage's file, so chained subcommands
      // produce these exact bytes.
      auto payloads = analysis_payloads(read_payloads_jsonl(file("payloads.jsonl")),
                                        include_path_payloads);
      auto records = do_template(payloads, params);
      emit_output(file("templates.jsonl"), records_to_jsonl(records));

      EvalOutput eval_result =
          do_evaluate(records_from_file(file("templates.jsonl")),
                      read_payloads_jsonl(file("payloads.jsonl")), rules_path, builtins_path);
      emit_output(file("metrics.json"), eval_result.metrics_json);

      CorrOutput corr_result = do_correlate(payloads, load_reports(report_paths),
                                            traffic.requests, params, annotations_path);
      for (const std::string& d : corr_result.diagnostics) std::cerr << d << "\n";
      emit_output(file("classified.jsonl"), corr_result.classified_jsonl);
      emit_output(file("negatives.jsonl"), corr_result.negatives_jsonl);

      if (emit == "csv") {
        emit_output(file("summary.csv"), eval_table_csv(eval_result.rows));
        emit_output(file("detection.csv"), detection_table_csv(corr_result.rows));
        std::cout << eval_table_csv(eval_result.rows) << detection_table_csv(corr_result.rows);
      } else if (emit == "text") {
        std::cout << eval_table_text(eval_result.rows) << "\n"
                  << detection_table_text(corr_result.rows);
      }
      return 0;
    }

    if (app.got_subcommand(review)) {
      IngestedTraffic traffic = ingest_sources(logs, pcaps);
      BaselineMap base;
      if (!baseline.empty()) base = load_baseline(baseline);
      std::string out;
      for (const ReviewEntry& e : cross_scanner_diff(traffic.requests, base))
        out += to_review_jsonl_line(e) + "\n";
      emit_output(out_path, out);
      return 0;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace xsslab

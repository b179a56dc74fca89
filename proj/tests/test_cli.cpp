// CLI wiring: run_cli in-process with crafted argv, checking exit codes and
// output files. "serve" is exercised indirectly (mock-scan embeds a testbed);
// blocking listen_blocking is not testable in-process.
#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "xsslab/cli.hpp"
#include "xsslab/extract.hpp"
#include "xsslab/templating.hpp"
#include "xsslab/testbed.hpp"
#include "xsslab/util.hpp"
#include "oracles.hpp"

using namespace xsslab;

namespace {

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "xsslab");
  std::vector<char*> argv;
  for (std::string& a : args) argv.push_back(a.data());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string data_path(const std::string& rel) {
  return std::string(XSSLAB_DATA_DIR) + "/" + rel;
}

size_t line_count(const std::string& text) {
  size_t n = 0;
  for (const std::string& line : split(text, '\n')) {
    if (!trim(line).empty()) ++n;
  }
  return n;
}

Payload prompt_payload(uint64_t id, const std::string& value) {
  Payload p;
  p.id = id;
  p.value = value;
  p.raw_value = percent_encode(value);
  p.request_id = id;
  p.entry_point = {EntryPointKind::kQuery, "q"};
  p.scanner_id = "scanner-alpha";
  p.flagged_by = {kFlagAttackChars};
  return p;
}

std::vector<TemplateRecord> records_from(const std::string& path) {
  std::vector<TemplateRecord> records;
  for (const std::string& line : split(read_file(path), '\n')) {
    if (trim(line).empty()) continue;
    records.push_back(template_record_from_jsonl(line));
  }
  return records;
}

const char* kPromptA = "<ScRiPt >prompt(905188)</ScRiPt>";
const char* kPromptB = "<ScRiPt >prompt(900741)</ScRiPt>";
const char* kPromptRendered = "<ScRiPt >prompt(90_NUM_)</ScRiPt>";

}  // namespace

TEST_CASE("template record JSONL round trips") {
  Template t;
  t.rendered = kPromptRendered;
  t.tokens = {{TokenKind::kLit, "<ScRiPt >prompt(90"},
              {TokenKind::kNum, "_NUM_"},
              {TokenKind::kLit, ")</ScRiPt>"}};
  t.members = {1, 2};
  t.generation = 1;

  std::string line = template_record_to_jsonl({"scanner-alpha", t});
  nlohmann::json j = nlohmann::json::parse(line);
  CHECK(j.at("scanner_id") == "scanner-alpha");
  CHECK(j.at("rendered") == kPromptRendered);
  CHECK(j.at("tokens").size() == 3);
  CHECK(j.at("tokens")[0] == nlohmann::json::array({"lit", "<ScRiPt >prompt(90"}));
  CHECK(j.at("tokens")[1] == nlohmann::json::array({"num", "_NUM_"}));
  CHECK(j.at("member_count") == 2);
  CHECK(j.at("generation") == 1);

  TemplateRecord back = template_record_from_jsonl(line);
  CHECK(back.scanner_id == "scanner-alpha");
  CHECK(back.tmpl.rendered == t.rendered);
  REQUIRE(back.tmpl.tokens.size() == 3);
  CHECK(back.tmpl.tokens[1].kind == TokenKind::kNum);
  CHECK(back.tmpl.tokens[2].text == ")</ScRiPt>");
  CHECK(back.tmpl.members == t.members);
  CHECK(back.tmpl.generation == 1);
}

TEST_CASE("template record without scanner omits the key") {
  Template t;
  t.rendered = "x";
  t.tokens = {{TokenKind::kLit, "x"}};
  t.members = {7};
  std::string line = template_record_to_jsonl({"", t});
  nlohmann::json j = nlohmann::json::parse(line);
  CHECK(!j.contains("scanner_id"));
  TemplateRecord back = template_record_from_jsonl(line);
  CHECK(back.scanner_id.empty());
  CHECK(back.tmpl.rendered == "x");
}

TEST_CASE("template record rejects malformed tokens") {
  CHECK_THROWS(template_record_from_jsonl(
      R"({"rendered":"x","tokens":[["lit"]],"members":[],"generation":0})"));
  CHECK_THROWS(template_record_from_jsonl(
      R"({"rendered":"x","tokens":[["wat","x"]],"members":[],"generation":0})"));
  CHECK_THROWS(template_record_from_jsonl("not json"));
}

TEST_CASE("usage errors exit 2") {
  std::string dir = testref::temp_dir("cli_usage");
  std::string empty = testref::write_temp("cli_usage/empty.jsonl", "");

  CHECK(run({}) == 2);                          // subcommand required
  CHECK(run({"frobnicate"}) == 2);              // unknown subcommand
  CHECK(run({"extract", "--nope"}) == 2);       // unknown flag
  CHECK(run({"template"}) == 2);                // missing required --in
  CHECK(run({"mock-scan"}) == 2);               // missing required --profile/--log/--report
  CHECK(run({"pipeline", "--log", empty}) == 2);  // missing required --out
  CHECK(run({"evaluate", "--in", empty, "--payloads", empty, "--emit", "xml"}) == 2);

  // Runtime validation, reached after parse: unknown preset, malformed params.
  std::string out = dir + "/out.jsonl";
  CHECK(run({"template", "--in", empty, "--preset", "nope", "--out", out}) == 2);
  CHECK(run({"template", "--in", empty, "--params", "lev", "--out", out}) == 2);
  CHECK(run({"template", "--in", empty, "--params", "lev=abc", "--out", out}) == 2);
  CHECK(run({"template", "--in", empty, "--params", "lev=-1", "--out", out}) == 2);
  CHECK(run({"template", "--in", empty, "--params", "oblivion=1.5", "--out", out}) == 2);
  CHECK(run({"template", "--in", empty, "--params", "bogus=3", "--out", out}) == 2);
}

TEST_CASE("help exits 0") {
  CHECK(run({"--help"}) == 0);
  CHECK(run({"extract", "--help"}) == 0);
}

TEST_CASE("runtime failures exit 1") {
  std::string dir = testref::temp_dir("cli_runtime");
  std::string out = dir + "/out.jsonl";
  CHECK(run({"extract", "--log", dir + "/missing.jsonl", "--out", out}) == 1);
  CHECK(run({"template", "--in", dir + "/missing.jsonl", "--out", out}) == 1);
  CHECK(run({"mock-scan", "--profile", dir + "/missing.json", "--log", dir + "/l",
             "--report", dir + "/r"}) == 1);
  CHECK(run({"mock-scan", "--profile", data_path("profiles/alpha.json"), "--target",
             "http://127.0.0.1:1", "--log", dir + "/l", "--report", dir + "/r"}) == 1);
}

TEST_CASE("extract subcommand on the bundled fixtures") {
  std::string dir = testref::temp_dir("cli_extract");
  std::string out = dir + "/payloads.jsonl";

  CHECK(run({"extract", "--log", data_path("fixtures/crawl_only.jsonl"), "--out", out}) == 0);
  CHECK(read_file(out).empty());

  CHECK(run({"extract", "--log", data_path("fixtures/labeled_mixed.jsonl"), "--signatures",
             data_path("signatures.json"), "--out", out}) == 0);
  auto payloads = read_payloads_jsonl(out);
  REQUIRE(payloads.size() == 7);
  for (size_t i = 0; i < payloads.size(); ++i) CHECK(payloads[i].id == i + 1);
}

TEST_CASE("template subcommand reproduces the golden merge") {
  std::string dir = testref::temp_dir("cli_template");
  std::string in = dir + "/payloads.jsonl";
  std::string out = dir + "/templates.jsonl";
  write_payloads_jsonl(in, {prompt_payload(1, kPromptA), prompt_payload(2, kPromptB)});

  CHECK(run({"template", "--in", in, "--out", out}) == 0);
  auto records = records_from(out);
  REQUIRE(records.size() == 1);
  CHECK(records[0].scanner_id == "scanner-alpha");
  CHECK(records[0].tmpl.rendered == kPromptRendered);
  CHECK(records[0].tmpl.members == std::vector<uint64_t>{1, 2});
  CHECK(records[0].tmpl.generation == 1);

  // Tight threshold keeps the pair apart.
  CHECK(run({"template", "--in", in, "--params", "lev=2", "--out", out}) == 0);
  CHECK(records_from(out).size() == 2);
}

TEST_CASE("evaluate subcommand emits the metrics document") {
  std::string dir = testref::temp_dir("cli_eval");
  std::string payloads = dir + "/payloads.jsonl";
  std::string templates = dir + "/templates.jsonl";
  std::string metrics = dir + "/metrics.json";
  write_payloads_jsonl(payloads, {prompt_payload(1, kPromptA), prompt_payload(2, kPromptB)});
  REQUIRE(run({"template", "--in", payloads, "--out", templates}) == 0);

  CHECK(run({"evaluate", "--in", templates, "--payloads", payloads, "--rules",
             data_path("evasion_rules.json"), "--out", metrics, "--emit", "json"}) == 0);
  nlohmann::json doc = nlohmann::json::parse(read_file(metrics));
  REQUIRE(doc.at("scanners").size() == 1);
  const auto& scanner = doc["scanners"][0];
  CHECK(scanner.at("scanner_id") == "scanner-alpha");
  CHECK(scanner.at("summary").at("payload_count") == 2);
  CHECK(scanner.at("summary").at("template_count") == 1);
  REQUIRE(scanner.at("templates").size() == 1);
  const auto& jt = scanner["templates"][0];
  CHECK(jt.at("rendered") == kPromptRendered);
  CHECK(jt.at("m1") == 28);
  CHECK(jt.at("m2") == 18);
  CHECK(jt.at("m6").at("mean") == doctest::Approx(4.0));
  CHECK(jt.at("m6").at("variance") == doctest::Approx(0.0));
}

TEST_CASE("mock-scan subcommand drives a live testbed") {
  TestbedServer server;
  REQUIRE(server.start("127.0.0.1", 0));
  std::string target = "http://127.0.0.1:" + std::to_string(server.port());
  std::string dir = testref::temp_dir("cli_mockscan");
  std::string log = dir + "/scan.jsonl";
  std::string report = dir + "/report.json";

  CHECK(run({"mock-scan", "--profile", data_path("profiles/alpha.json"), "--target", target,
             "--log", log, "--report", report, "--seed", "1"}) == 0);
  server.stop();

  CHECK(line_count(read_file(log)) == 38);
  nlohmann::json j = nlohmann::json::parse(read_file(report));
  CHECK(j.at("scanner_id") == "scanner-alpha");
  CHECK(j.at("findings").size() == 13);
  for (const auto& f : j["findings"]) {
    CHECK(f.at("vuln_type") == "xss-reflected");
    CHECK(f.at("parameter") == "q");
  }
}

TEST_CASE("review-queue subcommand surfaces cross-scanner divergences") {
  std::string dir = testref::temp_dir("cli_review");
  auto log_line = [](const char* scanner, const char* path, const char* name,
                     const char* value) {
    nlohmann::ordered_json j;
    j["ts"] = 100.0;
    j["scanner_id"] = scanner;
    j["method"] = "GET";
    j["path"] = path;
    j["query"] = nlohmann::json::array({{name, value}});
    j["headers"] = nlohmann::json::array({{"host", "t"}});
    j["body"] = "";
    return j.dump() + "\n";
  };
  std::string log_a = dir + "/a.jsonl";
  std::string log_b = dir + "/b.jsonl";
  write_file(log_a, log_line("scanner-a", "/item", "id", "alpha-value") +
                        log_line("scanner-a", "/same", "id", "1"));
  write_file(log_b, log_line("scanner-b", "/item", "id", "bravo-value") +
                        log_line("scanner-b", "/same", "id", "1"));
  std::string baseline = dir + "/baseline.json";
  write_file(baseline, R"([{"path":"/item","param":"id","value":"1"}])");

  std::string out = dir + "/review.jsonl";
  CHECK(run({"review-queue", "--log", log_a, "--log", log_b, "--baseline", baseline,
             "--out", out}) == 0);
  std::string text = read_file(out);
  REQUIRE(line_count(text) == 1);
  nlohmann::json entry = nlohmann::json::parse(split(text, '\n')[0]);
  CHECK(entry.at("path") == "/item");
  CHECK(entry.at("param") == "id");
  CHECK(entry.at("value_a") == "alpha-value");
  CHECK(entry.at("value_b") == "bravo-value");
  CHECK(entry.at("baseline") == "1");
}

TEST_CASE("pipeline output matches chained subcommands byte for byte") {
  TestbedServer server;
  REQUIRE(server.start("127.0.0.1", 0));
  std::string target = "http://127.0.0.1:" + std::to_string(server.port());
  std::string dir = testref::temp_dir("cli_pipeline");
  std::string log = dir + "/scan.jsonl";
  std::string report = dir + "/report.json";
  REQUIRE(run({"mock-scan", "--profile", data_path("profiles/alpha.json"), "--target", target,
               "--log", log, "--report", report, "--seed", "1"}) == 0);
  server.stop();

  std::string pipe = dir + "/pipe";
  CHECK(run({"pipeline", "--log", log, "--report", report, "--signatures",
             data_path("signatures.json"), "--rules", data_path("evasion_rules.json"),
             "--out", pipe, "--emit", "json"}) == 0);
  for (const char* name : {"payloads.jsonl", "templates.jsonl", "metrics.json",
                           "classified.jsonl", "negatives.jsonl"}) {
    CHECK(std::filesystem::exists(pipe + "/" + name));
  }

  std::string chain = dir + "/chain";
  std::filesystem::create_directories(chain);
  REQUIRE(run({"extract", "--log", log, "--signatures", data_path("signatures.json"),
               "--out", chain + "/payloads.jsonl"}) == 0);
  REQUIRE(run({"template", "--in", chain + "/payloads.jsonl",
               "--out", chain + "/templates.jsonl"}) == 0);
  REQUIRE(run({"evaluate", "--in", chain + "/templates.jsonl", "--payloads",
               chain + "/payloads.jsonl", "--rules", data_path("evasion_rules.json"),
               "--out", chain + "/metrics.json", "--emit", "json"}) == 0);
  REQUIRE(run({"correlate", "--in", chain + "/payloads.jsonl", "--log", log, "--report",
               report, "--out", chain + "/classified.jsonl", "--negatives-out",
               chain + "/negatives.jsonl", "--emit", "json"}) == 0);

  for (const char* name : {"payloads.jsonl", "templates.jsonl", "metrics.json",
                           "classified.jsonl", "negatives.jsonl"}) {
    INFO("stage file: " << name);
    CHECK(read_file(pipe + "/" + name) == read_file(chain + "/" + name));
  }

  // Sanity on the content, not only identity: 19 payloads, 13 positive verdicts.
  CHECK(line_count(read_file(pipe + "/payloads.jsonl")) == 19);
  size_t positives = 0;
  for (const std::string& line : split(read_file(pipe + "/classified.jsonl"), '\n')) {
    if (trim(line).empty()) continue;
    if (nlohmann::json::parse(line).at("positive").get<bool>()) ++positives;
  }
  CHECK(positives == 13);

  // csv emit adds the two table files.
  std::string pipe_csv = dir + "/pipe_csv";
  CHECK(run({"pipeline", "--log", log, "--report", report, "--signatures",
             data_path("signatures.json"), "--out", pipe_csv, "--emit", "csv"}) == 0);
  CHECK(read_file(pipe_csv + "/summary.csv").rfind("scanner_id,payloads,templates,", 0) == 0);
  CHECK(read_file(pipe_csv + "/detection.csv").rfind("scanner_id,detected,not_detected", 0) == 0);
}

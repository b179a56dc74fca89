#include <doctest.h>

#include <set>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "xsslab/testbed.hpp"

using namespace xsslab;

TEST_CASE("catalog shape: thirteen reflected, four dom, two retrofit, unique routes") {
  const auto& catalog = build_catalog();
  CHECK(catalog.size() == 19);
  size_t reflected = 0;
  size_t dom = 0;
  size_t retrofit = 0;
  std::set<std::string> routes;
  for (const auto& c : catalog) {
    routes.insert(c.route);
    switch (c.kind) {
      case CaseKind::kReflected: ++reflected; break;
      case CaseKind::kDom: ++dom; break;
      case CaseKind::kRetrofit: ++retrofit; break;
    }
    CHECK_FALSE(c.witness.empty());
    CHECK(c.sample_input == "sample");
    if (c.kind == CaseKind::kDom) {
      CHECK_FALSE(c.source.empty());
      CHECK_FALSE(c.sink.empty());
    }
  }
  CHECK(reflected == 13);
  CHECK(dom == 4);
  CHECK(retrofit == 2);
  CHECK(routes.size() == catalog.size());
}

TEST_CASE("find_case resolves routes") {
  const TestCase* c = find_case("/reflected/body");
  REQUIRE(c != nullptr);
  CHECK(c->context == "html-body");
  CHECK(find_case("/nope") == nullptr);
}

TEST_CASE("every witness satisfies its own oracle; the crawl value never does") {
  for (const auto& c : build_catalog()) {
    CAPTURE(c.route);
    CHECK(oracle_check(c, render_case_page(c, c.witness), c.witness));
    CHECK_FALSE(oracle_check(c, render_case_page(c, c.sample_input), c.sample_input));
  }
}

TEST_CASE("reflected pages reflect; dom pages are static") {
  const TestCase* body = find_case("/reflected/body");
  REQUIRE(body);
  CHECK(render_case_page(*body, "MARKER-XYZ").find("MARKER-XYZ") != std::string::npos);

  for (const char* route : {"/dom/hash-innerhtml", "/dom/location-settimeout",
                            "/dom/address-documentwrite", "/dom/toxic-eval"}) {
    const TestCase* c = find_case(route);
    REQUIRE(c);
    std::string page = render_case_page(*c, "IGNORED-INPUT");
    CHECK(page == render_case_page(*c, "other"));  // q plays no role
    CHECK(page.find("IGNORED-INPUT") == std::string::npos);
    CHECK(page.find(c->source) != std::string::npos);
    CHECK(page.find(c->sink) != std::string::npos);
  }
}

TEST_CASE("reflection alone is not vulnerability: context escape is required") {
  const TestCase* attr = find_case("/reflected/attr-double");
  REQUIRE(attr);
  // Reflected verbatim, but never leaves the quoted attribute.
  std::string tame = "<script>alert(1)</script>";
  std::string page = render_case_page(*attr, tame);
  CHECK(page.find(tame) != std::string::npos);
  CHECK_FALSE(oracle_check(*attr, page, tame));
  // A closing quote escapes.
  std::string escaping = "\"><script>alert(1)</script>";
  CHECK(oracle_check(*attr, render_case_page(*attr, escaping), escaping));
}

TEST_CASE("dom oracles demand sink-compatible input") {
  const TestCase* inner = find_case("/dom/hash-innerhtml");
  REQUIRE(inner);
  std::string page = render_case_page(*inner, "");
  CHECK(oracle_check(*inner, page, "<img src=x onerror=alert(1)>"));
  CHECK_FALSE(oracle_check(*inner, page, "no angle brackets"));  // innerHTML needs markup

  const TestCase* eval_case = find_case("/dom/toxic-eval");
  REQUIRE(eval_case);
  std::string eval_page = render_case_page(*eval_case, "");
  CHECK(oracle_check(*eval_case, eval_page, "alert(1)"));
  CHECK_FALSE(oracle_check(*eval_case, eval_page, "plainword"));  // eval needs ( ; or =
}

TEST_CASE("style-expression filter strips script tags and foreign attributes") {
  CHECK(retrofit_filter_style_expression("<script>alert(1)</script>") == "alert(1)");
  CHECK(retrofit_filter_style_expression("<script\r\n\r\n>x</script>") == "x");  // CR/LF no disguise
  CHECK(retrofit_filter_style_expression("<ScRiPt>x</sCrIpT>") == "x");
  CHECK(retrofit_filter_style_expression("<img src=x onerror=alert(1)>") == "<img>");
  CHECK(retrofit_filter_style_expression("<div onclick=x style=\"color:red\">") ==
        "<div style=\"color:red\">");
  CHECK(retrofit_filter_style_expression("plain text") == "plain text");

  // The expression payload itself survives byte-identically: the filter's blind spot.
  std::string witness = "<div style=\"width:expression(alert('XSS'));\">";
  CHECK(retrofit_filter_style_expression(witness) == witness);
}

TEST_CASE("crlf filter strips exact script literals only") {
  CHECK(retrofit_filter_crlf_scripttag("<script>alert(1)</script>") == "alert(1)");
  CHECK(retrofit_filter_crlf_scripttag("<SCRIPT>x</ScRiPt>") == "x");
  // The literal match misses a tag broken by raw newlines: the filter's blind spot.
  std::string witness = "<script\r\n\r\n>alert(/xlqjgg4y/)</script>";
  CHECK(retrofit_filter_crlf_scripttag(witness) == "<script\r\n\r\n>alert(/xlqjgg4y/)");
}

TEST_CASE("retrofit oracles fire only for their own bypass") {
  const TestCase* style = find_case("/retrofit/style-expression");
  const TestCase* crlf = find_case("/retrofit/crlf-scripttag");
  REQUIRE(style);
  REQUIRE(crlf);

  CHECK(oracle_check(*style, render_case_page(*style, style->witness), style->witness));
  CHECK_FALSE(oracle_check(*style, render_case_page(*style, crlf->witness), crlf->witness));
  CHECK(oracle_check(*crlf, render_case_page(*crlf, crlf->witness), crlf->witness));
  CHECK_FALSE(oracle_check(*crlf, render_case_page(*crlf, style->witness), style->witness));

  // Plain script tags do not count as either bypass.
  std::string tame = "<script>alert(1)</script>";
  CHECK_FALSE(oracle_check(*style, render_case_page(*style, tame), tame));
  CHECK_FALSE(oracle_check(*crlf, render_case_page(*crlf, tame), tame));
}

TEST_CASE("index page links every case") {
  std::string index = render_index();
  for (const auto& c : build_catalog()) {
    CHECK(index.find("\"" + c.route + "?q=" + c.sample_input + "\"") != std::string::npos);
  }
}

TEST_CASE("catalog json is machine readable") {
  auto j = nlohmann::json::parse(catalog_json());
  REQUIRE(j.is_array());
  REQUIRE(j.size() == build_catalog().size());
  for (const auto& entry : j) {
    CHECK(entry.contains("route"));
    CHECK(entry.contains("kind"));
    CHECK(entry.contains("context"));
    CHECK(entry.contains("source"));
    CHECK(entry.contains("sink"));
    CHECK(entry.contains("sample_input"));
    CHECK(entry.contains("witness"));
  }
  CHECK(j[0]["kind"] == "reflected");
}

TEST_CASE("server serves index, catalog, and case pages") {
  TestbedServer server;
  REQUIRE(server.start("127.0.0.1", 0));
  REQUIRE(server.port() > 0);

  httplib::Client client("127.0.0.1", server.port());
  client.set_connection_timeout(5, 0);

  auto index = client.Get("/");
  REQUIRE(index);
  CHECK(index->status == 200);
  CHECK(index->body.find("/reflected/body") != std::string::npos);

  auto catalog = client.Get("/catalog.json");
  REQUIRE(catalog);
  CHECK(catalog->status == 200);
  CHECK(nlohmann::json::parse(catalog->body).size() == build_catalog().size());

  auto page = client.Get("/reflected/body?q=%3Cb%3E7%3C%2Fb%3E");
  REQUIRE(page);
  CHECK(page->status == 200);
  CHECK(page->body.find("<b>7</b>") != std::string::npos);

  auto missing = client.Get("/no-such-route");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  server.stop();
}

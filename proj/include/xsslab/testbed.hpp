#pragma once

#include <memory>
#include <string>
#include <vector>

namespace xsslab {

enum class CaseKind { kReflected, kDom, kRetrofit };

std::string case_kind_name(CaseKind kind);

/** One vulnerable page of the embedded testbed. */
struct TestCase {
  std::string route;    // unique, doubles as the case id
  CaseKind kind = CaseKind::kReflected;
  std::string context;  // reflection context label (or retrofit case label)
  std::string source;   // dom cases: the tainted source
  std::string sink;     // dom cases: the executing sink
  std::string sample_input = "sample";  // benign crawl value
  std::string witness;  // payload known to satisfy the oracle
};

/** The fixed case catalog: reflected contexts, dom source/sink pairs, retrofit cases. */
const std::vector<TestCase>& build_catalog();

const TestCase* find_case(const std::string& route);

/** Full HTML served for a case when the q parameter equals `q`. Stateless. */
std::string render_case_page(const TestCase& c, const std::string& q);

/** Index page with an anchor per case. */
std::string render_index();

/** Machine-readable catalog (route, kind, context, source, sink, sample_input, witness). */
std::string catalog_json();

/** Strips script tags (CR/LF inside the name ignored) and all attributes except style. */
std::string retrofit_filter_style_expression(const std::string& in);

/** Strips the exact literals <script> and </script> case-insensitively; no CR/LF normalization. */
std::string retrofit_filter_crlf_scripttag(const std::string& in);

/**
 * Machine-checkable vulnerability oracle. Reflected cases: the injected value
 * appears in the response in a position escaping its context. Dom cases: the page
 * wires the case's source to its sink and the injected value could drive the sink.
 * Retrofit cases: the response carries the case's defining structure.
 */
bool oracle_check(const TestCase& c, const std::string& response_body, const std::string& injected);

/** Embedded HTTP server exposing the catalog. One page per case, plus / and /catalog.json. */
class TestbedServer {
 public:
  TestbedServer();
  ~TestbedServer();

  /** Binds and serves on a background thread. port 0 picks a free port. */
  bool start(const std::string& host, int port);
  int port() const;
  void stop();

  /** Serves on the calling thread until stopped (CLI mode). */
  bool listen_blocking(const std::string& host, int port);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace xsslab

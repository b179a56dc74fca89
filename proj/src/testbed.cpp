#include "xsslab/testbed.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "xsslab/util.hpp"

namespace xsslab {

namespace {

constexpr const char* kPageHead = "<html>\n  <body>\n    ";
constexpr const char* kPageTail = "\n  </body>\n</html>\n";

std::string wrap_body(const std::string& content) {
  return std::string(kPageHead) + content + kPageTail;
}

// Fixed dom pages: one source wired to one sink, nothing reflected server-side.
const char* kDomHashInnerhtml = R"(<html>
  <body>
    <script>
      var payload = window.location.hash.substr(1);
      var div = document.createElement('div');
      div.id = 'divEl';
      document.documentElement.appendChild(div);

      var divEl = document.getElementById('divEl');
      divEl.innerHTML = payload;
    </script>
  </body>
</html>
)";

const char* kDomLocationSettimeout = R"(<html>
  <body>
    <script>
      var payload = window.location;
      setTimeout('var a=a;' + payload, 1);
    </script>
  </body>
</html>
)";

const char* kDomAddressDocumentwrite = R"(<html>
  <head><title>Address based DOM XSS</title></head>
  <body>
    <script>
      var payload = document.documentURI;
      document.write(payload);
    </script>
  </body>
</html>
)";

const char* kDomToxicEval = R"(<html>
  <head><title>Toxic DOM</title></head>
  <body>
    <script>
      var payload = window.name;
      eval(payload);
    </script>
  </body>
</html>
)";

bool has_tag_start(const std::string& s, size_t from = 0) {
  size_t pos = s.find('<', from);
  while (pos != std::string::npos) {
    if (pos + 1 < s.size()) {
      char c = s[pos + 1];
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '/' || c == '!' || c == '?') return true;
    }
    pos = s.find('<', pos + 1);
  }
  return false;
}

// True when `s`, reflected into the given context, lands outside of it.
bool context_escapes(const std::string& context, const std::string& s) {
  if (context == "html-body") return has_tag_start(s);
  if (context == "html-comment") {
    size_t brk = s.find("-->");
    return brk != std::string::npos && has_tag_start(s, brk + 3);
  }
  if (context == "attr-double") return s.find('"') != std::string::npos;
  if (context == "attr-single") return s.find('\'') != std::string::npos;
  if (context == "attr-unquoted")
    return s.find_first_of(" \t>") != std::string::npos;
  if (context == "url-attr") {
    std::string compact;
    for (char c : s) {
      if (c != '\t' && c != '\r' && c != '\n' && c != '\0') compact += c;
    }
    return to_lower(compact).rfind("javascript:", 0) == 0 || s.find('"') != std::string::npos;
  }
  if (context == "script-string-double")
    return s.find('"') != std::string::npos || contains_ci(s, "</script");
  if (context == "script-string-single")
    return s.find('\'') != std::string::npos || contains_ci(s, "</script");
  if (context == "script-slash-quote")
    return s.find('/') != std::string::npos || contains_ci(s, "</script");
  if (context == "script-raw") return s.find('(') != std::string::npos;
  if (context == "style-block")
    return contains_ci(s, "</style") || contains_ci(s, "expression(") ||
           s.find('}') != std::string::npos;
  if (context == "style-attr")
    return contains_ci(s, "expression(") || s.find('"') != std::string::npos;
  if (context == "textarea") return contains_ci(s, "</textarea");
  return false;
}

std::vector<TestCase> make_catalog() {
  std::vector<TestCase> cases;
  auto reflected = [&](const std::string& route, const std::string& context,
                       const std::string& witness) {
    TestCase c;
    c.route = route;
    c.kind = CaseKind::kReflected;
    c.context = context;
    c.witness = witness;
    cases.push_back(std::move(c));
  };
  reflected("/reflected/body", "html-body", "<script>alert(232)</script>");
  reflected("/reflected/comment", "html-comment", "--><script>alert(1)</script>");
  reflected("/reflected/attr-double", "attr-double", "\"><script>alert(1)</script>");
  reflected("/reflected/attr-single", "attr-single", "'><script>alert(1)</script>");
  reflected("/reflected/attr-unquoted", "attr-unquoted", "x onmouseover=alert(1)");
  reflected("/reflected/href", "url-attr", "javascript:alert(1)");
  reflected("/reflected/script-string-double", "script-string-double", "\";alert(1);//");
  reflected("/reflected/script-string-single", "script-string-single", "';alert(1);//");
  reflected("/reflected/scriptslashquote", "script-slash-quote", "/;alert(1);//");
  reflected("/reflected/script-raw", "script-raw", "alert(1)");
  reflected("/reflected/style-block", "style-block", "</style><script>alert(1)</script>");
  reflected("/reflected/style-attr", "style-attr", "x;width:expression(alert(1))");
  reflected("/reflected/textarea", "textarea", "</textarea><script>alert(1)</script>");

  auto dom = [&](const std::string& route, const std::string& source, const std::string& sink,
                 const std::string& witness) {
    TestCase c;
    c.route = route;
    c.kind = CaseKind::kDom;
    c.context = "dom";
    c.source = source;
    c.sink = sink;
    c.witness = witness;
    cases.push_back(std::move(c));
  };
  dom("/dom/hash-innerhtml", "window.location.hash", "innerHTML", "<img src=x onerror=alert(1)>");
  dom("/dom/location-settimeout", "window.location", "setTimeout", ";alert(1)");
  dom("/dom/address-documentwrite", "document.documentURI", "document.write",
      "<script>alert(1)</script>");
  dom("/dom/toxic-eval", "window.name", "eval", "alert(1)");

  auto retrofit = [&](const std::string& route, const std::string& context,
                      const std::string& witness) {
    TestCase c;
    c.route = route;
    c.kind = CaseKind::kRetrofit;
    c.context = context;
    c.witness = witness;
    cases.push_back(std::move(c));
  };
  retrofit("/retrofit/style-expression", "retrofit-style-expression",
           "<div style=\"width:expression(alert('XSS'));\">");
  retrofit("/retrofit/crlf-scripttag", "retrofit-crlf-scripttag",
           "<script\r\n\r\n>alert(/xlqjgg4y/)</script>");
  return cases;
}

std::string reflect_content(const TestCase& c, const std::string& q) {
  const std::string& ctx = c.context;
  if (ctx == "html-body") return "<div>" + q + "</div>";
  if (ctx == "html-comment") return "<!-- " + q + " -->";
  if (ctx == "attr-double") return "<div title=\"" + q + "\">entry</div>";
  if (ctx == "attr-single") return "<div title='" + q + "'>entry</div>";
  if (ctx == "attr-unquoted") return "<div title=" + q + ">entry</div>";
  if (ctx == "url-attr") return "<a href=\"" + q + "\">Link!</a>";
  if (ctx == "script-string-double") return "<script>var foo=\"" + q + "\";</script>";
  if (ctx == "script-string-single") return "<script>var foo='" + q + "';</script>";
  if (ctx == "script-slash-quote") return "<script>var foo=/" + q + "/;</script>";
  if (ctx == "script-raw") return "<script>" + q + "</script>";
  if (ctx == "style-block") return "<style>.box { color: " + q + "; }</style>";
  if (ctx == "style-attr") return "<div style=\"color:" + q + "\">entry</div>";
  if (ctx == "textarea") return "<textarea>" + q + "</textarea>";
  if (ctx == "retrofit-style-expression")
    return "<div>" + retrofit_filter_style_expression(q) + "</div>";
  if (ctx == "retrofit-crlf-scripttag")
    return "<div>" + retrofit_filter_crlf_scripttag(q) + "</div>";
  return q;
}

const std::regex& style_expression_re() {
  static const std::regex re(R"(<[A-Za-z][^>]*style[ \t]*=[ \t]*["'][^"']*expression[ \t]*\()");
  return re;
}

const std::regex& crlf_scripttag_re() {
  static const std::regex re(R"(<[Ss][Cc][Rr][Ii][Pp][Tt][^>]*[\r\n][^>]*>)");
  return re;
}

}  // namespace

std::string case_kind_name(CaseKind kind) {
  switch (kind) {
    case CaseKind::kReflected: return "reflected";
    case CaseKind::kDom: return "dom";
    case CaseKind::kRetrofit: return "retrofit";
  }
  return "reflected";
}

const std::vector<TestCase>& build_catalog() {
  static const std::vector<TestCase> catalog = make_catalog();
  return catalog;
}

const TestCase* find_case(const std::string& route) {
  for (const TestCase& c : build_catalog()) {
    if (c.route == route) return &c;
  }
  return nullptr;
}

std::string render_case_page(const TestCase& c, const std::string& q) {
  if (c.kind == CaseKind::kDom) {
    if (c.route == "/dom/hash-innerhtml") return kDomHashInnerhtml;
    if (c.route == "/dom/location-settimeout") return kDomLocationSettimeout;
    if (c.route == "/dom/address-documentwrite") return kDomAddressDocumentwrite;
    return kDomToxicEval;
  }
  return wrap_body(reflect_content(c, q));
}

std::string render_index() {
  std::string items;
  for (const TestCase& c : build_catalog()) {
    items += "      <li><a href=\"" + c.route + "?q=" + c.sample_input + "\">" + c.route +
             "</a></li>\n";
  }
  return "<html>\n  <body>\n    <h1>Case index</h1>\n    <ul>\n" + items +
         "    </ul>\n  </body>\n</html>\n";
}

std::string catalog_json() {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const TestCase& c : build_catalog()) {
    nlohmann::ordered_json j;
    j["route"] = c.route;
    j["kind"] = case_kind_name(c.kind);
    j["context"] = c.context;
    j["source"] = c.source;
    j["sink"] = c.sink;
    j["sample_input"] = c.sample_input;
    j["witness"] = c.witness;
    out.push_back(std::move(j));
  }
  return out.dump(2);
}

std::string retrofit_filter_style_expression(const std::string& in) {
  std::string out;
  size_t i = 0;
  while (i < in.size()) {
    if (in[i] != '<') {
      out += in[i++];
      continue;
    }
    size_t close = in.find('>', i);
    if (close == std::string::npos) {
      out.append(in, i, in.size() - i);
      break;
    }
    std::string tag = in.substr(i, close - i + 1);
    size_t p = 1;
    bool closing = p < tag.size() && tag[p] == '/';
    if (closing) ++p;
    size_t name_start = p;
    while (p + 1 < tag.size() && tag[p] != ' ' && tag[p] != '\t' && tag[p] != '=' && tag[p] != '/')
      ++p;
    std::string raw_name = tag.substr(name_start, p - name_start);
    std::string canon;
    for (char c : raw_name) {
      if (c != '\r' && c != '\n') canon += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    i = close + 1;
    if (canon == "script") continue;  // script tags dropped, CR/LF in the name does not hide them

    // Keep the tag, dropping every attribute except style.
    std::string kept_attr;
    size_t q = p;
    bool self_close = false;
    while (q + 1 < tag.size()) {
      while (q + 1 < tag.size() && std::isspace(static_cast<unsigned char>(tag[q]))) ++q;
      if (q + 1 >= tag.size()) break;
      if (tag[q] == '/') {
        self_close = true;
        ++q;
        continue;
      }
      size_t attr_start = q;
      while (q + 1 < tag.size() && !std::isspace(static_cast<unsigned char>(tag[q])) &&
             tag[q] != '=' && tag[q] != '/')
        ++q;
      std::string attr_name = to_lower(tag.substr(attr_start, q - attr_start));
      while (q + 1 < tag.size() && std::isspace(static_cast<unsigned char>(tag[q]))) ++q;
      if (q + 1 < tag.size() && tag[q] == '=') {
        ++q;
        while (q + 1 < tag.size() && std::isspace(static_cast<unsigned char>(tag[q]))) ++q;
        if (q + 1 < tag.size() && (tag[q] == '"' || tag[q] == '\'')) {
          char quote = tag[q];
          ++q;
          while (q + 1 < tag.size() && tag[q] != quote) ++q;
          if (q + 1 < tag.size()) ++q;
        } else {
          while (q + 1 < tag.size() && !std::isspace(static_cast<unsigned char>(tag[q])) && tag[q] != '/')
            ++q;
        }
      }
      if (attr_name == "style") kept_attr = tag.substr(attr_start, q - attr_start);
    }
    out += '<';
    if (closing) out += '/';
    out += raw_name;
    if (!kept_attr.empty()) out += ' ' + kept_attr;
    if (self_close) out += '/';
    out += '>';
  }
  return out;
}

std::string retrofit_filter_crlf_scripttag(const std::string& in) {
  return replace_all_ci(replace_all_ci(in, "<script>", ""), "</script>", "");
}

bool oracle_check(const TestCase& c, const std::string& response_body, const std::string& injected) {
  switch (c.kind) {
    case CaseKind::kDom: {
      bool wired = response_body.find(c.source) != std::string::npos &&
                   response_body.find(c.sink) != std::string::npos;
      if (!wired) return false;
      if (c.sink == "innerHTML" || c.sink == "document.write")
        return injected.find('<') != std::string::npos;
      return injected.find_first_of("(;=") != std::string::npos;
    }
    case CaseKind::kReflected: {
      if (injected.empty()) return false;
      if (response_body.find(injected) == std::string::npos) return false;
      return context_escapes(c.context, injected);
    }
    case CaseKind::kRetrofit: {
      if (c.context == "retrofit-style-expression")
        return std::regex_search(response_body.begin(), response_body.end(), style_expression_re());
      return std::regex_search(response_body.begin(), response_body.end(), crlf_scripttag_re());
    }
  }
  return false;
}

struct TestbedServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  void register_routes() {
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(render_index(), "text/html");
    });
    server.Get("/catalog.json", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(catalog_json(), "application/json");
    });
    for (const TestCase& c : build_catalog()) {
      const TestCase* cptr = &c;
      server.Get(c.route, [cptr](const httplib::Request& req, httplib::Response& res) {
        std::string q = req.has_param("q") ? req.get_param_value("q") : std::string();
        res.set_content(render_case_page(*cptr, q), "text/html");
      });
    }
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) res.set_content("no such case\n", "text/plain");
    });
  }
};

TestbedServer::TestbedServer() : impl_(std::make_unique<Impl>()) { impl_->register_routes(); }

TestbedServer::~TestbedServer() { stop(); }

bool TestbedServer::start(const std::string& host, int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
    if (impl_->port <= 0) return false;
  } else {
    if (!impl_->server.bind_to_port(host, port)) return false;
    impl_->port = port;
  }
  impl_->thread = std::thread([this]() { impl_->server.listen_after_bind(); });
  for (int i = 0; i < 200 && !impl_->server.is_running(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return impl_->server.is_running();
}

int TestbedServer::port() const { return impl_->port; }

void TestbedServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

bool TestbedServer::listen_blocking(const std::string& host, int port) {
  impl_->port = port;
  return impl_->server.listen(host, port);
}

}  // namespace xsslab

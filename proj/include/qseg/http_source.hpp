#pragma once

#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#ifdef QSEG_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "qseg/errors.hpp"
#include "qseg/snippets.hpp"

namespace qseg {

namespace detail {

inline std::string url_encode(std::string_view text) {
  static const char hex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(text.size() * 3);
  for (unsigned char c : text) {
    const bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
                            (c >= '0' && c <= '9') || c == '-' || c == '.' ||
                            c == '_' || c == '~';
    if (unreserved) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 0xF]);
    }
  }
  return out;
}

/// Splits an absolute URL into the client base ("scheme://host[:port]") and
/// the request path (everything from the first '/' after the authority).
inline std::pair<std::string, std::string> split_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ParseError("endpoint is not an absolute URL: " + url);
  const std::size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

/// Header values of the form "env:NAME" are resolved from the environment
/// at request time so credentials never live in config files.
inline std::string resolve_header_value(const std::string& value) {
  if (value.rfind("env:", 0) == 0) {
    const char* v = std::getenv(value.c_str() + 4);
    return v ? v : "";
  }
  return value;
}

/// Walks a dotted-path selector over a JSON payload and returns the snippet
/// texts. The component suffixed "[]" names the result array; the remainder
/// of the path is applied inside each element. A selector with no "[]" must
/// resolve to an array of strings. A resolvable but empty array means "no
/// results"; anything that fails to resolve is a malformed response.
inline std::vector<std::string> select_snippet_texts(
    const nlohmann::json& payload, std::string_view selector) {
  std::vector<std::string> head;
  std::string tail;
  {
    std::string array_component;
    std::string_view rest = selector;
    bool seen_array = false;
    while (!rest.empty()) {
      const std::size_t dot = rest.find('.');
      std::string comp(rest.substr(0, dot));
      rest = dot == std::string_view::npos ? std::string_view{}
                                           : rest.substr(dot + 1);
      if (!seen_array) {
        if (comp.size() >= 2 && comp.ends_with("[]")) {
          comp.resize(comp.size() - 2);
          seen_array = true;
        }
        head.push_back(std::move(comp));
      } else {
        if (!tail.empty()) tail.push_back('.');
        tail += comp;
      }
    }
  }

  const nlohmann::json* node = &payload;
  for (const std::string& comp : head) {
    if (comp.empty()) continue;
    if (!node->is_object() || !node->contains(comp))
      throw MalformedResponseError("selector component \"" + comp +
                                   "\" not found in response");
    node = &(*node)[comp];
  }
  if (!node->is_array())
    throw MalformedResponseError("selector did not resolve to an array");

  std::vector<std::string> texts;
  for (const auto& element : *node) {
    const nlohmann::json* leaf = &element;
    std::string_view rest = tail;
    while (!rest.empty()) {
      const std::size_t dot = rest.find('.');
      const std::string comp(rest.substr(0, dot));
      rest = dot == std::string_view::npos ? std::string_view{}
                                           : rest.substr(dot + 1);
      if (!leaf->is_object() || !leaf->contains(comp))
        throw MalformedResponseError("selector component \"" + comp +
                                     "\" not found in result element");
      leaf = &(*leaf)[comp];
    }
    if (!leaf->is_string())
      throw MalformedResponseError("selected snippet value is not a string");
    texts.push_back(leaf->get<std::string>());
  }
  return texts;
}

}  // namespace detail

/// Snippet source over an arbitrary JSON search API. The endpoint template
/// carries a {query} placeholder which is URL-encoded per request.
/// Connection failures and 5xx answers are retried per the retry policy and
/// end in SourceUnavailableError; an answer that parses but does not match
/// the selector is MalformedResponseError.
class HttpSource final : public SnippetSource {
public:
  explicit HttpSource(SourceConfig config) : config_(std::move(config)) {
    if (config_.source_id.empty()) config_.source_id = "http";
    if (config_.max_snippets < 1)
      throw std::invalid_argument("max_snippets must be >= 1");
    if (config_.endpoint_template.find("{query}") == std::string::npos)
      throw ParseError("endpoint template has no {query} placeholder: " +
                       config_.endpoint_template);
  }

  SnippetSet fetch(std::string_view query_text,
                   QueryFlavor flavor = QueryFlavor::Base) override {
    std::string url = config_.endpoint_template;
    const std::size_t pos = url.find("{query}");
    url.replace(pos, 7, detail::url_encode(query_text));
    const auto [base, path] = detail::split_url(url);

    httplib::Headers headers;
    for (const auto& [name, value] : config_.headers)
      headers.emplace(name, detail::resolve_header_value(value));

    std::string body;
    int status = 0;
    const int attempts = std::max(1, config_.retry.max_attempts);
    for (int attempt = 1;; ++attempt) {
      httplib::Client client(base);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_follow_location(true);
      auto res = client.Get(path, headers);
      if (res && res->status < 500) {
        status = res->status;
        body = res->body;
        break;
      }
      if (attempt >= attempts) {
        std::string reason = res ? "status " + std::to_string(res->status)
                                 : httplib::to_string(res.error());
        throw SourceUnavailableError("source " + config_.source_id + ": " +
                                     reason + " after " +
                                     std::to_string(attempt) + " attempt(s)");
      }
      std::this_thread::sleep_for(config_.retry.backoff * attempt);
    }
    if (status < 200 || status >= 300)
      throw SourceUnavailableError("source " + config_.source_id +
                                   ": status " + std::to_string(status));

    nlohmann::json payload;
    try {
      payload = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedResponseError("source " + config_.source_id +
                                   ": response is not JSON: " + e.what());
    }
    std::vector<std::string> texts =
        detail::select_snippet_texts(payload, config_.snippet_selector);

    SnippetSet set;
    set.query_text.assign(query_text);
    set.flavor = flavor;
    set.source_id = config_.source_id;
    set.fetched_at = now_unix_seconds();
    for (const std::string& text : texts) {
      if ((int)set.snippets.size() >= config_.max_snippets) break;
      if (tokenize_text(text).empty()) continue;  // blank hit carries nothing
      set.snippets.push_back(
          Snippet{text, (int)set.snippets.size() + 1, config_.source_id});
    }
    return set;
  }

  const SourceConfig& config() const override { return config_; }

private:
  SourceConfig config_;
};

/// Reads an HTTP source config from JSON:
///   { "endpoint": "http://host/search?q={query}",
///     "selector": "items[].snippet",
///     "headers": {"X-Api-Key": "env:MY_KEY"},
///     "max_snippets": 10, "timeout_ms": 5000,
///     "retry_attempts": 3, "retry_backoff_ms": 200 }
inline SourceConfig load_http_config(const std::filesystem::path& path,
                                     std::string source_id = {}) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open http config: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  SourceConfig cfg;
  cfg.kind = SourceKind::Http;
  cfg.source_id = source_id.empty() ? path.stem().string() : std::move(source_id);
  try {
    cfg.endpoint_template = doc.at("endpoint").get<std::string>();
    cfg.snippet_selector = doc.at("selector").get<std::string>();
    if (doc.contains("headers"))
      for (const auto& [name, value] : doc["headers"].items())
        cfg.headers.emplace_back(name, value.get<std::string>());
    cfg.max_snippets = doc.value("max_snippets", 10);
    cfg.timeout = std::chrono::milliseconds(doc.value("timeout_ms", 5000));
    cfg.retry.max_attempts = doc.value("retry_attempts", 3);
    cfg.retry.backoff =
        std::chrono::milliseconds(doc.value("retry_backoff_ms", 200));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return cfg;
}

/// Builds the right source for `config`.
inline std::unique_ptr<SnippetSource> make_source(const SourceConfig& config) {
  switch (config.kind) {
    case SourceKind::Fixture:
      return std::make_unique<FixtureSource>(config);
    case SourceKind::Http:
      return std::make_unique<HttpSource>(config);
  }
  throw std::invalid_argument("unknown source kind");
}

/// Parses a CLI source spec: `[name=]fixture:<corpus.tsv>` or
/// `[name=]http:<config.json>`. The name defaults to the file stem.
inline SourceConfig parse_source_spec(std::string_view spec) {
  std::string name;
  std::string_view rest = spec;
  const std::size_t eq = spec.find('=');
  const std::size_t colon = spec.find(':');
  if (eq != std::string_view::npos && (colon == std::string_view::npos || eq < colon)) {
    name = std::string(spec.substr(0, eq));
    rest = spec.substr(eq + 1);
  }
  if (rest.rfind("fixture:", 0) == 0) {
    SourceConfig cfg;
    cfg.kind = SourceKind::Fixture;
    cfg.fixture_path = std::string(rest.substr(8));
    cfg.source_id = name.empty()
                        ? std::filesystem::path(cfg.fixture_path).stem().string()
                        : name;
    return cfg;
  }
  if (rest.rfind("http:", 0) == 0)
    return load_http_config(std::string(rest.substr(5)), name);
  throw ParseError("source spec must be [name=]fixture:<path> or "
                   "[name=]http:<config.json>, got: " +
                   std::string(spec));
}

}  // namespace qseg

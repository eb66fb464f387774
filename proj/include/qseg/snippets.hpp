#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qseg/core.hpp"
#include "qseg/errors.hpp"

namespace qseg {

/// One short text extract returned by a source for a query.
struct Snippet {
  std::string text;
  int rank = 1;  // 1-based result position
  std::string source_id;

  bool operator==(const Snippet&) const = default;
};

/// The (possibly empty) response of one source to one submitted query text.
/// An empty snippet list means "no results" and is a normal outcome, not an
/// error.
struct SnippetSet {
  std::string query_text;  // exactly as submitted
  QueryFlavor flavor = QueryFlavor::Base;
  std::string source_id;
  std::vector<Snippet> snippets;
  std::int64_t fetched_at = 0;  // unix seconds
};

enum class SourceKind { Fixture, Http };

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds backoff{200};
};

/// Configuration for one snippet source. Fixture sources read a local TSV
/// corpus; HTTP sources hit a JSON search API described by an endpoint
/// template and a selector for the snippet text array.
struct SourceConfig {
  std::string source_id;
  SourceKind kind = SourceKind::Fixture;

  // Fixture
  std::string fixture_path;

  // Http
  std::string endpoint_template;  // contains a {query} placeholder
  std::vector<std::pair<std::string, std::string>> headers;
  std::string snippet_selector;  // dotted path, e.g. "items[].snippet"

  int max_snippets = 10;
  std::chrono::milliseconds timeout{5000};
  RetryPolicy retry;
};

/// Collapses whitespace runs to single spaces and trims the ends. Used to
/// key fixture lookups and cache entries so that incidental spacing does
/// not split otherwise identical submissions.
inline std::string normalize_query_text(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  bool pending_space = false;
  while (i < text.size()) {
    char32_t cp = detail::next_codepoint(text, i);
    if (detail::is_space_cp(cp)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      detail::append_utf8(out, cp);
    }
  }
  return out;
}

inline std::int64_t now_unix_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

/// Interface over anything that yields snippets for a query text.
class SnippetSource {
public:
  virtual ~SnippetSource() = default;

  /// Returns at most config().max_snippets snippets in rank order. An empty
  /// set means the source had no results. Throws SourceUnavailableError on
  /// transport failure and MalformedResponseError on undecodable payloads.
  virtual SnippetSet fetch(std::string_view query_text,
                           QueryFlavor flavor = QueryFlavor::Base) = 0;

  virtual const SourceConfig& config() const = 0;
};

/// Deterministic source backed by a local TSV corpus:
/// `query_text<TAB>rank<TAB>snippet_text`, '#' lines ignored. Queries with
/// no entry yield an empty set.
class FixtureSource final : public SnippetSource {
public:
  explicit FixtureSource(SourceConfig config) : config_(std::move(config)) {
    if (config_.source_id.empty()) config_.source_id = "fixture";
    if (config_.max_snippets < 1)
      throw std::invalid_argument("max_snippets must be >= 1");
    load(config_.fixture_path);
  }

  /// Convenience: fixture source for `path` with default settings.
  static FixtureSource open(const std::filesystem::path& path,
                            std::string source_id = {}) {
    SourceConfig cfg;
    cfg.kind = SourceKind::Fixture;
    cfg.fixture_path = path.string();
    cfg.source_id = source_id.empty() ? path.stem().string() : std::move(source_id);
    return FixtureSource(std::move(cfg));
  }

  SnippetSet fetch(std::string_view query_text,
                   QueryFlavor flavor = QueryFlavor::Base) override {
    SnippetSet set;
    set.query_text.assign(query_text);
    set.flavor = flavor;
    set.source_id = config_.source_id;
    set.fetched_at = now_unix_seconds();
    auto it = corpus_.find(normalize_query_text(query_text));
    if (it != corpus_.end()) {
      const auto& stored = it->second;
      const std::size_t n =
          std::min<std::size_t>(stored.size(), config_.max_snippets);
      set.snippets.assign(stored.begin(), stored.begin() + n);
    }
    return set;
  }

  const SourceConfig& config() const override { return config_; }

  std::size_t query_count() const { return corpus_.size(); }

private:
  void load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open fixture corpus: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const std::size_t t1 = line.find('\t');
      const std::size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
      if (t2 == std::string::npos)
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                         ": expected query<TAB>rank<TAB>snippet");
      std::string key = normalize_query_text(
          std::string_view(line).substr(0, t1));
      int rank = 0;
      try {
        rank = std::stoi(line.substr(t1 + 1, t2 - t1 - 1));
      } catch (const std::exception&) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                         ": rank is not a number");
      }
      std::string text = line.substr(t2 + 1);
      if (rank < 1)
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                         ": rank must be >= 1");
      if (tokenize_text(text).empty())
        throw ParseError(path.string() + ":" + std::to_string(lineno) +
                         ": snippet text is empty after normalization");
      corpus_[key].push_back(Snippet{std::move(text), rank, config_.source_id});
    }
    for (auto& [key, snippets] : corpus_) {
      std::sort(snippets.begin(), snippets.end(),
                [](const Snippet& a, const Snippet& b) { return a.rank < b.rank; });
      for (std::size_t i = 1; i < snippets.size(); ++i)
        if (snippets[i].rank == snippets[i - 1].rank)
          throw ParseError(path.string() + ": duplicate rank " +
                           std::to_string(snippets[i].rank) + " for query \"" +
                           key + "\"");
    }
  }

  SourceConfig config_;
  std::map<std::string, std::vector<Snippet>> corpus_;
};

}  // namespace qseg

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "qseg/eval.hpp"
#include "qseg/segmenter.hpp"

using namespace qseg;

namespace {

namespace fs = std::filesystem;

ScoredNGram scored(std::size_t first, std::size_t last, double value) {
  return ScoredNGram{NGram{first, last}, value, true};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           (tag + "-" + std::to_string(::getpid()) + "-" +
            std::to_string(std::chrono::steady_clock::now()
                               .time_since_epoch()
                               .count()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

class CountingSource final : public SnippetSource {
public:
  explicit CountingSource(std::vector<std::string> texts) {
    cfg_.source_id = "counting";
    int rank = 1;
    for (std::string& t : texts)
      snippets_.push_back(Snippet{std::move(t), rank++, cfg_.source_id});
  }
  SnippetSet fetch(std::string_view query_text, QueryFlavor flavor) override {
    ++calls;
    SnippetSet set;
    set.query_text.assign(query_text);
    set.flavor = flavor;
    set.source_id = cfg_.source_id;
    set.snippets = snippets_;
    return set;
  }
  const SourceConfig& config() const override { return cfg_; }
  std::atomic<int> calls{0};

private:
  SourceConfig cfg_;
  std::vector<Snippet> snippets_;
};

}  // namespace

TEST_CASE("greedy selection: the worked example") {
  const Query q = tokenize("new york travel guides");
  // (new york, 9), (travel guides, 7), (york travel, 3): york-travel
  // conflicts with the accepted new-york and is skipped.
  const Segmentation s = select_segments(
      q, {scored(0, 1, 9), scored(2, 3, 7), scored(1, 2, 3)});
  CHECK(s.bracket_form() == "[new york] [travel guides]");
}

TEST_CASE("no admissible n-grams mean all singletons") {
  const Query q = tokenize("a b c");
  CHECK(select_segments(q, {}).bracket_form() == "a b c");
  // Present but inadmissible entries change nothing.
  std::vector<ScoredNGram> only_inadmissible = {
      {NGram{0, 1}, -std::numeric_limits<double>::infinity(), false}};
  CHECK(select_segments(q, only_inadmissible).bracket_form() == "a b c");
}

TEST_CASE("one admissible n-gram covering the whole query") {
  const Query q = tokenize("a b c d");
  const Segmentation s = select_segments(q, {scored(0, 3, 1.0)});
  CHECK(s.bracket_form() == "[a b c d]");
}

TEST_CASE("higher score wins over longer span") {
  const Query q = tokenize("a b c");
  const Segmentation s =
      select_segments(q, {scored(0, 2, 0.5), scored(0, 1, 0.9)});
  CHECK(s.bracket_form() == "[a b] c");
}

TEST_CASE("score ties break by length, then by start position") {
  const Query q = tokenize("a b c");
  CHECK(select_segments(q, {scored(0, 2, 0.7), scored(0, 1, 0.7)})
            .bracket_form() == "[a b c]");
  CHECK(select_segments(q, {scored(1, 2, 0.7), scored(0, 1, 0.7)})
            .bracket_form() == "[a b] c");
}

TEST_CASE("non-overlapping admissible n-grams are all accepted") {
  const Query q = tokenize("a b c d e f");
  const Segmentation s =
      select_segments(q, {scored(0, 1, 5), scored(3, 4, 4), scored(2, 2, 0)});
  // (2,2) is a unigram span; the greedy loop treats it like any other span,
  // but the measure layer never produces one.
  CHECK(s.segments().size() >= 3);
  CHECK(joins(s) == JoinSet{0, 3});
}

TEST_CASE("selection output is always a valid partition") {
  std::mt19937 rng(808);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 2 + rng() % 7;
    std::string raw;
    for (std::size_t i = 0; i < n; ++i) raw += (i ? " w" : "w") + std::to_string(i);
    const Query q = tokenize(raw);
    std::vector<ScoredNGram> entries;
    for (NGram g : candidate_ngrams(q)) {
      if (g.length() < 2) continue;
      const bool admissible = rng() % 3 != 0;
      entries.push_back(ScoredNGram{
          g, admissible ? double(rng() % 100) / 7.0
                        : -std::numeric_limits<double>::infinity(),
          admissible});
    }
    // The Segmentation constructor validates the partition invariants.
    const Segmentation s = select_segments(q, entries);
    std::size_t covered = 0;
    for (const Span& seg : s.segments()) covered += seg.length();
    CHECK(covered == n);
  }
}

TEST_CASE("segment_query runs the pipeline over a fixture") {
  TempDir dir("qseg-seg");
  const fs::path corpus = dir.path / "corpus.tsv";
  {
    std::ofstream out(corpus);
    // "new york" in all ten snippets; no other query bigram ever occurs.
    for (int i = 1; i <= 10; ++i)
      out << "new york travel guides\t" << i << "\tnew york rated stop "
          << i << " by visitors\n";
  }
  FixtureSource source = FixtureSource::open(corpus, "fix");
  SegmenterConfig cfg;
  cfg.measure = MeasureSpec::parse("ef:0.5");
  const Segmentation s = segment_query("new york travel guides", cfg, source);
  CHECK(s.bracket_form() == "[new york] travel guides");
}

TEST_CASE("no results produce the all-singletons segmentation") {
  CountingSource source({});
  SegmenterConfig cfg;
  cfg.measure = MeasureSpec::parse("mi");
  const Segmentation s = segment_query("alpha beta gamma", cfg, source);
  CHECK(s.bracket_form() == "alpha beta gamma");
  CHECK(source.calls == 1);
}

TEST_CASE("one-token queries never touch the source") {
  CountingSource source({"anything at all"});
  SegmenterConfig cfg;
  cfg.measure = MeasureSpec::parse("ef:0.5");
  const Segmentation s = segment_query("hello", cfg, source);
  CHECK(s.bracket_form() == "hello");
  CHECK(source.calls == 0);
}

TEST_CASE("empty queries are rejected before any fetch") {
  CountingSource source({});
  SegmenterConfig cfg;
  CHECK_THROWS_AS(segment_query("  \"\" ", cfg, source), EmptyQueryError);
  CHECK(source.calls == 0);
}

TEST_CASE("segmenter max_snippets caps an over-generous source") {
  std::vector<std::string> texts;
  // "a b" adjacent only in snippets 6..12: with the cap at 10, doc
  // fraction is 5/10; uncapped it would be 7/12.
  for (int i = 1; i <= 12; ++i)
    texts.push_back(i >= 6 ? "a b here" : "a only here");
  CountingSource source(texts);
  SegmenterConfig cfg;
  cfg.measure = MeasureSpec::parse("ef:0.5");
  cfg.max_snippets = 10;
  CHECK(segment_query("a b", cfg, source).bracket_form() == "[a b]");
  cfg.measure = MeasureSpec::parse("ef:0.75");
  CHECK(segment_query("a b", cfg, source).bracket_form() == "a b");
}

TEST_CASE("flavored submission text reaches the source") {
  TempDir dir("qseg-seg");
  const fs::path corpus = dir.path / "corpus.tsv";
  {
    std::ofstream out(corpus);
    for (int i = 1; i <= 4; ++i)
      out << "guides travel york new\t" << i << "\tyork new guides listing "
          << i << "\n";
  }
  FixtureSource source = FixtureSource::open(corpus, "fix");
  SegmenterConfig cfg;
  cfg.measure = MeasureSpec::parse("ef:0.5");
  cfg.flavor = QueryFlavor::Reversed;
  // Snippets exist only under the reversed text; they contain no in-order
  // bigram of the original query, so everything stays singleton.
  const Segmentation s =
      segment_query("new york travel guides", cfg, source);
  CHECK(s.bracket_form() == "new york travel guides");
  // Base flavor finds nothing at all for this corpus (still singletons,
  // via the no-result policy).
  cfg.flavor = QueryFlavor::Base;
  CHECK(segment_query("new york travel guides", cfg, source).bracket_form() ==
        "new york travel guides");
}

TEST_CASE("entity-frequency thresholds only remove admissible n-grams end to end") {
  std::mt19937 rng(55221);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
  const std::vector<double> thresholds = {0.25, 0.5, 0.75, 1.0};
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t qlen = 2 + rng() % 3;
    std::string raw;
    for (std::size_t i = 0; i < qlen; ++i) {
      if (i) raw += " ";
      raw += alphabet[rng() % alphabet.size()];
    }
    const Query q = tokenize(raw);
    SnippetSet set;
    for (std::size_t s = 0, n = 1 + rng() % 10; s < n; ++s) {
      std::string text;
      for (std::size_t w = 0, m = 2 + rng() % 10; w < m; ++w) {
        if (w) text += " ";
        text += alphabet[rng() % alphabet.size()];
      }
      set.snippets.push_back(Snippet{text, int(s) + 1, "t"});
    }
    const NGramStats stats = count_ngrams(q, set);

    std::vector<std::vector<NGram>> admissible_by_threshold;
    std::vector<std::vector<Span>> selected_by_threshold;
    for (double t : thresholds) {
      const auto all = score_all(MeasureSpec{Measure::EntityFrequency, t}, stats);
      std::vector<NGram> admissible;
      for (const ScoredNGram& s : all)
        if (s.admissible) admissible.push_back(s.ngram);
      admissible_by_threshold.push_back(admissible);
      std::vector<Span> selected;
      const Segmentation seg = select_segments(q, all);
      for (const Span& span : seg.segments())
        if (span.length() > 1) selected.push_back(span);
      selected_by_threshold.push_back(selected);
    }
    for (std::size_t hi = 1; hi < thresholds.size(); ++hi) {
      const auto& lower = admissible_by_threshold[hi - 1];
      // Admissible sets shrink as the threshold rises.
      for (NGram g : admissible_by_threshold[hi])
        CHECK(std::find(lower.begin(), lower.end(), g) != lower.end());
      // And every selected span at the higher threshold was available at
      // the lower one.
      for (const Span& span : selected_by_threshold[hi]) {
        const NGram g{span.first, span.last};
        CHECK(std::find(lower.begin(), lower.end(), g) != lower.end());
      }
    }
  }
}

TEST_CASE("segmentation through a warm cache is deterministic") {
  TempDir dir("qseg-seg");
  const fs::path corpus = dir.path / "corpus.tsv";
  {
    std::ofstream out(corpus);
    for (int i = 1; i <= 6; ++i)
      out << "grand canyon tours\t" << i << "\tgrand canyon " << i
          << " day tours and hikes\n";
  }
  FixtureSource source = FixtureSource::open(corpus, "fix");
  SnippetCache cache(dir.path / "cache");
  SegmenterConfig cfg;
  cfg.measure = MeasureSpec::parse("ef:0.25");

  const Segmentation first =
      segment_query("grand canyon tours", cfg, source, &cache);
  for (int i = 0; i < 5; ++i) {
    const Segmentation again =
        segment_query("grand canyon tours", cfg, source, &cache);
    CHECK(again == first);
  }
}

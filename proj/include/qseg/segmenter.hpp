#pragma once

#include <algorithm>
#include <string_view>
#include <vector>

#include "qseg/cache.hpp"
#include "qseg/core.hpp"
#include "qseg/measures.hpp"
#include "qseg/ngram_stats.hpp"
#include "qseg/snippets.hpp"

namespace qseg {

/// What to output for a query whose snippet set is empty. Evaluation runs
/// over whole query logs, so the segmenter never abstains; every token
/// becomes its own segment.
enum class NoResultPolicy { AllSingletons };

struct SegmenterConfig {
  MeasureSpec measure;
  QueryFlavor flavor = QueryFlavor::Base;
  int max_snippets = 10;
  NoResultPolicy no_result_policy = NoResultPolicy::AllSingletons;
};

/// Greedy entity selection: admissible n-grams ordered by score, longest
/// first and leftmost first on ties, accepted while they do not overlap an
/// already accepted one. Tokens not covered by an accepted n-gram become
/// singleton segments. Scores compare exactly; counts are integers and the
/// formulas deterministic, so no epsilon is applied.
inline Segmentation select_segments(const Query& q,
                                    const std::vector<ScoredNGram>& scored) {
  std::vector<ScoredNGram> admissible;
  for (const ScoredNGram& s : scored)
    if (s.admissible) admissible.push_back(s);
  std::sort(admissible.begin(), admissible.end(),
            [](const ScoredNGram& a, const ScoredNGram& b) {
              if (a.score != b.score) return a.score > b.score;
              if (a.ngram.length() != b.ngram.length())
                return a.ngram.length() > b.ngram.length();
              return a.ngram.first < b.ngram.first;
            });

  const std::size_t n = q.tokens.size();
  std::vector<char> taken(n, 0);
  std::vector<Span> accepted;
  for (const ScoredNGram& s : admissible) {
    bool free = true;
    for (std::size_t i = s.ngram.first; i <= s.ngram.last && free; ++i)
      free = !taken[i];
    if (!free) continue;
    for (std::size_t i = s.ngram.first; i <= s.ngram.last; ++i) taken[i] = 1;
    accepted.push_back(s.ngram.span());
  }

  std::vector<Span> segments;
  std::sort(accepted.begin(), accepted.end());
  std::size_t next = 0;
  for (const Span& span : accepted) {
    for (; next < span.first; ++next) segments.push_back(Span{next, next});
    segments.push_back(span);
    next = span.last + 1;
  }
  for (; next < n; ++next) segments.push_back(Span{next, next});
  return Segmentation(q, std::move(segments));
}

/// The end-to-end on-the-fly pipeline: tokenize, submit the flavored query
/// text, count n-grams over the returned snippets, score, select. One-token
/// queries skip the fetch entirely; queries with no results come back as
/// all singletons. Pass a cache to make repeated queries hit disk instead
/// of the source.
inline Segmentation segment_query(std::string_view raw,
                                  const SegmenterConfig& cfg,
                                  SnippetSource& source,
                                  SnippetCache* cache = nullptr,
                                  bool refresh = false) {
  Query q = tokenize(raw);
  if (q.tokens.size() == 1) return Segmentation::singletons(std::move(q));

  const std::string text = flavor_text(q, cfg.flavor);
  SnippetSet set = cache ? cached_fetch(*cache, source, text, cfg.flavor, refresh)
                         : source.fetch(text, cfg.flavor);
  if (cfg.max_snippets >= 1 &&
      set.snippets.size() > static_cast<std::size_t>(cfg.max_snippets))
    set.snippets.resize(cfg.max_snippets);
  if (set.snippets.empty()) return Segmentation::singletons(std::move(q));

  const NGramStats stats = count_ngrams(q, set);
  return select_segments(q, score_all(cfg.measure, stats));
}

}  // namespace qseg

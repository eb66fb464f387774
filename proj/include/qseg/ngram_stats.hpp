#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "qseg/core.hpp"
#include "qseg/snippets.hpp"

namespace qseg {

/// A contiguous sub-sequence of the query's tokens, as an inclusive
/// token-index range.
struct NGram {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t length() const { return last - first + 1; }
  Span span() const { return Span{first, last}; }
  auto operator<=>(const NGram&) const = default;
};

/// Every contiguous range of the query's tokens, ordered by start position
/// and then by length. A k-token query yields k(k+1)/2 n-grams.
inline std::vector<NGram> candidate_ngrams(const Query& q) {
  const std::size_t n = q.tokens.size();
  std::vector<NGram> out;
  out.reserve(n * (n + 1) / 2);
  for (std::size_t first = 0; first < n; ++first)
    for (std::size_t last = first; last < n; ++last)
      out.push_back(NGram{first, last});
  return out;
}

/// Occurrence and document-frequency counts for every query n-gram over one
/// snippet set, plus the corpus size N (total tokens across snippets).
/// occurrence counts every match including overlapping ones; doc_freq counts
/// snippets containing the n-gram at least once.
class NGramStats {
public:
  /// Builds stats from explicit count tables, both indexed like
  /// candidate_ngrams(query). Validates the count invariants.
  NGramStats(Query query, std::size_t snippet_count, std::uint64_t total_tokens,
             std::vector<std::uint64_t> occurrence,
             std::vector<std::uint64_t> doc_freq)
      : query_(std::move(query)),
        snippet_count_(snippet_count),
        total_tokens_(total_tokens),
        occurrence_(std::move(occurrence)),
        doc_freq_(std::move(doc_freq)) {
    validate();
  }

  const Query& query() const { return query_; }
  std::size_t snippet_count() const { return snippet_count_; }
  std::uint64_t total_tokens() const { return total_tokens_; }

  std::uint64_t occurrence(NGram g) const { return occurrence_[index_of(g)]; }
  std::uint64_t doc_freq(NGram g) const { return doc_freq_[index_of(g)]; }

  /// Fraction of snippets containing `g`; 0 when the set is empty.
  double doc_fraction(NGram g) const {
    return snippet_count_ == 0
               ? 0.0
               : static_cast<double>(doc_freq(g)) /
                     static_cast<double>(snippet_count_);
  }

private:
  std::size_t index_of(NGram g) const {
    const std::size_t n = query_.tokens.size();
    if (g.last >= n || g.first > g.last)
      throw std::out_of_range("n-gram range outside query");
    // Row-major over (first, length): row `first` starts after the
    // n - first, n - first + 1, ... ranges of earlier rows.
    return g.first * n - g.first * (g.first - 1) / 2 + (g.last - g.first);
  }

  void validate() const {
    const std::size_t n = query_.tokens.size();
    const std::size_t expect = n * (n + 1) / 2;
    if (occurrence_.size() != expect || doc_freq_.size() != expect)
      throw std::invalid_argument("count tables must cover all candidate n-grams");
    std::uint64_t max_unigram = 0;
    for (NGram g : candidate_ngrams(query_)) {
      const std::size_t i = index_of(g);
      if (doc_freq_[i] > snippet_count_)
        throw std::invalid_argument("doc_freq exceeds snippet count");
      if (doc_freq_[i] > occurrence_[i])
        throw std::invalid_argument("doc_freq exceeds occurrence count");
      if (g.length() == 1) {
        max_unigram = std::max(max_unigram, occurrence_[i]);
      } else {
        // Substring monotonicity against the two immediate sub-ranges.
        const std::uint64_t c = occurrence_[i];
        if (occurrence_[index_of(NGram{g.first, g.last - 1})] < c ||
            occurrence_[index_of(NGram{g.first + 1, g.last})] < c)
          throw std::invalid_argument("occurrence counts violate substring monotonicity");
      }
    }
    if (total_tokens_ < max_unigram)
      throw std::invalid_argument("corpus size below max unigram count");
  }

  Query query_;
  std::size_t snippet_count_;
  std::uint64_t total_tokens_;
  std::vector<std::uint64_t> occurrence_;
  std::vector<std::uint64_t> doc_freq_;
};

/// Counts every query n-gram over `set`. Snippets are tokenized with the
/// same normalization as queries, so matches are exact token-sequence
/// equality. The scan is anchored per snippet position: each position that
/// starts a match extends it as far as it runs, so overlapping matches all
/// count. An empty set yields all-zero tables and N = 0.
inline NGramStats count_ngrams(const Query& q, const SnippetSet& set) {
  const std::size_t n = q.tokens.size();
  const std::size_t table_size = n * (n + 1) / 2;
  std::vector<std::uint64_t> occurrence(table_size, 0);
  std::vector<std::uint64_t> doc_freq(table_size, 0);
  std::uint64_t total_tokens = 0;

  const auto index_of = [n](std::size_t first, std::size_t last) {
    return first * n - first * (first - 1) / 2 + (last - first);
  };

  std::unordered_map<std::string_view, std::vector<std::size_t>> starts;
  for (std::size_t i = 0; i < n; ++i) starts[q.tokens[i]].push_back(i);

  std::vector<char> seen(table_size);
  for (const Snippet& snippet : set.snippets) {
    const std::vector<std::string> words = tokenize_text(snippet.text);
    total_tokens += words.size();
    std::fill(seen.begin(), seen.end(), 0);
    for (std::size_t pos = 0; pos < words.size(); ++pos) {
      auto it = starts.find(words[pos]);
      if (it == starts.end()) continue;
      for (const std::size_t start : it->second) {
        std::size_t len = 1;
        while (start + len < n && pos + len < words.size() &&
               q.tokens[start + len] == words[pos + len])
          ++len;
        for (std::size_t k = 0; k < len; ++k) {
          const std::size_t idx = index_of(start, start + k);
          ++occurrence[idx];
          seen[idx] = 1;
        }
      }
    }
    for (std::size_t idx = 0; idx < table_size; ++idx)
      if (seen[idx]) ++doc_freq[idx];
  }

  return NGramStats(q, set.snippets.size(), total_tokens, std::move(occurrence),
                    std::move(doc_freq));
}

}  // namespace qseg

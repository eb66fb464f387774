#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "qseg/errors.hpp"

namespace qseg {

// ---------------------------------------------------------------------------
// UTF-8 / normalization primitives
//
// Queries and snippets are treated as UTF-8. Lowercasing covers ASCII,
// Latin-1, Latin Extended-A and the basic Cyrillic block; other codepoints
// pass through unchanged. Invalid bytes decode to U+FFFD so that every
// output of the tokenizer is valid UTF-8 and re-tokenizing is stable.
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr char32_t kReplacementChar = 0xFFFD;

/// Decodes the codepoint starting at s[i] and advances i past it.
/// Malformed sequences consume one byte and yield U+FFFD.
inline char32_t next_codepoint(std::string_view s, std::size_t& i) {
  const auto byte = [&](std::size_t k) -> std::uint8_t {
    return static_cast<std::uint8_t>(s[k]);
  };
  const std::uint8_t b0 = byte(i);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return kReplacementChar;
  }
  if (i + len > s.size()) {
    ++i;
    return kReplacementChar;
  }
  for (int k = 1; k < len; ++k) {
    const std::uint8_t bk = byte(i + k);
    if ((bk & 0xC0) != 0x80) {
      ++i;
      return kReplacementChar;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  // Reject overlong encodings and surrogate range.
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
      (len == 4 && cp < 0x10000) || (cp >= 0xD800 && cp <= 0xDFFF) ||
      cp > 0x10FFFF) {
    ++i;
    return kReplacementChar;
  }
  i += len;
  return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline bool is_space_cp(char32_t cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\f':
    case U'\v':
    case 0x0085:  // NEL
    case 0x00A0:  // no-break space
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline char32_t to_lower_cp(char32_t cp) {
  if (cp < 0x80) return (cp >= U'A' && cp <= U'Z') ? cp + 0x20 : cp;
  // Latin-1 supplement. 0xD7 is the multiplication sign, not a letter.
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  // Latin Extended-A comes in case pairs with a shifting parity.
  if (cp >= 0x100 && cp <= 0x17F) {
    if (cp == 0x130) return 0x69;   // I-with-dot, simple fold to 'i'
    if (cp == 0x131) return cp;     // dotless i is already lowercase
    if (cp == 0x178) return 0xFF;   // Y-with-diaeresis
    if (cp == 0x17F) return 0x73;   // long s folds to 's'
    if (cp <= 0x137 || (cp >= 0x14A && cp <= 0x177))
      return (cp % 2 == 0) ? cp + 1 : cp;
    return (cp % 2 == 1) ? cp + 1 : cp;  // 0x139..0x148, 0x179..0x17E
  }
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;  // Cyrillic А..Я
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;  // Ѐ..Џ
  return cp;
}

/// True for codepoints kept when trimming token edges. ASCII alphanumerics
/// and anything that looks like a letter; known punctuation blocks are
/// trimmed, unknown high codepoints are kept rather than guessed at.
inline bool is_word_cp(char32_t cp) {
  if (cp < 0x80)
    return (cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') ||
           (cp >= U'A' && cp <= U'Z');
  if (cp == 0xAA || cp == 0xB5 || cp == 0xBA) return true;
  if (cp >= 0xA1 && cp <= 0xBF) return false;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
  if (cp >= 0x3001 && cp <= 0x303F) return false;  // CJK punctuation
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

/// Lowercases and splits `raw` into tokens. Double quotes act as separators
/// and never contribute characters to a token. Leading and trailing
/// non-alphanumeric codepoints are stripped from every token; interior
/// punctuation (hyphens, apostrophes) is kept. May return an empty list.
inline std::vector<std::string> tokenize_text(std::string_view raw) {
  std::vector<std::string> tokens;
  std::vector<char32_t> current;

  const auto flush = [&] {
    std::size_t lo = 0;
    std::size_t hi = current.size();
    while (lo < hi && !detail::is_word_cp(current[lo])) ++lo;
    while (hi > lo && !detail::is_word_cp(current[hi - 1])) --hi;
    if (lo < hi) {
      std::string tok;
      for (std::size_t k = lo; k < hi; ++k) detail::append_utf8(tok, current[k]);
      tokens.push_back(std::move(tok));
    }
    current.clear();
  };

  std::size_t i = 0;
  while (i < raw.size()) {
    char32_t cp = detail::next_codepoint(raw, i);
    if (cp == U'"' || detail::is_space_cp(cp)) {
      flush();
    } else {
      current.push_back(detail::to_lower_cp(cp));
    }
  }
  flush();
  return tokens;
}

// ---------------------------------------------------------------------------
// Query
// ---------------------------------------------------------------------------

/// A normalized search query. `tokens` is always tokenize_text(raw);
/// construct through tokenize() to keep that invariant.
struct Query {
  std::string raw;
  std::vector<std::string> tokens;
  std::string id;

  bool operator==(const Query& other) const {
    return tokens == other.tokens && raw == other.raw && id == other.id;
  }
};

/// Tokenizes `raw` into a Query. Throws EmptyQueryError when nothing
/// survives normalization.
inline Query tokenize(std::string_view raw, std::string id = {}) {
  Query q;
  q.raw.assign(raw);
  q.id = std::move(id);
  q.tokens = tokenize_text(raw);
  if (q.tokens.empty())
    throw EmptyQueryError("query has no tokens after normalization: \"" +
                          q.raw + "\"");
  return q;
}

// ---------------------------------------------------------------------------
// Query flavors
// ---------------------------------------------------------------------------

/// The three submission variants used to measure source bias:
/// Base strips double quotes, Quoted submits the raw text verbatim,
/// Reversed strips quotes and reverses the term order.
enum class QueryFlavor { Base, Quoted, Reversed };

inline std::string_view flavor_name(QueryFlavor f) {
  switch (f) {
    case QueryFlavor::Base:
      return "base";
    case QueryFlavor::Quoted:
      return "quoted";
    case QueryFlavor::Reversed:
      return "reversed";
  }
  return "base";
}

inline QueryFlavor parse_flavor(std::string_view name) {
  if (name == "base") return QueryFlavor::Base;
  if (name == "quoted") return QueryFlavor::Quoted;
  if (name == "reversed") return QueryFlavor::Reversed;
  throw ParseError("unknown flavor: \"" + std::string(name) +
                   "\" (expected base, quoted or reversed)");
}

namespace detail {

/// Splits raw text on whitespace, treating double quotes as separators.
/// No lowercasing or edge trimming: flavor texts preserve the terms the
/// way the user wrote them.
inline std::vector<std::string> split_terms(std::string_view raw) {
  std::vector<std::string> terms;
  std::string current;
  std::size_t i = 0;
  while (i < raw.size()) {
    char32_t cp = next_codepoint(raw, i);
    if (cp == U'"' || is_space_cp(cp)) {
      if (!current.empty()) terms.push_back(std::move(current)), current.clear();
    } else {
      append_utf8(current, cp);
    }
  }
  if (!current.empty()) terms.push_back(std::move(current));
  return terms;
}

inline std::string join(const std::vector<std::string>& parts,
                        std::string_view sep = " ") {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k) out.append(sep);
    out += parts[k];
  }
  return out;
}

}  // namespace detail

/// Returns the exact string submitted to a snippet source for flavor `f`.
inline std::string flavor_text(const Query& q, QueryFlavor f) {
  if (f == QueryFlavor::Quoted) return q.raw;
  std::vector<std::string> terms = detail::split_terms(q.raw);
  if (f == QueryFlavor::Reversed) std::reverse(terms.begin(), terms.end());
  return detail::join(terms);
}

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

/// Inclusive token-index range [first, last].
struct Span {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t length() const { return last - first + 1; }
  bool overlaps(const Span& other) const {
    return first <= other.last && other.first <= last;
  }
  auto operator<=>(const Span&) const = default;
};

/// A partition of a query's tokens into ordered contiguous segments.
/// The constructor validates coverage, ordering and disjointness, so any
/// live Segmentation satisfies the partition invariants.
class Segmentation {
public:
  Segmentation(Query query, std::vector<Span> segments)
      : query_(std::move(query)), segments_(std::move(segments)) {
    validate();
  }

  /// The trivial segmentation: every token is its own segment.
  static Segmentation singletons(Query query) {
    std::vector<Span> segs;
    segs.reserve(query.tokens.size());
    for (std::size_t i = 0; i < query.tokens.size(); ++i)
      segs.push_back(Span{i, i});
    return Segmentation(std::move(query), std::move(segs));
  }

  const Query& query() const { return query_; }
  const std::vector<Span>& segments() const { return segments_; }

  /// Bracket serialization: multi-token segments bracketed, singletons bare.
  /// Example: "[new york] travel guides".
  std::string bracket_form() const {
    std::string out;
    for (const Span& s : segments_) {
      if (!out.empty()) out.push_back(' ');
      if (s.length() > 1) out.push_back('[');
      for (std::size_t i = s.first; i <= s.last; ++i) {
        if (i > s.first) out.push_back(' ');
        out += query_.tokens[i];
      }
      if (s.length() > 1) out.push_back(']');
    }
    return out;
  }

  bool operator==(const Segmentation& other) const {
    return query_.tokens == other.query_.tokens &&
           segments_ == other.segments_;
  }

private:
  void validate() const {
    if (query_.tokens.empty())
      throw std::invalid_argument("segmentation over empty token list");
    if (segments_.empty())
      throw std::invalid_argument("segmentation has no segments");
    std::size_t expect = 0;
    for (const Span& s : segments_) {
      if (s.first != expect || s.last < s.first)
        throw std::invalid_argument("segments must be sorted, contiguous and non-empty");
      expect = s.last + 1;
    }
    if (expect != query_.tokens.size())
      throw std::invalid_argument("segments must cover all tokens exactly");
  }

  Query query_;
  std::vector<Span> segments_;
};

// ---------------------------------------------------------------------------
// Gold records
// ---------------------------------------------------------------------------

/// One reference-segmented query from a gold dataset.
struct GoldRecord {
  Query query;
  Segmentation reference;
  std::string source_tag;
};

namespace detail {

// Piece of a gold line: either a delimited group or bare text between groups.
struct GoldPiece {
  std::string text;
  bool grouped = false;
};

inline std::vector<GoldPiece> split_bracket_form(std::string_view line) {
  std::vector<GoldPiece> pieces;
  std::string outside;
  std::string inside;
  bool open = false;
  for (std::size_t i = 0; i < line.size();) {
    // '[' and ']' are ASCII, never part of a multibyte sequence.
    char c = line[i];
    if (c == '[') {
      if (open) throw UnbalancedDelimitersError("nested '[' in gold line");
      if (!outside.empty()) pieces.push_back({outside, false}), outside.clear();
      open = true;
      ++i;
    } else if (c == ']') {
      if (!open) throw UnbalancedDelimitersError("']' without '[' in gold line");
      pieces.push_back({inside, true});
      inside.clear();
      open = false;
      ++i;
    } else {
      (open ? inside : outside).push_back(c);
      ++i;
    }
  }
  if (open) throw UnbalancedDelimitersError("unclosed '[' in gold line");
  if (!outside.empty()) pieces.push_back({outside, false});
  return pieces;
}

inline std::vector<GoldPiece> split_quote_form(std::string_view line) {
  std::vector<GoldPiece> pieces;
  std::string current;
  bool open = false;
  for (std::size_t i = 0; i < line.size();) {
    char c = line[i];
    if (c == '"') {
      pieces.push_back({current, open});
      current.clear();
      open = !open;
      ++i;
    } else {
      current.push_back(c);
      ++i;
    }
  }
  if (open) throw UnbalancedDelimitersError("unmatched '\"' in gold line");
  if (!current.empty()) pieces.push_back({current, false});
  return pieces;
}

}  // namespace detail

/// Parses one gold line in bracket form ("[new york] [travel guides]") or
/// quote form ("\"new york\" travel guides"). Tokens outside any group
/// become singleton reference segments. For quote-form lines the stored
/// raw query is the line verbatim (the user's quotes are part of the
/// query); bracket annotations are rewritten as quotes around multi-token
/// segments so that flavor_text(Quoted) preserves the reference grouping.
inline GoldRecord parse_gold(std::string_view line, std::string source_tag = {},
                             std::string id = {}) {
  const bool bracketed = line.find_first_of("[]") != std::string_view::npos;
  std::vector<detail::GoldPiece> pieces =
      bracketed ? detail::split_bracket_form(line)
                : detail::split_quote_form(line);

  std::vector<std::string> tokens;
  std::vector<Span> segments;
  std::vector<std::string> raw_parts;
  for (const auto& piece : pieces) {
    std::vector<std::string> piece_tokens = tokenize_text(piece.text);
    if (piece_tokens.empty()) continue;
    const std::size_t start = tokens.size();
    if (piece.grouped) {
      segments.push_back(Span{start, start + piece_tokens.size() - 1});
      if (piece_tokens.size() > 1)
        raw_parts.push_back("\"" + detail::join(piece_tokens) + "\"");
      else
        raw_parts.push_back(piece_tokens.front());
      for (auto& t : piece_tokens) tokens.push_back(std::move(t));
    } else {
      for (auto& t : piece_tokens) {
        segments.push_back(Span{tokens.size(), tokens.size()});
        raw_parts.push_back(t);
        tokens.push_back(std::move(t));
      }
    }
  }
  if (tokens.empty())
    throw EmptyQueryError("gold line has no tokens: \"" + std::string(line) +
                          "\"");

  Query q;
  q.raw = bracketed ? detail::join(raw_parts) : std::string(line);
  q.tokens = std::move(tokens);
  q.id = std::move(id);
  Segmentation ref(q, std::move(segments));
  return GoldRecord{std::move(q), std::move(ref), std::move(source_tag)};
}

/// Reads a gold dataset file: one record per line, `id<TAB>gold-form`,
/// '#' lines and blank lines ignored. Parse problems report the line number.
inline std::vector<GoldRecord> load_gold_dataset(
    const std::filesystem::path& path, std::string source_tag = {}) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open gold dataset: " + path.string());
  if (source_tag.empty()) source_tag = path.filename().string();

  std::vector<GoldRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected id<TAB>gold-form");
    std::string id = line.substr(0, tab);
    try {
      records.push_back(parse_gold(std::string_view(line).substr(tab + 1),
                                   source_tag, std::move(id)));
    } catch (const Error& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " +
                       e.what());
    }
  }
  return records;
}

}  // namespace qseg

#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "qseg/errors.hpp"
#include "qseg/ngram_stats.hpp"

namespace qseg {

/// The five statistical association measures plus the entity-frequency
/// filter. The statistical measures are the classic bigram formulas lifted
/// to n-grams by averaging the left/right-part statistics over every split
/// point; entity frequency keeps n-grams appearing in at least a threshold
/// fraction of the snippets.
enum class Measure { MutualInformation, Scp, Phi, Dice, LogLike, EntityFrequency };

struct MeasureSpec {
  Measure kind = Measure::EntityFrequency;
  double ef_threshold = 0.5;  // only meaningful for EntityFrequency, in (0, 1]

  /// Parses a measure flag: mi | scp | phi | dice | loglike | ef:<threshold>.
  static MeasureSpec parse(std::string_view flag) {
    if (flag == "mi") return {Measure::MutualInformation, 0};
    if (flag == "scp") return {Measure::Scp, 0};
    if (flag == "phi") return {Measure::Phi, 0};
    if (flag == "dice") return {Measure::Dice, 0};
    if (flag == "loglike") return {Measure::LogLike, 0};
    if (flag.rfind("ef:", 0) == 0) {
      double t = 0;
      try {
        t = std::stod(std::string(flag.substr(3)));
      } catch (const std::exception&) {
        throw ParseError("bad entity-frequency threshold in \"" +
                         std::string(flag) + "\"");
      }
      if (!(t > 0.0 && t <= 1.0))
        throw ParseError("entity-frequency threshold must be in (0, 1], got " +
                         std::string(flag.substr(3)));
      return {Measure::EntityFrequency, t};
    }
    throw ParseError("unknown measure \"" + std::string(flag) +
                     "\" (expected mi, scp, phi, dice, loglike or ef:<t>)");
  }

  /// Canonical flag-string form, used as the row label in tables.
  std::string name() const {
    switch (kind) {
      case Measure::MutualInformation:
        return "mi";
      case Measure::Scp:
        return "scp";
      case Measure::Phi:
        return "phi";
      case Measure::Dice:
        return "dice";
      case Measure::LogLike:
        return "loglike";
      case Measure::EntityFrequency: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "ef:%g", ef_threshold);
        return buf;
      }
    }
    return "?";
  }

  bool operator==(const MeasureSpec&) const = default;
};

/// An n-gram with its measure value. Inadmissible n-grams (unseen ones, the
/// ones an EF threshold discards, or degenerate scores) carry -inf so they
/// order below every finite score.
struct ScoredNGram {
  NGram ngram;
  double score = 0.0;
  bool admissible = false;
};

namespace detail {

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

/// Log-likelihood ratio (G²) of one 2x2 contingency table, natural log.
inline double llr_2x2(double k11, double k12, double k21, double k22) {
  const double r1 = k11 + k12, r2 = k21 + k22;
  const double c1 = k11 + k21, c2 = k12 + k22;
  const double total = r1 + r2;
  return 2.0 * (xlogx(k11) + xlogx(k12) + xlogx(k21) + xlogx(k22) -
                xlogx(r1) - xlogx(r2) - xlogx(c1) - xlogx(c2) + xlogx(total));
}

}  // namespace detail

/// Scores one n-gram of length >= 2 against the count tables. Statistical
/// measures consume occurrence counts and the corpus size N; entity
/// frequency consumes the snippet fraction doc_freq/snippet_count.
inline ScoredNGram score(const MeasureSpec& measure, NGram g,
                         const NGramStats& stats) {
  if (g.length() < 2)
    throw std::invalid_argument("unigrams are never scored as entities");
  constexpr double kInadmissible = -std::numeric_limits<double>::infinity();

  const double c = static_cast<double>(stats.occurrence(g));
  if (c == 0.0) return {g, kInadmissible, false};

  if (measure.kind == Measure::EntityFrequency) {
    const double fraction = stats.doc_fraction(g);
    return {g, fraction, fraction >= measure.ef_threshold};
  }

  // Fair dispersion over the n-1 split points: left part (first..first+i),
  // right part (first+i+1..last).
  const double splits = static_cast<double>(g.length() - 1);
  const double n_corpus = static_cast<double>(stats.total_tokens());
  double avp = 0.0;  // mean of c(L)·c(R)
  double avd = 0.0;  // mean of c(L)+c(R)
  double avn = 0.0;  // mean of (N-c(L))·(N-c(R))
  double llr_sum = 0.0;
  for (std::size_t split = g.first; split < g.last; ++split) {
    const double left = static_cast<double>(stats.occurrence(NGram{g.first, split}));
    const double right =
        static_cast<double>(stats.occurrence(NGram{split + 1, g.last}));
    avp += left * right;
    avd += left + right;
    avn += (n_corpus - left) * (n_corpus - right);
    const double k12 = std::max(0.0, left - c);
    const double k21 = std::max(0.0, right - c);
    const double k22 = std::max(0.0, n_corpus - left - right + c);
    llr_sum += detail::llr_2x2(c, k12, k21, k22);
  }
  avp /= splits;
  avd /= splits;
  avn /= splits;

  double value = 0.0;
  switch (measure.kind) {
    case Measure::Scp:
      value = c * c / avp;
      break;
    case Measure::Dice:
      value = 2.0 * c / avd;
      break;
    case Measure::MutualInformation:
      value = std::log2(c * n_corpus / avp);
      break;
    case Measure::Phi: {
      const double num = n_corpus * c - avp;
      value = num * num / (avp * avn);
      break;
    }
    case Measure::LogLike:
      value = llr_sum / splits;
      break;
    default:
      break;
  }
  if (!std::isfinite(value)) return {g, kInadmissible, false};
  return {g, value, true};
}

/// Scores every candidate n-gram with n >= 2, in candidate order.
inline std::vector<ScoredNGram> score_all(const MeasureSpec& measure,
                                          const NGramStats& stats) {
  std::vector<ScoredNGram> out;
  for (NGram g : candidate_ngrams(stats.query()))
    if (g.length() >= 2) out.push_back(score(measure, g, stats));
  return out;
}

}  // namespace qseg

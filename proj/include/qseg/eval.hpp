#pragma once

#include <set>
#include <vector>

#include "qseg/core.hpp"
#include "qseg/errors.hpp"

namespace qseg {

/// Gap indices joined by a segmentation. Gap i sits between token i and
/// token i+1; it is in the set exactly when both tokens share a segment.
/// All singletons yields the empty set; one full segment yields every gap.
using JoinSet = std::set<std::size_t>;

inline JoinSet joins(const Segmentation& s) {
  JoinSet out;
  for (const Span& span : s.segments())
    for (std::size_t gap = span.first; gap < span.last; ++gap) out.insert(gap);
  return out;
}

/// Boundary-decision precision/recall between a hypothesis and a reference,
/// computed over within-segment joins. The paper-style F is the arithmetic
/// mean of P and R; the harmonic F1 is reported alongside.
struct EvalResult {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double paper_f = 0;
  std::size_t true_positive_joins = 0;
  std::size_t hypothesis_joins = 0;
  std::size_t reference_joins = 0;
};

namespace detail {

/// P/R with the zero-join conventions: a hypothesis asserting no joins has
/// perfect precision; a reference with no joins is perfectly recalled.
inline EvalResult eval_from_counts(std::size_t tp, std::size_t hyp,
                                   std::size_t ref) {
  EvalResult r;
  r.true_positive_joins = tp;
  r.hypothesis_joins = hyp;
  r.reference_joins = ref;
  r.precision = hyp == 0 ? 1.0 : static_cast<double>(tp) / hyp;
  r.recall = ref == 0 ? 1.0 : static_cast<double>(tp) / ref;
  r.f1 = (r.precision + r.recall) > 0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  r.paper_f = (r.precision + r.recall) / 2.0;
  return r;
}

}  // namespace detail

/// Throws TokenMismatchError unless both segmentations cover the same
/// token list.
inline EvalResult evaluate(const Segmentation& hyp, const Segmentation& ref) {
  if (hyp.query().tokens != ref.query().tokens)
    throw TokenMismatchError("hypothesis and reference token lists differ: \"" +
                             hyp.bracket_form() + "\" vs \"" +
                             ref.bracket_form() + "\"");
  const JoinSet h = joins(hyp);
  const JoinSet g = joins(ref);
  std::size_t tp = 0;
  for (std::size_t gap : h) tp += g.count(gap);
  return detail::eval_from_counts(tp, h.size(), g.size());
}

/// Per-dataset aggregate. Macro fields average the per-query P and R (the
/// paper's convention, with paper-F the arithmetic mean of those averages);
/// micro fields pool the join counts across queries for diagnostics.
struct AggregateResult {
  std::size_t query_count = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double paper_f = 0;
  double micro_precision = 0;
  double micro_recall = 0;
  double micro_f1 = 0;
};

inline AggregateResult aggregate(const std::vector<EvalResult>& results) {
  if (results.empty())
    throw EmptyEvaluationError("no queries to aggregate");
  AggregateResult agg;
  agg.query_count = results.size();
  std::size_t tp = 0, hyp = 0, ref = 0;
  for (const EvalResult& r : results) {
    agg.precision += r.precision;
    agg.recall += r.recall;
    tp += r.true_positive_joins;
    hyp += r.hypothesis_joins;
    ref += r.reference_joins;
  }
  agg.precision /= results.size();
  agg.recall /= results.size();
  agg.paper_f = (agg.precision + agg.recall) / 2.0;
  agg.f1 = (agg.precision + agg.recall) > 0
               ? 2.0 * agg.precision * agg.recall / (agg.precision + agg.recall)
               : 0.0;
  const EvalResult micro = detail::eval_from_counts(tp, hyp, ref);
  agg.micro_precision = micro.precision;
  agg.micro_recall = micro.recall;
  agg.micro_f1 = micro.f1;
  return agg;
}

}  // namespace qseg

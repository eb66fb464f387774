#pragma once

#include <array>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qseg/cache.hpp"
#include "qseg/core.hpp"
#include "qseg/errors.hpp"
#include "qseg/eval.hpp"
#include "qseg/http_source.hpp"
#include "qseg/measures.hpp"
#include "qseg/ngram_stats.hpp"
#include "qseg/segmenter.hpp"
#include "qseg/snippets.hpp"

namespace qseg {

enum class TableFormat { Tsv, Markdown };

inline TableFormat parse_table_format(std::string_view name) {
  if (name == "tsv") return TableFormat::Tsv;
  if (name == "markdown" || name == "md") return TableFormat::Markdown;
  throw ParseError("unknown format \"" + std::string(name) +
                   "\" (expected tsv or markdown)");
}

/// Everything one experiment run needs. Built from a declarative JSON spec
/// file, CLI flags, or both (flags override the file).
struct ExperimentSpec {
  std::filesystem::path dataset;
  std::vector<MeasureSpec> measures;
  std::vector<SourceConfig> sources;
  std::vector<QueryFlavor> flavors{QueryFlavor::Base};
  bool include_no_result = true;
  TableFormat format = TableFormat::Tsv;
  int max_snippets = 10;
  std::filesystem::path cache_dir;  // empty: fetch straight from the source
  std::filesystem::path out_dir;    // empty: tables to stdout only
  bool refresh = false;
  int workers = 4;
};

/// The nine configurations the experiments sweep by default: the five
/// statistical measures and the four entity-frequency thresholds.
inline std::vector<MeasureSpec> default_measures() {
  return {MeasureSpec::parse("mi"),      MeasureSpec::parse("scp"),
          MeasureSpec::parse("phi"),     MeasureSpec::parse("dice"),
          MeasureSpec::parse("loglike"), MeasureSpec::parse("ef:0.25"),
          MeasureSpec::parse("ef:0.5"),  MeasureSpec::parse("ef:0.75"),
          MeasureSpec::parse("ef:1")};
}

namespace detail {

inline void parallel_for(std::size_t count, int workers,
                         const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  const int n_threads =
      std::max(1, std::min<int>(workers, static_cast<int>(count)));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&] {
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) break;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline std::string format4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline std::string format6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "missing";
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(in.gcount())), h);
  return hex64(h);
}

inline std::string cache_digest(const std::filesystem::path& dir) {
  if (dir.empty() || !std::filesystem::exists(dir)) return "none";
  std::vector<std::filesystem::path> entries;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".json") entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : entries) {
    h = fnv1a64(p.filename().string(), h);
    h = fnv1a64(file_digest(p), h);
  }
  return hex64(h);
}

/// Row assembler for the two output syntaxes. Markdown gets a separator
/// row after the header; TSV is plain tab-separated.
class TableWriter {
public:
  explicit TableWriter(TableFormat format) : format_(format) {}

  void header(const std::vector<std::string>& cells) {
    row(cells);
    if (format_ == TableFormat::Markdown) {
      out_ += "|";
      for (std::size_t i = 0; i < cells.size(); ++i) out_ += " --- |";
      out_ += "\n";
    }
  }

  void row(const std::vector<std::string>& cells) {
    if (format_ == TableFormat::Markdown) {
      out_ += "|";
      for (const auto& c : cells) out_ += " " + c + " |";
      out_ += "\n";
    } else {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ += "\t";
        out_ += cells[i];
      }
      out_ += "\n";
    }
  }

  const std::string& str() const { return out_; }

private:
  TableFormat format_;
  std::string out_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Evaluation run
// ---------------------------------------------------------------------------

struct PerQueryEval {
  std::string id;
  std::size_t snippet_count = 0;  // 0 means the source had no results
  EvalResult eval;
  std::string hyp_bracket;
  std::string ref_bracket;
};

/// One (measure, source) cell of the experiment grid: the aggregate over
/// the included population plus the full per-query detail.
struct MeasureSourceResult {
  std::string measure;
  std::string source;
  QueryFlavor flavor = QueryFlavor::Base;
  std::vector<PerQueryEval> per_query;  // dataset order, every input query
  AggregateResult agg;                  // over included queries only
  std::size_t no_result_count = 0;
  std::size_t included_count = 0;
};

struct EvalRunResult {
  std::vector<std::string> source_ids;
  std::vector<std::string> measure_names;
  std::vector<MeasureSourceResult> cells;  // measure-major, sources within
};

namespace detail {

struct FetchedQuery {
  std::size_t snippet_count = 0;
  std::vector<Segmentation> hyps;  // one per measure
};

/// Fetches once per query and reuses the counted statistics across all
/// measures. Segmentation decisions are over the original token order even
/// for reversed submissions.
inline std::vector<FetchedQuery> segment_all(
    const std::vector<GoldRecord>& records,
    const std::vector<MeasureSpec>& measures, SnippetSource& source,
    SnippetCache* cache, QueryFlavor flavor, int max_snippets, bool refresh,
    int workers) {
  std::vector<FetchedQuery> out(records.size());
  parallel_for(records.size(), workers, [&](std::size_t i) {
    const Query& q = records[i].query;
    FetchedQuery fq;
    if (q.tokens.size() == 1) {
      for (std::size_t m = 0; m < measures.size(); ++m)
        fq.hyps.push_back(Segmentation::singletons(q));
      out[i] = std::move(fq);
      return;
    }
    const std::string text = flavor_text(q, flavor);
    SnippetSet set = cache ? cached_fetch(*cache, source, text, flavor, refresh)
                           : source.fetch(text, flavor);
    if (max_snippets >= 1 &&
        set.snippets.size() > static_cast<std::size_t>(max_snippets))
      set.snippets.resize(max_snippets);
    fq.snippet_count = set.snippets.size();
    if (set.snippets.empty()) {
      for (std::size_t m = 0; m < measures.size(); ++m)
        fq.hyps.push_back(Segmentation::singletons(q));
    } else {
      const NGramStats stats = count_ngrams(q, set);
      for (const MeasureSpec& measure : measures)
        fq.hyps.push_back(select_segments(q, score_all(measure, stats)));
    }
    out[i] = std::move(fq);
  });
  return out;
}

inline AggregateResult aggregate_included(
    const std::vector<PerQueryEval>& per_query, bool include_no_result,
    std::size_t* included_out) {
  std::vector<EvalResult> kept;
  for (const PerQueryEval& pq : per_query)
    if (include_no_result || pq.snippet_count > 0) kept.push_back(pq.eval);
  if (included_out) *included_out = kept.size();
  return aggregate(kept);  // throws EmptyEvaluationError when nothing is left
}

}  // namespace detail

/// Runs the (measure x source) grid for one flavor (the first in the spec's
/// flavor set). Every input query appears in the per-query detail; the
/// include_no_result switch only changes which queries enter the averages.
inline EvalRunResult run_eval(const ExperimentSpec& spec,
                              const std::vector<GoldRecord>& records) {
  if (spec.measures.empty()) throw Error("experiment needs at least one measure");
  if (spec.sources.empty()) throw Error("experiment needs at least one source");
  const QueryFlavor flavor =
      spec.flavors.empty() ? QueryFlavor::Base : spec.flavors.front();

  EvalRunResult run;
  for (const MeasureSpec& m : spec.measures) run.measure_names.push_back(m.name());

  std::unique_ptr<SnippetCache> cache;
  if (!spec.cache_dir.empty())
    cache = std::make_unique<SnippetCache>(spec.cache_dir);

  std::vector<std::vector<detail::FetchedQuery>> fetched_by_source;
  for (const SourceConfig& source_cfg : spec.sources) {
    SourceConfig cfg = source_cfg;
    cfg.max_snippets = spec.max_snippets;
    auto source = make_source(cfg);
    run.source_ids.push_back(cfg.source_id);
    fetched_by_source.push_back(detail::segment_all(
        records, spec.measures, *source, cache.get(), flavor,
        spec.max_snippets, spec.refresh, spec.workers));
  }

  for (std::size_t m = 0; m < spec.measures.size(); ++m) {
    for (std::size_t s = 0; s < spec.sources.size(); ++s) {
      MeasureSourceResult cell;
      cell.measure = run.measure_names[m];
      cell.source = run.source_ids[s];
      cell.flavor = flavor;
      for (std::size_t i = 0; i < records.size(); ++i) {
        const detail::FetchedQuery& fq = fetched_by_source[s][i];
        PerQueryEval pq;
        pq.id = records[i].query.id;
        pq.snippet_count = fq.snippet_count;
        pq.eval = evaluate(fq.hyps[m], records[i].reference);
        pq.hyp_bracket = fq.hyps[m].bracket_form();
        pq.ref_bracket = records[i].reference.bracket_form();
        if (pq.snippet_count == 0) ++cell.no_result_count;
        cell.per_query.push_back(std::move(pq));
      }
      cell.agg = detail::aggregate_included(cell.per_query,
                                            spec.include_no_result,
                                            &cell.included_count);
      run.cells.push_back(std::move(cell));
    }
  }
  return run;
}

// ---------------------------------------------------------------------------
// Tables and dumps
// ---------------------------------------------------------------------------

/// The measure-by-source table (one row per measure and source, P/R/F).
inline std::string render_measure_table(const EvalRunResult& run,
                                        TableFormat format) {
  detail::TableWriter w(format);
  w.header({"measure", "source", "queries", "no_result", "precision", "recall",
            "paper_f", "f1"});
  for (const MeasureSourceResult& cell : run.cells) {
    w.row({cell.measure, cell.source, std::to_string(cell.included_count),
           std::to_string(cell.no_result_count),
           detail::format4(cell.agg.precision), detail::format4(cell.agg.recall),
           detail::format4(cell.agg.paper_f), detail::format4(cell.agg.f1)});
  }
  return w.str();
}

/// The per-source average table: each source's mean P and R over the
/// measure rows, with F the arithmetic mean of the two averages.
inline std::string render_source_table(const EvalRunResult& run,
                                       TableFormat format) {
  detail::TableWriter w(format);
  w.header({"source", "measures", "precision", "recall", "paper_f"});
  for (const std::string& source : run.source_ids) {
    double p = 0, r = 0;
    std::size_t rows = 0;
    for (const MeasureSourceResult& cell : run.cells) {
      if (cell.source != source) continue;
      p += cell.agg.precision;
      r += cell.agg.recall;
      ++rows;
    }
    if (rows == 0) continue;
    p /= rows;
    r /= rows;
    w.row({source, std::to_string(rows), detail::format4(p), detail::format4(r),
           detail::format4((p + r) / 2.0)});
  }
  return w.str();
}

/// Per-query dump: one line per input query, preceded by comment lines
/// naming the run and the queries whose source had no results. Everything
/// in the aggregate tables is recomputable from these lines.
inline std::string render_per_query_dump(const MeasureSourceResult& cell,
                                         const std::filesystem::path& dataset,
                                         bool include_no_result) {
  std::string out;
  out += "# dataset: " + dataset.string() + "\n";
  out += "# source: " + cell.source + "\n";
  out += "# measure: " + cell.measure + "\n";
  out += "# flavor: " + std::string(flavor_name(cell.flavor)) + "\n";
  out += "# included: " + std::to_string(cell.included_count) + " of " +
         std::to_string(cell.per_query.size()) +
         (include_no_result ? "" : " (no-result queries excluded)") + "\n";
  if (cell.no_result_count > 0) {
    out += "# no_result_ids:";
    for (const PerQueryEval& pq : cell.per_query)
      if (pq.snippet_count == 0) out += " " + pq.id;
    out += "\n";
  }
  out += "# columns: id precision recall f1 paper_f hypothesis reference\n";
  for (const PerQueryEval& pq : cell.per_query) {
    out += pq.id + "\t" + detail::format6(pq.eval.precision) + "\t" +
           detail::format6(pq.eval.recall) + "\t" +
           detail::format6(pq.eval.f1) + "\t" +
           detail::format6(pq.eval.paper_f) + "\t" + pq.hyp_bracket + "\t" +
           pq.ref_bracket + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bias run
// ---------------------------------------------------------------------------

struct BiasMeasureRow {
  std::string measure;
  double f_base = 0;
  double f_quoted = 0;
  double f_reversed = 0;
};

struct BiasSourceResult {
  std::string source_id;
  std::size_t population = 0;  // queries with results under all three flavors
  std::size_t excluded = 0;
  std::vector<BiasMeasureRow> by_measure;
  double quoted_delta = 0;    // mean over measures of f_quoted - f_base
  double reversed_delta = 0;  // mean over measures of f_reversed - f_base
  // per query: snippet counts under base/quoted/reversed, dataset order
  std::vector<std::array<std::size_t, 3>> snippet_counts;
};

struct BiasRunResult {
  std::vector<std::string> measure_names;
  std::vector<BiasSourceResult> sources;
};

/// The bias experiment: every query is submitted under all three flavors
/// and each measure is scored per flavor. Deltas are computed on the
/// intersection of queries that obtained results under every flavor, since
/// quoting shrinks result counts and that shift would otherwise be
/// attributed to the flavor itself.
inline BiasRunResult run_bias(const ExperimentSpec& spec,
                              const std::vector<GoldRecord>& records) {
  if (spec.measures.empty()) throw Error("experiment needs at least one measure");
  if (spec.sources.empty()) throw Error("experiment needs at least one source");
  constexpr std::array<QueryFlavor, 3> kFlavors = {
      QueryFlavor::Base, QueryFlavor::Quoted, QueryFlavor::Reversed};

  BiasRunResult run;
  for (const MeasureSpec& m : spec.measures) run.measure_names.push_back(m.name());

  std::unique_ptr<SnippetCache> cache;
  if (!spec.cache_dir.empty())
    cache = std::make_unique<SnippetCache>(spec.cache_dir);

  for (const SourceConfig& source_cfg : spec.sources) {
    SourceConfig cfg = source_cfg;
    cfg.max_snippets = spec.max_snippets;
    auto source = make_source(cfg);

    std::array<std::vector<detail::FetchedQuery>, 3> by_flavor;
    for (std::size_t f = 0; f < kFlavors.size(); ++f)
      by_flavor[f] = detail::segment_all(records, spec.measures, *source,
                                         cache.get(), kFlavors[f],
                                         spec.max_snippets, spec.refresh,
                                         spec.workers);

    BiasSourceResult result;
    result.source_id = cfg.source_id;
    std::vector<std::size_t> population_idx;
    for (std::size_t i = 0; i < records.size(); ++i) {
      result.snippet_counts.push_back({by_flavor[0][i].snippet_count,
                                       by_flavor[1][i].snippet_count,
                                       by_flavor[2][i].snippet_count});
      const bool everywhere = by_flavor[0][i].snippet_count > 0 &&
                              by_flavor[1][i].snippet_count > 0 &&
                              by_flavor[2][i].snippet_count > 0;
      if (everywhere) population_idx.push_back(i);
    }
    result.population = population_idx.size();
    result.excluded = records.size() - population_idx.size();
    if (population_idx.empty())
      throw EmptyEvaluationError(
          "no query obtained results under all flavors for source " +
          cfg.source_id);

    for (std::size_t m = 0; m < spec.measures.size(); ++m) {
      BiasMeasureRow row;
      row.measure = run.measure_names[m];
      std::array<double, 3> f{};
      for (std::size_t fl = 0; fl < kFlavors.size(); ++fl) {
        std::vector<EvalResult> evals;
        for (std::size_t i : population_idx)
          evals.push_back(
              evaluate(by_flavor[fl][i].hyps[m], records[i].reference));
        f[fl] = aggregate(evals).paper_f;
      }
      row.f_base = f[0];
      row.f_quoted = f[1];
      row.f_reversed = f[2];
      result.quoted_delta += row.f_quoted - row.f_base;
      result.reversed_delta += row.f_reversed - row.f_base;
      result.by_measure.push_back(row);
    }
    result.quoted_delta /= static_cast<double>(spec.measures.size());
    result.reversed_delta /= static_cast<double>(spec.measures.size());
    run.sources.push_back(std::move(result));
  }
  return run;
}

/// Per-source average F deltas for the quoted (best) and reversed (worst)
/// submission scenarios.
inline std::string render_bias_summary(const BiasRunResult& run,
                                       TableFormat format) {
  detail::TableWriter w(format);
  w.header({"source", "population", "excluded", "quoted_delta",
            "reversed_delta"});
  for (const BiasSourceResult& s : run.sources)
    w.row({s.source_id, std::to_string(s.population),
           std::to_string(s.excluded), detail::format4(s.quoted_delta),
           detail::format4(s.reversed_delta)});
  return w.str();
}

inline std::string render_bias_by_measure(const BiasRunResult& run,
                                          TableFormat format) {
  detail::TableWriter w(format);
  w.header({"source", "measure", "f_base", "f_quoted", "f_reversed",
            "quoted_delta", "reversed_delta"});
  for (const BiasSourceResult& s : run.sources)
    for (const BiasMeasureRow& row : s.by_measure)
      w.row({s.source_id, row.measure, detail::format4(row.f_base),
             detail::format4(row.f_quoted), detail::format4(row.f_reversed),
             detail::format4(row.f_quoted - row.f_base),
             detail::format4(row.f_reversed - row.f_base)});
  return w.str();
}

/// Which queries entered the delta population, with their per-flavor
/// result counts.
inline std::string render_bias_population(const BiasRunResult& run,
                                          const std::vector<GoldRecord>& records) {
  std::string out = "# columns: source id base_snippets quoted_snippets "
                    "reversed_snippets included\n";
  for (const BiasSourceResult& s : run.sources) {
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& counts = s.snippet_counts[i];
      const bool included = counts[0] > 0 && counts[1] > 0 && counts[2] > 0;
      out += s.source_id + "\t" + records[i].query.id + "\t" +
             std::to_string(counts[0]) + "\t" + std::to_string(counts[1]) +
             "\t" + std::to_string(counts[2]) + "\t" +
             (included ? "yes" : "no") + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest and output files
// ---------------------------------------------------------------------------

inline nlohmann::json build_manifest(const ExperimentSpec& spec,
                                     std::string_view command,
                                     std::size_t record_count) {
  nlohmann::json m;
  m["command"] = std::string(command);
  m["dataset"] = {{"path", spec.dataset.string()},
                  {"digest", detail::file_digest(spec.dataset)},
                  {"queries", record_count}};
  auto& sources = m["sources"] = nlohmann::json::array();
  for (const SourceConfig& s : spec.sources) {
    nlohmann::json j;
    j["id"] = s.source_id;
    if (s.kind == SourceKind::Fixture) {
      j["kind"] = "fixture";
      j["path"] = s.fixture_path;
      j["digest"] = detail::file_digest(s.fixture_path);
    } else {
      j["kind"] = "http";
      j["endpoint"] = s.endpoint_template;
      j["selector"] = s.snippet_selector;
    }
    sources.push_back(std::move(j));
  }
  auto& measures = m["measures"] = nlohmann::json::array();
  for (const MeasureSpec& ms : spec.measures) measures.push_back(ms.name());
  auto& flavors = m["flavors"] = nlohmann::json::array();
  for (QueryFlavor f : spec.flavors) flavors.push_back(std::string(flavor_name(f)));
  m["include_no_result"] = spec.include_no_result;
  m["max_snippets"] = spec.max_snippets;
  m["cache"] = {{"dir", spec.cache_dir.string()},
                {"digest", detail::cache_digest(spec.cache_dir)}};
  m["created_at"] = now_unix_seconds();
  return m;
}

namespace detail {

inline void write_file(const std::filesystem::path& path,
                       std::string_view content) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("cannot write " + path.string());
}

inline std::string sanitize_component(std::string name) {
  for (char& c : name)
    if (c == ':' || c == '/' || c == '\\') c = '-';
  return name;
}

}  // namespace detail

/// Writes tables, per-query dumps and the manifest under spec.out_dir.
inline void write_eval_outputs(const ExperimentSpec& spec,
                               const EvalRunResult& run) {
  std::filesystem::create_directories(spec.out_dir);
  const char* ext = spec.format == TableFormat::Markdown ? ".md" : ".tsv";
  detail::write_file(spec.out_dir / ("measures_by_source" + std::string(ext)),
                     render_measure_table(run, spec.format));
  detail::write_file(spec.out_dir / ("source_averages" + std::string(ext)),
                     render_source_table(run, spec.format));
  for (const MeasureSourceResult& cell : run.cells) {
    const std::string name = "per_query." + detail::sanitize_component(cell.source) +
                             "." + detail::sanitize_component(cell.measure) + ".tsv";
    detail::write_file(spec.out_dir / name,
                       render_per_query_dump(cell, spec.dataset,
                                             spec.include_no_result));
  }
  detail::write_file(spec.out_dir / "manifest.json",
                     build_manifest(spec, "eval", run.cells.empty()
                                              ? 0
                                              : run.cells.front().per_query.size())
                             .dump(2) +
                         "\n");
}

inline void write_bias_outputs(const ExperimentSpec& spec,
                               const BiasRunResult& run,
                               const std::vector<GoldRecord>& records) {
  std::filesystem::create_directories(spec.out_dir);
  const char* ext = spec.format == TableFormat::Markdown ? ".md" : ".tsv";
  detail::write_file(spec.out_dir / ("bias_summary" + std::string(ext)),
                     render_bias_summary(run, spec.format));
  detail::write_file(spec.out_dir / ("bias_by_measure" + std::string(ext)),
                     render_bias_by_measure(run, spec.format));
  detail::write_file(spec.out_dir / "bias_population.tsv",
                     render_bias_population(run, records));
  detail::write_file(spec.out_dir / "manifest.json",
                     build_manifest(spec, "bias", records.size()).dump(2) + "\n");
}

/// Fetches every (query, flavor, source) combination through the cache so
/// later runs touch no source. Returns one line of counts per pass.
struct WarmupStat {
  std::string source_id;
  QueryFlavor flavor = QueryFlavor::Base;
  std::size_t queries = 0;
  std::size_t empty = 0;
};

inline std::vector<WarmupStat> warm_cache(const ExperimentSpec& spec,
                                          const std::vector<GoldRecord>& records) {
  if (spec.cache_dir.empty()) throw Error("cache warmup needs a cache directory");
  SnippetCache cache(spec.cache_dir);
  std::vector<WarmupStat> stats;
  for (const SourceConfig& source_cfg : spec.sources) {
    SourceConfig cfg = source_cfg;
    cfg.max_snippets = spec.max_snippets;
    auto source = make_source(cfg);
    for (const QueryFlavor flavor : spec.flavors) {
      std::atomic<std::size_t> empty{0};
      detail::parallel_for(records.size(), spec.workers, [&](std::size_t i) {
        const std::string text = flavor_text(records[i].query, flavor);
        const SnippetSet set =
            cached_fetch(cache, *source, text, flavor, spec.refresh);
        if (set.snippets.empty()) ++empty;
      });
      stats.push_back(
          WarmupStat{cfg.source_id, flavor, records.size(), empty.load()});
    }
  }
  return stats;
}

/// Loads an ExperimentSpec from its declarative JSON form. Fields not
/// present keep their defaults; the CLI applies flag overrides on top.
inline ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open experiment spec: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  ExperimentSpec spec;
  try {
    if (doc.contains("dataset"))
      spec.dataset = doc["dataset"].get<std::string>();
    if (doc.contains("measures")) {
      spec.measures.clear();
      for (const auto& m : doc["measures"])
        spec.measures.push_back(MeasureSpec::parse(m.get<std::string>()));
    }
    if (doc.contains("sources")) {
      for (const auto& s : doc["sources"]) {
        if (s.contains("fixture")) {
          SourceConfig cfg;
          cfg.kind = SourceKind::Fixture;
          cfg.fixture_path = s["fixture"].get<std::string>();
          cfg.source_id = s.value("id", std::filesystem::path(cfg.fixture_path)
                                            .stem()
                                            .string());
          spec.sources.push_back(std::move(cfg));
        } else if (s.contains("http")) {
          spec.sources.push_back(
              load_http_config(s["http"].get<std::string>(), s.value("id", "")));
        } else {
          throw ParseError(path.string() +
                           ": source entry needs a \"fixture\" or \"http\" key");
        }
      }
    }
    if (doc.contains("flavors")) {
      spec.flavors.clear();
      for (const auto& f : doc["flavors"])
        spec.flavors.push_back(parse_flavor(f.get<std::string>()));
    }
    if (doc.contains("include_no_result"))
      spec.include_no_result = doc["include_no_result"].get<bool>();
    if (doc.contains("format"))
      spec.format = parse_table_format(doc["format"].get<std::string>());
    if (doc.contains("max_snippets"))
      spec.max_snippets = doc["max_snippets"].get<int>();
    if (doc.contains("cache")) spec.cache_dir = doc["cache"].get<std::string>();
    if (doc.contains("out")) spec.out_dir = doc["out"].get<std::string>();
    if (doc.contains("workers")) spec.workers = doc["workers"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return spec;
}

}  // namespace qseg

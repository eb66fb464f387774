// qseg: segment search queries with snippet statistics and reproduce the
// evaluation and bias experiments over gold-segmented query logs.
//
//   qseg segment --measure ef:0.5 --source fixture:corpus.tsv "new york travel guides"
//   qseg eval --dataset gold.tsv --source alpha=fixture:a.tsv --out results/
//   qseg bias --dataset gold.tsv --source alpha=fixture:bias.tsv --out results/
//   qseg fetch-snippets --dataset gold.tsv --source web=http:cfg.json --cache .cache

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qseg/qseg.hpp"

namespace {

// Distinguishes missing/contradictory flags (exit 2) from runtime failures
// like unreadable files or unreachable sources (exit 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string validate_measure(const std::string& value) {
  try {
    qseg::MeasureSpec::parse(value);
  } catch (const qseg::ParseError& e) {
    return e.what();
  }
  return {};
}

std::string validate_source(const std::string& value) {
  std::string_view v = value;
  const std::size_t eq = v.find('=');
  const std::size_t colon = v.find(':');
  if (eq != std::string_view::npos && (colon == std::string_view::npos || eq < colon))
    v = v.substr(eq + 1);
  if (v.rfind("fixture:", 0) == 0 || v.rfind("http:", 0) == 0) return {};
  return "source must be [name=]fixture:<path> or [name=]http:<config.json>";
}

std::string validate_flavor(const std::string& value) {
  try {
    qseg::parse_flavor(value);
  } catch (const qseg::ParseError& e) {
    return e.what();
  }
  return {};
}

std::string validate_format(const std::string& value) {
  try {
    qseg::parse_table_format(value);
  } catch (const qseg::ParseError& e) {
    return e.what();
  }
  return {};
}

// Flags shared by the experiment subcommands. Values the user actually set
// override whatever a --spec file provided.
struct ExperimentFlags {
  std::string spec_file;
  std::string dataset;
  std::vector<std::string> measures;
  std::vector<std::string> sources;
  std::string flavor;
  std::string format;
  std::string cache_dir;
  std::string out_dir;
  int max_snippets = 10;
  int workers = 4;
  bool exclude_no_result = false;
  bool refresh = false;
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& flags,
                          bool with_flavor) {
  cmd->add_option("--spec", flags.spec_file,
                  "declarative experiment spec (JSON); flags override it")
      ->check(CLI::ExistingFile);
  cmd->add_option("--dataset", flags.dataset, "gold dataset file");
  cmd->add_option("--measure", flags.measures,
                  "measure: mi|scp|phi|dice|loglike|ef:<t> (repeatable; "
                  "default: all nine)")
      ->check(validate_measure);
  cmd->add_option("--source", flags.sources,
                  "snippet source: [name=]fixture:<path> or "
                  "[name=]http:<config.json> (repeatable)")
      ->check(validate_source);
  if (with_flavor)
    cmd->add_option("--flavor", flags.flavor,
                    "query flavor to submit: base|quoted|reversed")
        ->check(validate_flavor);
  cmd->add_option("--format", flags.format, "table format: tsv|markdown")
      ->check(validate_format);
  cmd->add_option("--cache", flags.cache_dir, "snippet cache directory");
  cmd->add_option("--out", flags.out_dir,
                  "directory for tables, per-query dumps and the manifest");
  cmd->add_option("--max-snippets", flags.max_snippets,
                  "snippets per query (default 10)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--workers", flags.workers,
                  "parallel fetches per source (default 4)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--exclude-no-result", flags.exclude_no_result,
                "drop queries with no results from the averages");
  cmd->add_flag("--refresh", flags.refresh,
                "bypass the cache and refetch every query");
}

qseg::ExperimentSpec build_spec(const ExperimentFlags& flags, bool with_flavor) {
  qseg::ExperimentSpec spec;
  if (!flags.spec_file.empty())
    spec = qseg::load_experiment_spec(flags.spec_file);
  if (!flags.dataset.empty()) spec.dataset = flags.dataset;
  if (!flags.measures.empty()) {
    spec.measures.clear();
    for (const std::string& m : flags.measures)
      spec.measures.push_back(qseg::MeasureSpec::parse(m));
  }
  if (spec.measures.empty()) spec.measures = qseg::default_measures();
  if (!flags.sources.empty()) {
    spec.sources.clear();
    for (const std::string& s : flags.sources)
      spec.sources.push_back(qseg::parse_source_spec(s));
  }
  if (with_flavor && !flags.flavor.empty())
    spec.flavors = {qseg::parse_flavor(flags.flavor)};
  if (!flags.format.empty()) spec.format = qseg::parse_table_format(flags.format);
  if (!flags.cache_dir.empty()) spec.cache_dir = flags.cache_dir;
  if (!flags.out_dir.empty()) spec.out_dir = flags.out_dir;
  spec.max_snippets = flags.max_snippets;
  spec.workers = flags.workers;
  if (flags.exclude_no_result) spec.include_no_result = false;
  spec.refresh = flags.refresh;
  if (spec.dataset.empty())
    throw UsageError("no dataset given (use --dataset or --spec)");
  if (spec.sources.empty())
    throw UsageError("no snippet source given (use --source or --spec)");
  return spec;
}

int run_segment(const std::string& query, const std::string& measure,
                const std::string& source_spec, const std::string& flavor,
                int max_snippets, const std::string& cache_dir, bool refresh) {
  qseg::SourceConfig cfg = qseg::parse_source_spec(source_spec);
  cfg.max_snippets = max_snippets;
  auto source = qseg::make_source(cfg);

  qseg::SegmenterConfig seg_cfg;
  seg_cfg.measure = qseg::MeasureSpec::parse(measure);
  seg_cfg.flavor = qseg::parse_flavor(flavor);
  seg_cfg.max_snippets = max_snippets;

  std::unique_ptr<qseg::SnippetCache> cache;
  if (!cache_dir.empty()) cache = std::make_unique<qseg::SnippetCache>(cache_dir);

  const qseg::Segmentation result =
      qseg::segment_query(query, seg_cfg, *source, cache.get(), refresh);
  std::cout << result.bracket_form() << "\n";
  return 0;
}

int run_eval(const ExperimentFlags& flags) {
  const qseg::ExperimentSpec spec = build_spec(flags, true);
  const std::vector<qseg::GoldRecord> records =
      qseg::load_gold_dataset(spec.dataset);
  if (records.empty())
    throw qseg::EmptyEvaluationError("dataset has no queries: " +
                                     spec.dataset.string());
  const qseg::EvalRunResult run = qseg::run_eval(spec, records);
  std::cout << qseg::render_measure_table(run, spec.format) << "\n"
            << qseg::render_source_table(run, spec.format);
  if (!spec.out_dir.empty()) {
    qseg::write_eval_outputs(spec, run);
    std::cerr << "wrote " << spec.out_dir.string() << "\n";
  }
  return 0;
}

int run_bias(const ExperimentFlags& flags) {
  const qseg::ExperimentSpec spec = build_spec(flags, false);
  const std::vector<qseg::GoldRecord> records =
      qseg::load_gold_dataset(spec.dataset);
  if (records.empty())
    throw qseg::EmptyEvaluationError("dataset has no queries: " +
                                     spec.dataset.string());
  const qseg::BiasRunResult run = qseg::run_bias(spec, records);
  std::cout << qseg::render_bias_summary(run, spec.format) << "\n"
            << qseg::render_bias_by_measure(run, spec.format);
  if (!spec.out_dir.empty()) {
    qseg::write_bias_outputs(spec, run, records);
    std::cerr << "wrote " << spec.out_dir.string() << "\n";
  }
  return 0;
}

int run_fetch(const ExperimentFlags& flags, const std::vector<std::string>& flavors) {
  qseg::ExperimentSpec spec = build_spec(flags, false);
  if (spec.cache_dir.empty()) throw UsageError("fetch-snippets needs --cache");
  spec.flavors.clear();
  for (const std::string& f : flavors) spec.flavors.push_back(qseg::parse_flavor(f));
  if (spec.flavors.empty()) spec.flavors = {qseg::QueryFlavor::Base};

  const std::vector<qseg::GoldRecord> records =
      qseg::load_gold_dataset(spec.dataset);
  for (const qseg::WarmupStat& stat : qseg::warm_cache(spec, records)) {
    std::cout << "source=" << stat.source_id
              << " flavor=" << qseg::flavor_name(stat.flavor)
              << " queries=" << stat.queries << " empty=" << stat.empty << "\n";
  }
  std::cout << "cache entries: " << qseg::SnippetCache(spec.cache_dir).entry_count()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"On-the-fly query segmentation from search snippets"};
  app.require_subcommand(1);

  // segment
  auto* segment = app.add_subcommand("segment", "segment one query");
  std::string query, seg_measure = "ef:0.5", seg_source, seg_flavor = "base",
                     seg_cache;
  int seg_max_snippets = 10;
  bool seg_refresh = false;
  segment->add_option("query", query, "query text")->required();
  segment->add_option("--measure", seg_measure, "mi|scp|phi|dice|loglike|ef:<t>")
      ->check(validate_measure);
  segment->add_option("--source", seg_source, "[name=]fixture:<path> or [name=]http:<cfg.json>")
      ->required()
      ->check(validate_source);
  segment->add_option("--flavor", seg_flavor, "base|quoted|reversed")
      ->check(validate_flavor);
  segment->add_option("--max-snippets", seg_max_snippets, "snippets per query")
      ->check(CLI::PositiveNumber);
  segment->add_option("--cache", seg_cache, "snippet cache directory");
  segment->add_flag("--refresh", seg_refresh, "bypass the cache");

  // eval
  auto* eval = app.add_subcommand(
      "eval", "run the measure x source evaluation over a gold dataset");
  ExperimentFlags eval_flags;
  add_experiment_flags(eval, eval_flags, true);

  // bias
  auto* bias = app.add_subcommand(
      "bias", "compare quoted and reversed submissions against the base case");
  ExperimentFlags bias_flags;
  add_experiment_flags(bias, bias_flags, false);

  // fetch-snippets
  auto* fetch = app.add_subcommand("fetch-snippets",
                                   "warm the snippet cache for a dataset");
  ExperimentFlags fetch_flags;
  std::vector<std::string> fetch_flavors;
  add_experiment_flags(fetch, fetch_flags, false);
  fetch->add_option("--flavors", fetch_flavors,
                    "flavors to warm (default: base)")
      ->check(validate_flavor);

  try {
    app.parse(argc, argv);
    if (segment->parsed())
      return run_segment(query, seg_measure, seg_source, seg_flavor,
                         seg_max_snippets, seg_cache, seg_refresh);
    if (eval->parsed()) return run_eval(eval_flags);
    if (bias->parsed()) return run_bias(bias_flags);
    if (fetch->parsed()) return run_fetch(fetch_flags, fetch_flavors);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  } catch (const qseg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

#pragma once

// Umbrella header. Pulls in the whole pipeline: tokenization and gold
// datasets, snippet sources and the cache, n-gram counting, association
// measures, the segmenter, join-based evaluation and the experiment
// harness. Include individual headers instead when build time matters
// (http_source.hpp carries the HTTP client).

#include "qseg/cache.hpp"
#include "qseg/core.hpp"
#include "qseg/errors.hpp"
#include "qseg/eval.hpp"
#include "qseg/experiment.hpp"
#include "qseg/http_source.hpp"
#include "qseg/measures.hpp"
#include "qseg/ngram_stats.hpp"
#include "qseg/segmenter.hpp"
#include "qseg/snippets.hpp"

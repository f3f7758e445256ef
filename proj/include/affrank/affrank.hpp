#pragma once

// Umbrella for the whole pipeline: corpus ingestion through ranking
// evaluation and model selection.

#include "affrank/aif.hpp"
#include "affrank/backtest.hpp"
#include "affrank/errors.hpp"
#include "affrank/features.hpp"
#include "affrank/forecast.hpp"
#include "affrank/gbdt.hpp"
#include "affrank/mixed_model.hpp"
#include "affrank/ndcg.hpp"
#include "affrank/prob_model.hpp"
#include "affrank/records.hpp"
#include "affrank/relevance.hpp"
#include "affrank/sampling.hpp"
#include "affrank/similarity.hpp"
#include "affrank/snapshot_io.hpp"
#include "affrank/strings.hpp"
#include "affrank/table_reader.hpp"

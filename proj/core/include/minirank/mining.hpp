#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "minirank/biencoder.hpp"
#include "minirank/corpus.hpp"
#include "minirank/index.hpp"
#include "minirank/mining_types.hpp"

namespace minirank {

struct MiningConfig {
    int n_negatives = 4;
    double perc_margin = 0.95;   // max negative score as a fraction of the positive's
    int candidate_pool_k = 100;  // teacher top-k considered
    uint64_t seed = 0;           // backfill sampling
};

struct MiningResult {
    std::vector<MinedExample> examples;  // ordered by query id
    int skipped_no_positive = 0;
    int threshold_skipped = 0;  // positives with non-positive teacher score
};

/// TopK-PercPos hard-negative mining: retrieve candidate_pool_k by teacher
/// similarity, drop judged-relevant ids and candidates scoring at or above
/// perc_margin * positive score, keep the top n_negatives of the remainder.
/// Shortfalls are backfilled with seeded random non-relevant passages.
MiningResult mine_negatives(const EmbedderModel& teacher, const Vocab& vocab,
                            const VectorIndex& index, const Dataset& dataset,
                            const MiningConfig& cfg);

/// JSON-lines persistence: {"query_id":..., "pos":..., "negs":[...], "scores":{...}}.
void save_mined(const std::vector<MinedExample>& examples, const std::string& path);
std::vector<MinedExample> load_mined(const std::string& path);

} // namespace minirank

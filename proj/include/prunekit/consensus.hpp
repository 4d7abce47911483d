#pragma once

#include <map>
#include <string>
#include <vector>

#include "prunekit/layer_ref.hpp"
#include "prunekit/metrics.hpp"

namespace prunekit {

/// One raw metric evaluation of one candidate layer.
struct ScoreRow {
  LayerRef layer;
  std::string metric_name;
  double raw_score = 0.0;
  Orientation orientation = Orientation::distance;
};

/// Per-metric ranking: rank 1 marks the layer whose candidate representation
/// is most similar to the reference. Ranks are a permutation of 1..k.
struct RankTable {
  std::string metric_name;
  std::map<LayerRef, int> ranks;
};

/// Summed ranks across metrics; the consensus importance signal.
struct ConsensusScore {
  std::map<LayerRef, int> totals;
};

/// Ranks the rows of a single metric. Effective distance is the raw score
/// for distance orientation and its negation for similarity orientation;
/// ties go to the smaller layer index.
RankTable scores_to_ranks(const std::vector<ScoreRow>& rows);

/// Sums ranks layer-wise across tables covering the identical layer set.
ConsensusScore aggregate_ranks(const std::vector<RankTable>& tables);

/// Layer with the minimal rank total; ties go to the smaller layer index.
LayerRef select_victim(const ConsensusScore& score);

}  // namespace prunekit

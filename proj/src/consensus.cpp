#include "prunekit/consensus.hpp"

#include <algorithm>
#include <cmath>

namespace prunekit {

RankTable scores_to_ranks(const std::vector<ScoreRow>& rows) {
  if (rows.empty()) fail(ErrorKind::InvalidParameter, "no score rows");

  RankTable table;
  table.metric_name = rows.front().metric_name;
  for (const auto& row : rows) {
    if (row.metric_name != table.metric_name) {
      fail(ErrorKind::InvalidParameter, "scores_to_ranks expects rows of a single metric");
    }
    if (!std::isfinite(row.raw_score)) {
      fail(ErrorKind::InvalidParameter, "non-finite raw score for " + row.layer.str());
    }
  }

  std::vector<const ScoreRow*> order;
  order.reserve(rows.size());
  for (const auto& row : rows) order.push_back(&row);

  auto effective = [](const ScoreRow& r) {
    return r.orientation == Orientation::distance ? r.raw_score : -r.raw_score;
  };
  std::sort(order.begin(), order.end(), [&](const ScoreRow* a, const ScoreRow* b) {
    double ea = effective(*a), eb = effective(*b);
    if (ea != eb) return ea < eb;
    return a->layer < b->layer;
  });

  int rank = 1;
  for (const ScoreRow* row : order) {
    if (!table.ranks.emplace(row->layer, rank).second) {
      fail(ErrorKind::DuplicateLayer, "duplicate layer " + row->layer.str());
    }
    ++rank;
  }
  return table;
}

ConsensusScore aggregate_ranks(const std::vector<RankTable>& tables) {
  if (tables.empty()) fail(ErrorKind::InvalidParameter, "no rank tables");

  ConsensusScore score;
  for (const auto& [layer, rank] : tables.front().ranks) {
    (void)rank;
    score.totals[layer] = 0;
  }
  for (const auto& table : tables) {
    if (table.ranks.size() != score.totals.size()) {
      fail(ErrorKind::InconsistentTables, "rank tables cover different layer sets");
    }
    for (const auto& [layer, rank] : table.ranks) {
      auto it = score.totals.find(layer);
      if (it == score.totals.end()) {
        fail(ErrorKind::InconsistentTables,
             "layer " + layer.str() + " missing from another table");
      }
      it->second += rank;
    }
  }
  return score;
}

LayerRef select_victim(const ConsensusScore& score) {
  if (score.totals.empty()) fail(ErrorKind::NoEligibleLayers, "empty consensus score");
  // std::map iterates in LayerRef order, so the first minimum wins ties.
  auto best = score.totals.begin();
  for (auto it = std::next(best); it != score.totals.end(); ++it) {
    if (it->second < best->second) best = it;
  }
  return best->first;
}

}  // namespace prunekit

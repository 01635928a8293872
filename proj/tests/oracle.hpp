#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "adamf/evaluation.hpp"

namespace adamf::testing {

/// Filtered rank by exhaustive enumeration: score every candidate, drop known
/// triples other than the target, sort, and locate the target score.
inline std::size_t oracle_rank(const Model& model, const ParameterStore& params,
                               const TripleDataset& ds, const Triple& query, QuerySide side,
                               TieBreak ties = TieBreak::optimistic) {
  const EntityTable table = model.embed_all(params);
  std::set<Triple> known;
  for (const auto* split : {&ds.train, &ds.valid, &ds.test}) known.insert(split->begin(), split->end());
  auto candidate = [&](EntityId c) {
    Triple t = query;
    (side == QuerySide::tail ? t.tail : t.head) = c;
    return t;
  };
  auto score = [&](const Triple& t) {
    return rotate_distance(table.joint.row(t.head), table.phase.row(t.relation),
                           table.joint.row(t.tail));
  };
  std::vector<double> others;
  for (EntityId c = 0; c < ds.num_entities(); ++c) {
    const Triple t = candidate(c);
    if (t == query || known.count(t)) continue;
    others.push_back(score(t));
  }
  std::sort(others.begin(), others.end());
  const double target = score(query);
  const auto pos = ties == TieBreak::optimistic
                       ? std::lower_bound(others.begin(), others.end(), target)
                       : std::upper_bound(others.begin(), others.end(), target);
  return static_cast<std::size_t>(pos - others.begin()) + 1;
}

}  // namespace adamf::testing

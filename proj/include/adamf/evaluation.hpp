#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adamf/kgdata.hpp"
#include "adamf/model.hpp"
#include "adamf/params.hpp"

namespace adamf {

/// Optimistic counts only strictly better candidates; pessimistic also counts
/// ties.
enum class TieBreak : std::uint8_t { optimistic, pessimistic };

std::string_view to_string(TieBreak t);
TieBreak parse_tie_break(std::string_view text);

/// Which slot of the triple is being predicted.
enum class QuerySide : std::uint8_t { head, tail };

/// Snapshot of all joint embeddings for filtered link prediction. Lower
/// distance ranks higher.
class Ranker {
 public:
  Ranker(const Model& model, const ParameterStore& params, const TripleDataset& dataset,
         TieBreak ties = TieBreak::optimistic);

  /// Filtered rank of the true entity for (?, r, t) or (h, r, ?).
  std::size_t rank(const Triple& triple, QuerySide side) const;
  /// Distance of every candidate for the query, indexed by entity.
  std::vector<double> candidate_scores(const Triple& triple, QuerySide side) const;
  double distance(EntityId head, RelationId relation, EntityId tail) const;

  const EntityTable& table() const { return table_; }
  const Model& model() const { return *model_; }
  const TripleDataset& dataset() const { return *dataset_; }

 private:
  const Model* model_;
  const TripleDataset* dataset_;
  TieBreak ties_;
  EntityTable table_;
};

/// rank_query: filtered rank of `target` for the query formed by `triple`
/// with `side` blanked. The target replaces that slot.
std::size_t rank_query(const Ranker& ranker, const Triple& triple, QuerySide side);

struct RankedTriple {
  Triple triple;
  std::size_t head_rank = 0;
  std::size_t tail_rank = 0;
};

struct Metrics {
  std::size_t count = 0;  // test triples (each contributes two queries)
  double mrr = 0.0;
  std::map<std::size_t, double> hits;  // K -> Hit@K
};

/// MRR and Hit@K averaged over both prediction directions, i.e. divided by
/// twice the number of triples.
Metrics aggregate_metrics(std::span<const RankedTriple> ranks, std::span<const std::size_t> ks);

struct RelationMetrics {
  RelationId relation;
  Metrics metrics;
};

struct RankReport {
  std::vector<std::size_t> ks;
  std::vector<RankedTriple> ranks;  // in split order
  Metrics overall;
  std::vector<RelationMetrics> per_relation;  // by relation id
};

inline const std::vector<std::size_t> kDefaultKs = {1, 3, 10};

/// Ranks every triple of `split` in both directions. `threads` > 1 fans the
/// queries out; results are identical to the serial run.
RankReport evaluate(const Ranker& ranker, std::span<const Triple> split,
                    std::span<const std::size_t> ks = kDefaultKs, std::size_t threads = 1);

/// JSON: {mrr, hits: {"1": .., ...}, n_test, per_relation: [...]}
std::string report_json(const RankReport& report, const Vocab& vocab);
/// TSV: head, relation, tail, head_rank, tail_rank with a header line.
std::string ranks_tsv(const RankReport& report, const Vocab& vocab);

struct WeightRow {
  RelationId relation;
  std::size_t count = 0;
  double alpha_s = 0.0;
  double alpha_v = 0.0;
  double alpha_t = 0.0;
};

struct WeightReport {
  std::vector<WeightRow> rows;  // by count descending, then relation id
};

/// Mean fusion weights of the head and tail entities of each relation's
/// triples in `split`. Modalities not fused report 0. Requires adaptive
/// fusion (InvalidInput otherwise) and a non-empty split.
WeightReport relation_weight_report(const Ranker& ranker, std::span<const Triple> split);

/// CSV with header `relation,count,alpha_s,alpha_v,alpha_t`.
std::string weight_report_csv(const WeightReport& report, const Vocab& vocab);

}  // namespace adamf

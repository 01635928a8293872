#include "adamf/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <thread>

#include "json.hpp"

#include "adamf/errors.hpp"

namespace adamf {

std::string_view to_string(TieBreak t) {
  return t == TieBreak::optimistic ? "optimistic" : "pessimistic";
}

TieBreak parse_tie_break(std::string_view text) {
  if (text == "optimistic") return TieBreak::optimistic;
  if (text == "pessimistic") return TieBreak::pessimistic;
  throw ConfigError("tie_break must be 'optimistic' or 'pessimistic', got '" +
                    std::string(text) + "'");
}

Ranker::Ranker(const Model& model, const ParameterStore& params, const TripleDataset& dataset,
               TieBreak ties)
    : model_(&model), dataset_(&dataset), ties_(ties), table_(model.embed_all(params)) {}

double Ranker::distance(EntityId head, RelationId relation, EntityId tail) const {
  return rotate_distance(table_.joint.row(head), table_.phase.row(relation),
                         table_.joint.row(tail));
}

std::vector<double> Ranker::candidate_scores(const Triple& triple, QuerySide side) const {
  const std::size_t n = dataset_->num_entities();
  std::vector<double> scores(n);
  for (EntityId c = 0; c < n; ++c) {
    scores[c] = side == QuerySide::tail ? distance(triple.head, triple.relation, c)
                                        : distance(c, triple.relation, triple.tail);
  }
  return scores;
}

std::size_t Ranker::rank(const Triple& triple, QuerySide side) const {
  const std::size_t n = dataset_->num_entities();
  const EntityId target = side == QuerySide::tail ? triple.tail : triple.head;
  if (target >= n || triple.relation >= dataset_->num_relations() ||
      (side == QuerySide::tail ? triple.head : triple.tail) >= n) {
    throw ContractViolation("rank_query: triple outside the vocabulary");
  }
  const auto known = side == QuerySide::tail ? dataset_->filter.tails(triple.head, triple.relation)
                                             : dataset_->filter.heads(triple.relation, triple.tail);
  const double target_score = side == QuerySide::tail
                                  ? distance(triple.head, triple.relation, target)
                                  : distance(target, triple.relation, triple.tail);
  std::size_t better = 0;
  auto filtered = known.begin();
  for (EntityId c = 0; c < n; ++c) {
    while (filtered != known.end() && *filtered < c) ++filtered;
    if (c == target || (filtered != known.end() && *filtered == c)) continue;
    const double s = side == QuerySide::tail ? distance(triple.head, triple.relation, c)
                                             : distance(c, triple.relation, triple.tail);
    if (s < target_score || (ties_ == TieBreak::pessimistic && s == target_score)) ++better;
  }
  return better + 1;
}

std::size_t rank_query(const Ranker& ranker, const Triple& triple, QuerySide side) {
  return ranker.rank(triple, side);
}

Metrics aggregate_metrics(std::span<const RankedTriple> ranks, std::span<const std::size_t> ks) {
  Metrics m;
  m.count = ranks.size();
  for (auto k : ks) m.hits[k] = 0.0;
  if (ranks.empty()) return m;
  double reciprocal = 0.0;
  std::map<std::size_t, std::size_t> within;
  for (const auto& r : ranks) {
    reciprocal += 1.0 / static_cast<double>(r.head_rank) + 1.0 / static_cast<double>(r.tail_rank);
    for (auto k : ks) within[k] += (r.head_rank <= k) + (r.tail_rank <= k);
  }
  const double queries = 2.0 * static_cast<double>(ranks.size());
  m.mrr = reciprocal / queries;
  for (auto k : ks) m.hits[k] = static_cast<double>(within[k]) / queries;
  return m;
}

RankReport evaluate(const Ranker& ranker, std::span<const Triple> split,
                    std::span<const std::size_t> ks, std::size_t threads) {
  if (split.empty()) throw InvalidInput("evaluate: the split to evaluate is empty");
  RankReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.ranks.resize(split.size());

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      report.ranks[i] = {split[i], ranker.rank(split[i], QuerySide::head),
                         ranker.rank(split[i], QuerySide::tail)};
    }
  };
  threads = std::clamp<std::size_t>(threads, 1, split.size());
  if (threads == 1) {
    work(0, split.size());
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (split.size() + threads - 1) / threads;
    for (std::size_t begin = 0; begin < split.size(); begin += chunk) {
      pool.emplace_back(work, begin, std::min(split.size(), begin + chunk));
    }
  }

  report.overall = aggregate_metrics(report.ranks, ks);
  std::map<RelationId, std::vector<RankedTriple>> by_relation;
  for (const auto& r : report.ranks) by_relation[r.triple.relation].push_back(r);
  for (const auto& [rel, ranks] : by_relation) {
    report.per_relation.push_back({rel, aggregate_metrics(ranks, ks)});
  }
  return report;
}

namespace {

nlohmann::ordered_json metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["mrr"] = m.mrr;
  nlohmann::ordered_json hits = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.hits) hits[std::to_string(k)] = v;
  j["hits"] = hits;
  return j;
}

}  // namespace

std::string report_json(const RankReport& report, const Vocab& vocab) {
  nlohmann::ordered_json j = metrics_json(report.overall);
  j["n_test"] = report.overall.count;
  auto per_relation = nlohmann::ordered_json::array();
  for (const auto& r : report.per_relation) {
    nlohmann::ordered_json row;
    row["relation"] = vocab.relation_name(r.relation);
    row["count"] = r.metrics.count;
    auto m = metrics_json(r.metrics);
    row["mrr"] = m["mrr"];
    row["hits"] = m["hits"];
    per_relation.push_back(std::move(row));
  }
  j["per_relation"] = std::move(per_relation);
  return j.dump(2) + "\n";
}

std::string ranks_tsv(const RankReport& report, const Vocab& vocab) {
  std::string out = "head\trelation\ttail\thead_rank\ttail_rank\n";
  for (const auto& r : report.ranks) {
    out += vocab.entity_name(r.triple.head) + "\t" + vocab.relation_name(r.triple.relation) +
           "\t" + vocab.entity_name(r.triple.tail) + "\t" + std::to_string(r.head_rank) + "\t" +
           std::to_string(r.tail_rank) + "\n";
  }
  return out;
}

WeightReport relation_weight_report(const Ranker& ranker, std::span<const Triple> split) {
  const auto& model = ranker.model();
  if (model.config().fusion_mode != FusionMode::adaptive) {
    throw InvalidInput("relation weight report needs adaptive fusion; this model uses mean fusion");
  }
  if (split.empty()) throw InvalidInput("relation weight report: the split is empty");

  const auto& fused = model.fused_modalities();
  const auto& alpha = ranker.table().alpha;
  std::map<RelationId, WeightRow> rows;
  for (const auto& t : split) {
    auto& row = rows[t.relation];
    row.relation = t.relation;
    row.count += 1;
    for (std::size_t k = 0; k < fused.size(); ++k) {
      const double a = alpha.row(t.head)[k] + alpha.row(t.tail)[k];
      switch (fused[k]) {
        case Modality::structural: row.alpha_s += a; break;
        case Modality::visual: row.alpha_v += a; break;
        case Modality::textual: row.alpha_t += a; break;
      }
    }
  }
  WeightReport report;
  for (auto& [_, row] : rows) {
    const double n = 2.0 * static_cast<double>(row.count);
    row.alpha_s /= n;
    row.alpha_v /= n;
    row.alpha_t /= n;
    report.rows.push_back(row);
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const WeightRow& a, const WeightRow& b) { return a.count > b.count; });
  return report;
}

std::string weight_report_csv(const WeightReport& report, const Vocab& vocab) {
  std::string out = "relation,count,alpha_s,alpha_v,alpha_t\n";
  char buf[128];
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g,%.17g\n", row.count, row.alpha_s,
                  row.alpha_v, row.alpha_t);
    out += vocab.relation_name(row.relation);
    out += buf;
  }
  return out;
}

}  // namespace adamf

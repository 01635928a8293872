#include "adamf/training.hpp"

#include <cmath>
#include <numeric>

#include "json.hpp"

#include "adamf/checkpoint.hpp"
#include "adamf/errors.hpp"

namespace adamf {

void TrainConfig::validate() const {
  if (num_negatives < 1) throw ConfigError("num_negatives (K) must be >= 1");
  if (num_groups < 1) throw ConfigError("num_groups (L) must be >= 1");
  if (!(adv_lambda >= 0.0)) throw ConfigError("adv_lambda must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr_d > 0.0) || !(lr_g > 0.0)) throw ConfigError("learning rates must be > 0");
  if (mat_enabled && adversarial_patterns.empty()) {
    throw ConfigError("adversarial_patterns must be non-empty when MAT is enabled");
  }
}

NegativeBatch sample_negatives(const Triple& positive, std::size_t k, std::size_t num_entities,
                               SeededRng& rng, const FilterIndex* filter) {
  NegativeBatch out{positive, {}};
  out.negatives.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const bool corrupt_head = rng.uniform() < 0.5;
    auto draw = [&] {
      Triple neg = positive;
      (corrupt_head ? neg.head : neg.tail) = static_cast<EntityId>(rng.below(num_entities));
      return neg;
    };
    auto rejected = [&](const Triple& neg) {
      return neg == positive || (filter != nullptr && filter->contains(neg));
    };
    Triple neg = draw();
    if (rejected(neg)) neg = draw();
    out.negatives.push_back(neg);
  }
  return out;
}

std::vector<double> self_adv_weights(std::span<const double> scores, double beta,
                                     SelfAdvSign sign) {
  const double factor = sign == SelfAdvSign::negated ? -beta : beta;
  std::vector<double> logits(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) logits[i] = factor * scores[i];
  std::vector<double> p(scores.size());
  if (!p.empty()) kernels::softmax(logits, p);
  return p;
}

namespace {

NodeId mean_of(Tape& tape, std::span<const NodeId> terms, double sign) {
  return tape.scale(tape.sum(tape.concat(terms)), sign / static_cast<double>(terms.size()));
}

}  // namespace

NodeId loss_kgc(EntityEmbedder& embedder, std::span<const NegativeBatch> batch) {
  if (batch.empty()) throw ContractViolation("loss_kgc: empty batch");
  Tape& tape = embedder.tape();
  const Model& model = embedder.model();
  const auto& cfg = model.config();
  const NodeId gamma = tape.constant(cfg.gamma);

  std::vector<NodeId> per_triple;
  per_triple.reserve(batch.size());
  for (const auto& item : batch) {
    const auto& pos = item.positive;
    const NodeId pos_score =
        model.score(tape, embedder.real(pos.head).joint, pos.relation,
                    embedder.real(pos.tail).joint);
    const NodeId pos_term = tape.log_sigmoid(tape.subtract(gamma, pos_score));

    std::vector<NodeId> neg_scores;
    for (const auto& neg : item.negatives) {
      neg_scores.push_back(model.score(tape, embedder.real(neg.head).joint, neg.relation,
                                       embedder.real(neg.tail).joint));
    }
    const NodeId scores = tape.concat(neg_scores);
    const auto scores_value = tape.value(scores);
    const NodeId weights = tape.detach(tape.constant(self_adv_weights(
        std::vector<double>(scores_value.begin(), scores_value.end()), cfg.beta,
        cfg.selfadv_sign)));
    const NodeId neg_terms =
        tape.log_sigmoid(tape.subtract(scores,
                                       tape.constant(std::vector<double>(neg_scores.size(),
                                                                         cfg.gamma))));
    const NodeId neg_term = tape.sum(tape.multiply(weights, neg_terms));
    per_triple.push_back(tape.add(pos_term, neg_term));
  }
  return mean_of(tape, per_triple, -1.0);
}

NodeId loss_adv(EntityEmbedder& embedder, std::span<const Triple> positives,
                std::span<const std::vector<SyntheticTriple>> synthetic) {
  if (positives.empty()) throw ContractViolation("loss_adv: empty batch");
  if (positives.size() != synthetic.size()) {
    throw ContractViolation("loss_adv: one synthetic set per positive required");
  }
  Tape& tape = embedder.tape();
  const Model& model = embedder.model();
  const double gamma_value = model.config().gamma;
  const NodeId gamma = tape.constant(gamma_value);

  std::vector<NodeId> per_triple;
  per_triple.reserve(positives.size());
  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto& pos = positives[i];
    if (synthetic[i].empty()) throw ContractViolation("loss_adv: empty synthetic set");
    const NodeId pos_score =
        model.score(tape, embedder.real(pos.head).joint, pos.relation,
                    embedder.real(pos.tail).joint);
    const NodeId pos_term = tape.log_sigmoid(tape.subtract(gamma, pos_score));
    std::vector<NodeId> syn_scores;
    for (const auto& s : synthetic[i]) {
      syn_scores.push_back(model.score(tape, s.head.joint, s.relation, s.tail.joint));
    }
    const NodeId syn_terms = tape.log_sigmoid(tape.subtract(
        tape.concat(syn_scores),
        tape.constant(std::vector<double>(syn_scores.size(), gamma_value))));
    const NodeId syn_term =
        tape.scale(tape.sum(syn_terms), 1.0 / static_cast<double>(syn_scores.size()));
    per_triple.push_back(tape.add(pos_term, syn_term));
  }
  return mean_of(tape, per_triple, -1.0);
}

std::string epoch_log_json(const EpochLog& log) {
  nlohmann::ordered_json j;
  j["epoch"] = log.epoch;
  j["loss_kgc"] = log.loss_kgc;
  j["loss_adv"] = log.loss_adv ? nlohmann::ordered_json(*log.loss_adv) : nullptr;
  if (log.val_mrr) j["val_mrr"] = *log.val_mrr;
  return j.dump();
}

Trainer::Trainer(const Model& model, const TripleDataset& dataset, ParameterStore& params,
                 TrainConfig config)
    : model_(&model),
      dataset_(&dataset),
      params_(&params),
      config_(std::move(config)),
      shuffle_rng_(SeededRng(config_.seed).substream("shuffle")),
      negative_rng_(SeededRng(config_.seed).substream("negatives")),
      noise_rng_(SeededRng(config_.seed).substream("noise")) {
  config_.validate();
  if (config_.mat_enabled && model.generated_modalities().empty()) {
    throw ConfigError("MAT needs at least one of the visual/textual modalities");
  }
}

AdamOptions Trainer::adam(double lr) const {
  return {lr, config_.adam_beta1, config_.adam_beta2, config_.adam_eps};
}

StepLosses Trainer::train_step_discriminator(std::span<const Triple> batch) {
  std::vector<NegativeBatch> negatives;
  negatives.reserve(batch.size());
  const FilterIndex* filter = config_.filter_negatives ? &dataset_->filter : nullptr;
  for (const auto& t : batch) {
    negatives.push_back(sample_negatives(t, config_.num_negatives, dataset_->num_entities(),
                                         negative_rng_, filter));
  }

  Tape tape(*params_, {Group::discriminator});
  EntityEmbedder embedder(*model_, tape);
  const NodeId kgc = loss_kgc(embedder, negatives);
  StepLosses losses{tape.scalar(kgc), 0.0};
  NodeId total = kgc;
  if (config_.mat_enabled) {
    std::vector<std::vector<SyntheticTriple>> synthetic;
    synthetic.reserve(batch.size());
    for (const auto& t : batch) {
      synthetic.push_back(synthetic_triple_set(embedder, t, config_.num_groups,
                                               config_.adversarial_patterns, noise_rng_));
    }
    const NodeId adv = loss_adv(embedder, batch, synthetic);
    losses.adv = tape.scalar(adv);
    total = tape.add(kgc, tape.scale(adv, config_.adv_lambda));
  }
  if (!std::isfinite(tape.scalar(total))) {
    throw NumericError("non-finite discriminator loss (kgc=" + std::to_string(losses.kgc) +
                       ", adv=" + std::to_string(losses.adv) + ")");
  }
  const auto grads = tape.backward(total);
  adam_step(*params_, grads, Group::discriminator, adam(config_.lr_d));
  return losses;
}

double Trainer::train_step_generator(std::span<const Triple> batch) {
  if (!config_.mat_enabled) {
    throw ContractViolation("train_step_generator requires mat_enabled");
  }
  Tape tape(*params_, {Group::generator});
  EntityEmbedder embedder(*model_, tape);
  std::vector<std::vector<SyntheticTriple>> synthetic;
  synthetic.reserve(batch.size());
  for (const auto& t : batch) {
    synthetic.push_back(synthetic_triple_set(embedder, t, config_.num_groups,
                                             config_.adversarial_patterns, noise_rng_));
  }
  const NodeId adv = loss_adv(embedder, batch, synthetic);
  const double value = tape.scalar(adv);
  if (!std::isfinite(value)) {
    throw NumericError("non-finite generator loss");
  }
  // Gradient ascent on lambda * L_adv is descent on its negation.
  const auto grads = tape.backward(tape.scale(adv, -config_.adv_lambda));
  adam_step(*params_, grads, Group::generator, adam(config_.lr_g));
  return value;
}

std::vector<Triple> Trainer::next_epoch_order() {
  std::vector<Triple> order = dataset_->train;
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[shuffle_rng_.below(i)]);
  }
  return order;
}

EpochLog Trainer::run_epoch(std::size_t epoch) {
  const auto order = next_epoch_order();
  const std::span<const Triple> all(order);
  double kgc_total = 0.0;
  double adv_total = 0.0;
  std::size_t batches = 0;
  for (std::size_t begin = 0; begin < all.size(); begin += config_.batch_size) {
    const auto batch = all.subspan(begin, std::min(config_.batch_size, all.size() - begin));
    try {
      const auto losses = train_step_discriminator(batch);
      kgc_total += losses.kgc;
      adv_total += losses.adv;
      if (config_.mat_enabled) train_step_generator(batch);
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batches) +
                         ": " + e.what());
    }
    ++batches;
  }
  EpochLog log;
  log.epoch = epoch;
  log.loss_kgc = kgc_total / static_cast<double>(batches);
  if (config_.mat_enabled) log.loss_adv = adv_total / static_cast<double>(batches);
  return log;
}

TrainResult train(const Model& model, const TripleDataset& dataset, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  TrainResult result;
  ParameterStore params = model.init_params(config.seed);
  Trainer trainer(model, dataset, params, config);

  std::optional<ParameterStore> best;
  std::optional<double> best_mrr;
  std::optional<std::size_t> best_epoch;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochLog log = trainer.run_epoch(epoch);
    const bool validate = !dataset.valid.empty() &&
                          ((config.validate_every > 0 && epoch % config.validate_every == 0) ||
                           epoch == config.epochs);
    if (validate) {
      ParameterStore snapshot = params;
      round_to_checkpoint_precision(snapshot);
      const Ranker ranker(model, snapshot, dataset, config.tie_break);
      const double mrr = evaluate(ranker, dataset.valid, kDefaultKs, config.eval_threads).overall.mrr;
      log.val_mrr = mrr;
      if (!config.keep_best || !best_mrr || mrr > *best_mrr) {
        best_mrr = mrr;
        best_epoch = epoch;
        best = std::move(snapshot);
      }
    }
    if (on_epoch) on_epoch(log);
    result.log.push_back(log);
  }

  if (config.keep_best && best) {
    result.params = std::move(*best);
    result.selected_epoch = best_epoch;
    result.selected_val_mrr = best_mrr;
  } else {
    round_to_checkpoint_precision(params);
    result.params = std::move(params);
    if (best_epoch && *best_epoch == config.epochs) {
      result.selected_epoch = best_epoch;
      result.selected_val_mrr = best_mrr;
    }
  }
  return result;
}

}  // namespace adamf

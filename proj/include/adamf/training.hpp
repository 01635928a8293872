#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adamf/evaluation.hpp"
#include "adamf/kgdata.hpp"
#include "adamf/model.hpp"
#include "adamf/params.hpp"
#include "adamf/rng.hpp"
#include "adamf/tape.hpp"

namespace adamf {

struct TrainConfig {
  std::size_t num_negatives = 64;  // K
  std::size_t num_groups = 1;      // L, synthetic groups per positive
  double adv_lambda = 0.01;
  double lr_d = 1e-3;
  double lr_g = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 1024;
  std::size_t epochs = 1000;
  bool mat_enabled = true;
  PatternSet adversarial_patterns;
  bool filter_negatives = false;
  std::uint64_t seed = 0;
  std::size_t validate_every = 50;  // 0 disables periodic validation
  bool keep_best = true;
  std::size_t eval_threads = 1;
  TieBreak tie_break = TieBreak::optimistic;  // used by validation ranking

  void validate() const;
};

/// The K corruptions of one positive.
struct NegativeBatch {
  Triple positive;
  std::vector<Triple> negatives;
};

/// Corrupts head or tail (probability 1/2 each) with a uniform entity. A draw
/// equal to the original is redrawn once and then accepted. With `filter`,
/// draws forming a known true triple are also redrawn once.
NegativeBatch sample_negatives(const Triple& positive, std::size_t k, std::size_t num_entities,
                               SeededRng& rng, const FilterIndex* filter = nullptr);

/// Softmax of -beta*F (negated) or +beta*F (literal). Constants for the
/// gradient.
std::vector<double> self_adv_weights(std::span<const double> scores, double beta,
                                     SelfAdvSign sign);

/// Mean over the batch of -log s(gamma - F(pos)) - sum_i p_i log s(F(neg_i) - gamma).
NodeId loss_kgc(EntityEmbedder& embedder, std::span<const NegativeBatch> batch);

/// Mean over the batch of -log s(gamma - F(pos)) - mean_S log s(F(syn) - gamma).
/// `synthetic[i]` belongs to `positives[i]`.
NodeId loss_adv(EntityEmbedder& embedder, std::span<const Triple> positives,
                std::span<const std::vector<SyntheticTriple>> synthetic);

struct StepLosses {
  double kgc = 0.0;
  double adv = 0.0;  // 0 when MAT is off
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss_kgc = 0.0;
  std::optional<double> loss_adv;
  std::optional<double> val_mrr;
};

std::string epoch_log_json(const EpochLog& log);

/// Alternating discriminator/generator optimisation over one ParameterStore.
/// Randomness comes from per-purpose sub-streams of the configured seed
/// ("shuffle", "negatives", "noise"), so turning MAT off leaves the
/// discriminator's negative stream and batch order untouched.
class Trainer {
 public:
  Trainer(const Model& model, const TripleDataset& dataset, ParameterStore& params,
          TrainConfig config);

  /// L_kgc (+ lambda L_adv with generator outputs as constants), one Adam step
  /// on the discriminator group.
  StepLosses train_step_discriminator(std::span<const Triple> batch);
  /// Ascent on lambda L_adv with fresh noise, one Adam step on the generator
  /// group. Returns L_adv before the update.
  double train_step_generator(std::span<const Triple> batch);

  /// Seeded shuffle of the train split for the next epoch.
  std::vector<Triple> next_epoch_order();
  /// One pass over the shuffled train split. `epoch` is only used for
  /// diagnostics.
  EpochLog run_epoch(std::size_t epoch);

  const TrainConfig& config() const { return config_; }
  ParameterStore& params() { return *params_; }

 private:
  AdamOptions adam(double lr) const;

  const Model* model_;
  const TripleDataset* dataset_;
  ParameterStore* params_;
  TrainConfig config_;
  SeededRng shuffle_rng_;
  SeededRng negative_rng_;
  SeededRng noise_rng_;
};

struct TrainResult {
  ParameterStore params;  // final, or best validation snapshot with keep_best
  std::vector<EpochLog> log;
  std::optional<std::size_t> selected_epoch;
  std::optional<double> selected_val_mrr;
};

/// Full training run from freshly initialized parameters. Validation snapshots
/// are rounded to checkpoint precision so a saved checkpoint reproduces the
/// logged validation MRR exactly.
TrainResult train(const Model& model, const TripleDataset& dataset, const TrainConfig& config,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace adamf

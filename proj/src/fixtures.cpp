#include "adamf/fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include "adamf/errors.hpp"
#include "adamf/training.hpp"

namespace adamf {

namespace {

std::string entity_name(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "e%02zu", i);
  return buf;
}

}  // namespace

ToyKg make_toy_kg(std::size_t num_entities, std::uint64_t seed) {
  if (num_entities < 5) throw ContractViolation("make_toy_kg: need at least 5 entities");
  SeededRng rng = SeededRng(seed).substream("toy-kg");
  Vocab vocab;
  for (std::size_t i = 0; i < num_entities; ++i) vocab.add_entity(entity_name(i));
  const RelationId next = vocab.add_relation("next");
  const RelationId skip = vocab.add_relation("skip");

  std::vector<Triple> all;
  for (std::size_t i = 0; i < num_entities; ++i) {
    const auto e = static_cast<EntityId>(i);
    all.push_back({e, next, static_cast<EntityId>((i + 1) % num_entities)});
    all.push_back({e, skip, static_cast<EntityId>((i + 2) % num_entities)});
  }
  for (std::size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[rng.below(i)]);
  const std::size_t held_out = all.size() / 10;
  std::vector<Triple> test(all.begin(), all.begin() + held_out);
  std::vector<Triple> valid(all.begin() + held_out, all.begin() + 2 * held_out);
  std::vector<Triple> train(all.begin() + 2 * held_out, all.end());

  ToyKg kg;
  kg.visual = empty_features(num_entities, Modality::visual, kToyFeatureDim);
  kg.textual = empty_features(num_entities, Modality::textual, kToyFeatureDim);
  for (std::size_t i = 0; i < num_entities; ++i) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(num_entities);
    auto v = kg.visual.matrix.row(i);
    v[0] = std::cos(angle) + 0.05 * rng.normal();
    v[1] = std::sin(angle) + 0.05 * rng.normal();
    v[2] = rng.normal();
    auto t = kg.textual.matrix.row(i);
    t[0] = std::cos(angle) + 0.25 * rng.normal();
    t[1] = std::sin(angle) + 0.25 * rng.normal();
    t[2] = rng.normal();
    kg.visual.present[i] = 1;
    kg.textual.present[i] = 1;
  }
  kg.dataset = make_dataset(std::move(vocab), std::move(train), std::move(valid), std::move(test));
  return kg;
}

void write_toy_kg(const ToyKg& kg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto& vocab = kg.dataset.vocab;
  write_triples(dir / "train.tsv", kg.dataset.train, vocab);
  write_triples(dir / "valid.tsv", kg.dataset.valid, vocab);
  write_triples(dir / "test.tsv", kg.dataset.test, vocab);
  write_features(dir / "visual.tsv", kg.visual, vocab);
  write_features(dir / "textual.tsv", kg.textual, vocab);
}

std::string toy_config_text() {
  return "# Toy KG, adaptive fusion, no modality-adversarial training\n"
         "train_path = train.tsv\n"
         "valid_path = valid.tsv\n"
         "test_path = test.tsv\n"
         "visual_path = visual.tsv\n"
         "textual_path = textual.tsv\n"
         "output_dir = out\n"
         "dim = 16\n"
         "visual_dim = 3\n"
         "textual_dim = 3\n"
         "noise_dim = 8\n"
         "num_negatives = 16\n"
         "gamma = 4\n"
         "beta = 1\n"
         "lr_d = 0.001\n"
         "lr_g = 0.0001\n"
         "batch_size = 8\n"
         "epochs = 400\n"
         "validate_every = 50\n"
         "mat_enabled = false\n"
         "seed = 0\n";
}

bool GradcheckReport::passed() const {
  return kgc.max_relative_error < tolerance && adv_discriminator.max_relative_error < tolerance &&
         (!generator || generator->max_relative_error < tolerance);
}

GradcheckReport run_gradcheck_fixture(const GradcheckSettings& settings) {
  constexpr std::size_t kEntities = 5;
  constexpr std::size_t kRelations = 3;
  constexpr std::size_t kVisualDim = 6;
  constexpr std::size_t kTextualDim = 5;
  constexpr std::size_t kNegatives = 4;
  constexpr std::size_t kGroups = 1;

  SeededRng rng = SeededRng(settings.seed).substream("gradcheck-fixture");
  Vocab vocab;
  for (std::size_t i = 0; i < kEntities; ++i) vocab.add_entity(entity_name(i));
  for (std::size_t r = 0; r < kRelations; ++r) vocab.add_relation("r" + std::to_string(r));
  std::set<Triple> triples;
  while (triples.size() < 6) {
    Triple t{static_cast<EntityId>(rng.below(kEntities)), static_cast<RelationId>(rng.below(kRelations)),
             static_cast<EntityId>(rng.below(kEntities))};
    if (t.head != t.tail) triples.insert(t);
  }
  std::vector<Triple> train(triples.begin(), triples.end());

  auto visual = empty_features(kEntities, Modality::visual, kVisualDim);
  auto textual = empty_features(kEntities, Modality::textual, kTextualDim);
  for (auto* table : {&visual, &textual}) {
    for (auto& v : table->matrix.data) v = rng.normal();
    table->present.assign(kEntities, 1);
  }
  visual.present[4] = 0;
  textual.present[3] = 0;

  ModelConfig cfg;
  cfg.dim = 4;
  cfg.visual_dim = kVisualDim;
  cfg.textual_dim = kTextualDim;
  cfg.noise_dim = 4;
  cfg.generator_hidden = 8;
  cfg.fusion_mode = settings.fusion_mode;
  cfg.leaky_slope = settings.leaky_slope;
  cfg.gamma = settings.gamma;
  cfg.beta = settings.beta;
  cfg.selfadv_sign = settings.selfadv_sign;
  const Model model(cfg, kEntities, kRelations, visual, textual);

  ParameterStore params = model.init_params(settings.seed);
  // Move biases and fusion vectors off their special initial values so every
  // gradient path is exercised.
  for (auto& p : params.parameters()) {
    const bool bias = p.name.ends_with(".bias") || p.name.ends_with(".b1") ||
                      p.name.ends_with(".b2");
    if (bias || p.name.starts_with("fusion.")) {
      for (auto& v : p.value.data) v += rng.uniform(-0.5, 0.5);
    }
  }

  const std::uint64_t negative_seed = rng.next_u64();
  const std::uint64_t noise_seed = rng.next_u64();
  const PatternSet patterns = settings.adversarial_patterns;
  auto build_kgc = [&](Tape& tape) {
    SeededRng negatives(negative_seed);
    std::vector<NegativeBatch> batch;
    for (const auto& t : train) batch.push_back(sample_negatives(t, kNegatives, kEntities, negatives));
    EntityEmbedder embedder(model, tape);
    return loss_kgc(embedder, batch);
  };
  auto build_adv = [&](Tape& tape, double factor) {
    SeededRng noise(noise_seed);
    EntityEmbedder embedder(model, tape);
    std::vector<std::vector<SyntheticTriple>> synthetic;
    for (const auto& t : train) {
      synthetic.push_back(synthetic_triple_set(embedder, t, kGroups, patterns, noise));
    }
    return tape.scale(loss_adv(embedder, train, synthetic), factor);
  };

  GradcheckReport report;
  report.kgc = finite_diff_check(build_kgc, params, settings.epsilon, {Group::discriminator});
  report.adv_discriminator = finite_diff_check(
      [&](Tape& tape) { return build_adv(tape, settings.adv_lambda); }, params, settings.epsilon,
      {Group::discriminator});
  if (settings.adv_lambda != 0.0) {
    report.generator = finite_diff_check(
        [&](Tape& tape) { return build_adv(tape, -settings.adv_lambda); }, params,
        settings.epsilon, {Group::generator});
  }
  return report;
}

}  // namespace adamf

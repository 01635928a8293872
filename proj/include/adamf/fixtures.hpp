#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "adamf/gradcheck.hpp"
#include "adamf/kgdata.hpp"
#include "adamf/model.hpp"

namespace adamf {

/// Small synthetic multi-modal KG: entities on a cycle, relation "next" maps
/// i to i+1 and "skip" maps i to i+2 (the composition next.next). Each
/// modality has 3-dim features: the cycle angle as (cos, sin) plus noise and
/// one uninformative component. Visual features are cleaner than textual.
struct ToyKg {
  TripleDataset dataset;
  FeatureTable visual;
  FeatureTable textual;
};

inline constexpr std::size_t kToyFeatureDim = 3;

ToyKg make_toy_kg(std::size_t num_entities = 50, std::uint64_t seed = 0);

/// Writes train.tsv, valid.tsv, test.tsv, visual.tsv and textual.tsv.
void write_toy_kg(const ToyKg& kg, const std::filesystem::path& dir);

/// Config text for training on a directory written by write_toy_kg.
std::string toy_config_text();

/// Knobs of the gradient-check fixture. The fixture itself is fixed: d = 4,
/// 5 entities, 3 relations, K = 4, L = 1, all three modalities, one entity
/// without visual and one without textual features.
struct GradcheckSettings {
  std::uint64_t seed = 0;
  double gamma = 4.0;
  double beta = 1.0;
  double adv_lambda = 0.01;
  double leaky_slope = 0.01;
  FusionMode fusion_mode = FusionMode::adaptive;
  SelfAdvSign selfadv_sign = SelfAdvSign::negated;
  PatternSet adversarial_patterns;
  double epsilon = 1e-5;
};

struct GradcheckReport {
  GradCheckResult kgc;                       // L_kgc, discriminator group
  GradCheckResult adv_discriminator;         // lambda L_adv, discriminator group
  std::optional<GradCheckResult> generator;  // -lambda L_adv, generator group; skipped if lambda = 0
  double tolerance = 1e-5;

  bool passed() const;
};

GradcheckReport run_gradcheck_fixture(const GradcheckSettings& settings);

}  // namespace adamf

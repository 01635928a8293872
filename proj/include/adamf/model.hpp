#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "adamf/kgdata.hpp"
#include "adamf/params.hpp"
#include "adamf/rng.hpp"
#include "adamf/tape.hpp"

namespace adamf {

enum class FusionMode : std::uint8_t { adaptive, mean };
enum class SelfAdvSign : std::uint8_t { negated, literal };

std::string_view to_string(FusionMode m);
std::string_view to_string(SelfAdvSign s);
FusionMode parse_fusion_mode(std::string_view text);
SelfAdvSign parse_selfadv_sign(std::string_view text);

/// Subset of {s, v, t}; iteration order is always s, v, t.
class ModalitySet {
 public:
  ModalitySet() = default;
  ModalitySet(std::initializer_list<Modality> modalities);

  bool contains(Modality m) const { return (bits_ >> static_cast<int>(m)) & 1U; }
  void insert(Modality m) { bits_ |= 1U << static_cast<int>(m); }
  bool empty() const { return bits_ == 0; }
  std::vector<Modality> list() const;
  std::size_t size() const { return list().size(); }

  /// "s,v,t", "s+v", "vt", ... Letters or full names.
  static ModalitySet parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const ModalitySet&) const = default;

 private:
  std::uint8_t bits_ = 0b111;
};

/// The three kinds of synthetic triple built around a positive (h, r, t).
enum class SyntheticPattern : std::uint8_t {
  synthetic_tail,  // (h, r, t*)
  synthetic_head,  // (h*, r, t)
  synthetic_both,  // (h*, r, t*)
};

class PatternSet {
 public:
  PatternSet() = default;
  PatternSet(std::initializer_list<SyntheticPattern> patterns);

  bool contains(SyntheticPattern p) const { return (bits_ >> static_cast<int>(p)) & 1U; }
  void insert(SyntheticPattern p) { bits_ |= 1U << static_cast<int>(p); }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const;
  std::vector<SyntheticPattern> list() const;

  /// Comma-separated subset of "hrt*", "h*rt", "h*rt*", or "all" / "none".
  static PatternSet parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const PatternSet&) const = default;

 private:
  std::uint8_t bits_ = 0b111;
};

struct ModelConfig {
  std::size_t dim = 200;  // complex dimension; real embedding vectors have 2*dim entries
  std::size_t visual_dim = 4096;
  std::size_t textual_dim = 768;
  std::size_t noise_dim = 64;
  std::size_t generator_hidden = 0;  // 0 selects 2*dim
  FusionMode fusion_mode = FusionMode::adaptive;
  ModalitySet modalities;
  double leaky_slope = 0.01;
  double gamma = 4.0;
  double beta = 1.0;
  SelfAdvSign selfadv_sign = SelfAdvSign::negated;

  std::size_t width() const { return 2 * dim; }
  std::size_t hidden_width() const { return generator_hidden == 0 ? 2 * dim : generator_hidden; }
  /// Throws ConfigError on the first violated invariant.
  void validate() const;
};

namespace param_names {
inline constexpr std::string_view structural = "entity.structural";
inline constexpr std::string_view phase = "relation.phase";
std::string projection_weight(Modality m);
std::string projection_bias(Modality m);
std::string fallback(Modality m);
std::string fusion(Modality m);
std::string generator(Modality m, std::string_view part);  // part: w1, b1, w2, b2
}  // namespace param_names

/// Fused entity representation: the joint embedding and the modality weights
/// (aligned with Model::fused_modalities()).
struct Fusion {
  NodeId joint;
  NodeId alpha;
};

struct SyntheticTriple {
  SyntheticPattern pattern;
  std::size_t group;
  Fusion head;
  RelationId relation;
  Fusion tail;
};

/// Forward values for every entity, used by ranking and weight reports.
struct EntityTable {
  Tensor joint;  // num_entities x 2d
  Tensor alpha;  // num_entities x |fused modalities|
  Tensor phase;  // num_relations x d
};

/// Every parameterized function of the model, expressed as tape operations.
/// The model owns the frozen raw features; trainable state lives in a
/// ParameterStore created by init_params().
class Model {
 public:
  Model(ModelConfig config, std::size_t num_entities, std::size_t num_relations,
        FeatureTable visual, FeatureTable textual);

  const ModelConfig& config() const { return config_; }
  std::size_t num_entities() const { return num_entities_; }
  std::size_t num_relations() const { return num_relations_; }
  const FeatureTable& features(Modality m) const;

  /// Modalities entering the fusion, in s, v, t order.
  const std::vector<Modality>& fused_modalities() const { return fused_; }
  /// Modalities with a generator (v and/or t).
  const std::vector<Modality>& generated_modalities() const { return generated_; }

  /// Registers and initializes every trainable tensor. Deterministic in seed;
  /// each tensor draws from its own sub-stream.
  ParameterStore init_params(std::uint64_t seed) const;

  /// W_m f + b_m. `feature` must have the configured width of m.
  NodeId project_feature(Tape& tape, std::span<const double> feature, Modality m) const;
  /// e_s row, or the projected feature / trainable fallback row for v and t.
  NodeId modal_embedding(Tape& tape, EntityId entity, Modality m) const;
  /// `embeddings` aligned with fused_modalities().
  Fusion fuse(Tape& tape, std::span<const NodeId> embeddings) const;
  /// Sum over complex components of |h o r - t|.
  NodeId score(Tape& tape, NodeId head_joint, RelationId relation, NodeId tail_joint) const;
  /// G_m(e_s, z) with z drawn from `rng`.
  NodeId generate_modal_embedding(Tape& tape, NodeId structural, Modality m,
                                  SeededRng& rng) const;

  EntityTable embed_all(const ParameterStore& params) const;

 private:
  ModelConfig config_;
  std::size_t num_entities_;
  std::size_t num_relations_;
  FeatureTable visual_;
  FeatureTable textual_;
  std::vector<Modality> fused_;
  std::vector<Modality> generated_;
};

/// Per-tape memo of real-entity fusions, plus construction of synthetic
/// entities whose modal embeddings come from the generators.
class EntityEmbedder {
 public:
  EntityEmbedder(const Model& model, Tape& tape) : model_(&model), tape_(&tape) {}

  const Fusion& real(EntityId entity);
  /// Starred entity: keeps its structural embedding, replaces each generated
  /// modality with a fresh generator sample. The generator input is a
  /// detached copy of e_s, so no gradient reaches e_s through the generator.
  Fusion synthetic(EntityId entity, SeededRng& noise);

  const Model& model() const { return *model_; }
  Tape& tape() { return *tape_; }

 private:
  const Model* model_;
  Tape* tape_;
  std::unordered_map<EntityId, Fusion> cache_;
};

/// L groups of synthetic triples around `positive`, restricted to `patterns`.
/// Each group draws one h* and one t* (only those the patterns need).
std::vector<SyntheticTriple> synthetic_triple_set(EntityEmbedder& embedder,
                                                  const Triple& positive, std::size_t groups,
                                                  const PatternSet& patterns, SeededRng& noise);

/// Tape-free distance with the same kernels as Model::score.
double rotate_distance(std::span<const double> head, std::span<const double> phase,
                       std::span<const double> tail);

}  // namespace adamf

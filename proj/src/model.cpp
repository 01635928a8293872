#include "adamf/model.hpp"

#include <cmath>
#include <numbers>

#include "adamf/errors.hpp"

namespace adamf {

namespace {

std::string_view modality_letter(Modality m) {
  switch (m) {
    case Modality::structural: return "s";
    case Modality::visual: return "v";
    case Modality::textual: return "t";
  }
  return "?";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

Tensor uniform_tensor(std::vector<std::size_t> shape, double bound, SeededRng rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.uniform(-bound, bound);
  return t;
}

Tensor xavier(std::size_t rows, std::size_t cols, SeededRng rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  return uniform_tensor({rows, cols}, bound, rng);
}

}  // namespace

std::string_view to_string(FusionMode m) { return m == FusionMode::adaptive ? "adaptive" : "mean"; }

std::string_view to_string(SelfAdvSign s) {
  return s == SelfAdvSign::negated ? "negated" : "literal";
}

FusionMode parse_fusion_mode(std::string_view text) {
  if (text == "adaptive") return FusionMode::adaptive;
  if (text == "mean") return FusionMode::mean;
  throw ConfigError("fusion_mode must be 'adaptive' or 'mean', got '" + std::string(text) + "'");
}

SelfAdvSign parse_selfadv_sign(std::string_view text) {
  if (text == "negated") return SelfAdvSign::negated;
  if (text == "literal") return SelfAdvSign::literal;
  throw ConfigError("selfadv_sign must be 'negated' or 'literal', got '" + std::string(text) +
                    "'");
}

ModalitySet::ModalitySet(std::initializer_list<Modality> modalities) : bits_(0) {
  for (auto m : modalities) insert(m);
}

std::vector<Modality> ModalitySet::list() const {
  std::vector<Modality> out;
  for (auto m : {Modality::structural, Modality::visual, Modality::textual}) {
    if (contains(m)) out.push_back(m);
  }
  return out;
}

ModalitySet ModalitySet::parse(std::string_view text) {
  ModalitySet set;
  set.bits_ = 0;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto pos = rest.find_first_of(",+");
    auto token = trim(rest.substr(0, pos));
    rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
    if (token.empty()) continue;
    if (token.size() > 1 && token.find_first_not_of("svt") == std::string_view::npos) {
      for (char c : token) set.insert(parse_modality(std::string_view(&c, 1)));
    } else {
      set.insert(parse_modality(token));
    }
  }
  if (set.empty()) throw ConfigError("modalities: empty set '" + std::string(text) + "'");
  return set;
}

std::string ModalitySet::to_string() const {
  std::string out;
  for (auto m : list()) {
    if (!out.empty()) out += ',';
    out += modality_letter(m);
  }
  return out;
}

PatternSet::PatternSet(std::initializer_list<SyntheticPattern> patterns) : bits_(0) {
  for (auto p : patterns) insert(p);
}

std::size_t PatternSet::size() const { return list().size(); }

std::vector<SyntheticPattern> PatternSet::list() const {
  std::vector<SyntheticPattern> out;
  for (auto p : {SyntheticPattern::synthetic_tail, SyntheticPattern::synthetic_head,
                 SyntheticPattern::synthetic_both}) {
    if (contains(p)) out.push_back(p);
  }
  return out;
}

PatternSet PatternSet::parse(std::string_view text) {
  PatternSet set;
  set.bits_ = 0;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto pos = rest.find(',');
    auto token = trim(rest.substr(0, pos));
    rest = pos == std::string_view::npos ? std::string_view{} : rest.substr(pos + 1);
    if (token.empty()) continue;
    if (token == "none") {
      continue;
    } else if (token == "all") {
      set = PatternSet();
    } else if (token == "hrt*" || token == "(h,r,t*)") {
      set.insert(SyntheticPattern::synthetic_tail);
    } else if (token == "h*rt" || token == "(h*,r,t)") {
      set.insert(SyntheticPattern::synthetic_head);
    } else if (token == "h*rt*" || token == "(h*,r,t*)") {
      set.insert(SyntheticPattern::synthetic_both);
    } else {
      throw ConfigError("unknown adversarial pattern '" + std::string(token) +
                        "' (expected hrt*, h*rt, h*rt*)");
    }
  }
  return set;
}

std::string PatternSet::to_string() const {
  if (empty()) return "none";
  std::string out;
  for (auto p : list()) {
    if (!out.empty()) out += ',';
    switch (p) {
      case SyntheticPattern::synthetic_tail: out += "hrt*"; break;
      case SyntheticPattern::synthetic_head: out += "h*rt"; break;
      case SyntheticPattern::synthetic_both: out += "h*rt*"; break;
    }
  }
  return out;
}

void ModelConfig::validate() const {
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (noise_dim < 1) throw ConfigError("noise_dim must be >= 1");
  if (modalities.empty()) throw ConfigError("modalities must be non-empty");
  if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
  if (!std::isfinite(beta)) throw ConfigError("beta must be finite");
  if (modalities.contains(Modality::visual) && visual_dim == 0) {
    throw ConfigError("visual_dim must be >= 1 when the visual modality is used");
  }
  if (modalities.contains(Modality::textual) && textual_dim == 0) {
    throw ConfigError("textual_dim must be >= 1 when the textual modality is used");
  }
}

namespace param_names {
std::string projection_weight(Modality m) {
  return "projection." + std::string(to_string(m)) + ".weight";
}
std::string projection_bias(Modality m) {
  return "projection." + std::string(to_string(m)) + ".bias";
}
std::string fallback(Modality m) { return "fallback." + std::string(to_string(m)); }
std::string fusion(Modality m) { return "fusion." + std::string(to_string(m)); }
std::string generator(Modality m, std::string_view part) {
  return "generator." + std::string(to_string(m)) + "." + std::string(part);
}
}  // namespace param_names

Model::Model(ModelConfig config, std::size_t num_entities, std::size_t num_relations,
             FeatureTable visual, FeatureTable textual)
    : config_(std::move(config)),
      num_entities_(num_entities),
      num_relations_(num_relations),
      visual_(std::move(visual)),
      textual_(std::move(textual)) {
  config_.validate();
  fused_ = config_.modalities.list();
  for (auto m : fused_) {
    if (m != Modality::structural) generated_.push_back(m);
  }
  for (auto m : generated_) {
    const auto& table = features(m);
    const std::size_t expected = m == Modality::visual ? config_.visual_dim : config_.textual_dim;
    if (table.num_entities() != num_entities_ || table.dim != expected) {
      throw ContractViolation(std::string(to_string(m)) + " feature table is " +
                              std::to_string(table.num_entities()) + "x" +
                              std::to_string(table.dim) + ", model expects " +
                              std::to_string(num_entities_) + "x" + std::to_string(expected));
    }
  }
}

const FeatureTable& Model::features(Modality m) const {
  if (m == Modality::visual) return visual_;
  if (m == Modality::textual) return textual_;
  throw ContractViolation("the structural modality has no feature table");
}

ParameterStore Model::init_params(std::uint64_t seed) const {
  const SeededRng root = SeededRng(seed).substream("init");
  auto stream = [&](const std::string& name) { return root.substream(name); };
  const std::size_t w = config_.width();
  const double bound = 6.0 / std::sqrt(static_cast<double>(w));

  ParameterStore store;
  const std::string structural(param_names::structural);
  store.add(structural, Group::discriminator,
            uniform_tensor({num_entities_, w}, bound, stream(structural)));

  const std::string phase(param_names::phase);
  Tensor phases({num_relations_, config_.dim});
  {
    auto rng = stream(phase);
    // pi - 2*pi*u with u in [0, 1) lands in (-pi, pi].
    for (auto& v : phases.data) v = std::numbers::pi - 2.0 * std::numbers::pi * rng.uniform();
  }
  store.add(phase, Group::discriminator, std::move(phases));

  for (auto m : generated_) {
    const std::size_t in = m == Modality::visual ? config_.visual_dim : config_.textual_dim;
    const auto weight = param_names::projection_weight(m);
    store.add(weight, Group::discriminator, xavier(w, in, stream(weight)));
    store.add(param_names::projection_bias(m), Group::discriminator, Tensor({w}));
    const auto fallback = param_names::fallback(m);
    store.add(fallback, Group::discriminator,
              uniform_tensor({num_entities_, w}, bound, stream(fallback)));
  }
  if (config_.fusion_mode == FusionMode::adaptive) {
    for (auto m : fused_) {
      store.add(param_names::fusion(m), Group::discriminator, Tensor({w}, 1.0));
    }
  }
  const std::size_t hidden = config_.hidden_width();
  for (auto m : generated_) {
    const auto w1 = param_names::generator(m, "w1");
    const auto w2 = param_names::generator(m, "w2");
    store.add(w1, Group::generator, xavier(hidden, w + config_.noise_dim, stream(w1)));
    store.add(param_names::generator(m, "b1"), Group::generator, Tensor({hidden}));
    store.add(w2, Group::generator, xavier(w, hidden, stream(w2)));
    store.add(param_names::generator(m, "b2"), Group::generator, Tensor({w}));
  }
  return store;
}

NodeId Model::project_feature(Tape& tape, std::span<const double> feature, Modality m) const {
  const std::size_t expected = m == Modality::visual ? config_.visual_dim : config_.textual_dim;
  if (m == Modality::structural || feature.size() != expected) {
    throw ContractViolation("project_feature: " + std::string(to_string(m)) + " feature of width " +
                            std::to_string(feature.size()) + ", expected " +
                            std::to_string(expected));
  }
  const auto& params = tape.params();
  const NodeId weight = tape.param(params.id_of(param_names::projection_weight(m)));
  const NodeId bias = tape.param(params.id_of(param_names::projection_bias(m)));
  const NodeId f = tape.constant(std::vector<double>(feature.begin(), feature.end()));
  return tape.add(tape.matvec(weight, f), bias);
}

NodeId Model::modal_embedding(Tape& tape, EntityId entity, Modality m) const {
  const auto& params = tape.params();
  if (m == Modality::structural) {
    return tape.param_row(params.id_of(param_names::structural), entity);
  }
  const auto& table = features(m);
  if (table.present.at(entity)) return project_feature(tape, table.row(entity), m);
  return tape.param_row(params.id_of(param_names::fallback(m)), entity);
}

Fusion Model::fuse(Tape& tape, std::span<const NodeId> embeddings) const {
  if (embeddings.size() != fused_.size()) {
    throw ContractViolation("fuse: " + std::to_string(embeddings.size()) +
                            " embeddings for " + std::to_string(fused_.size()) + " modalities");
  }
  for (auto e : embeddings) {
    if (tape.value(e).size() != config_.width()) {
      throw ContractViolation("fuse: embedding of length " + std::to_string(tape.value(e).size()) +
                              ", expected " + std::to_string(config_.width()));
    }
  }
  const auto& params = tape.params();
  NodeId alpha;
  if (config_.fusion_mode == FusionMode::adaptive) {
    std::vector<NodeId> scores;
    scores.reserve(fused_.size());
    for (std::size_t k = 0; k < fused_.size(); ++k) {
      const NodeId w = tape.param(params.id_of(param_names::fusion(fused_[k])));
      scores.push_back(tape.sum(tape.multiply(w, tape.tanh(embeddings[k]))));
    }
    alpha = tape.softmax(tape.concat(scores));
  } else {
    alpha = tape.constant(
        std::vector<double>(fused_.size(), 1.0 / static_cast<double>(fused_.size())));
  }
  NodeId joint = tape.multiply(tape.element(alpha, 0), embeddings[0]);
  for (std::size_t k = 1; k < fused_.size(); ++k) {
    joint = tape.add(joint, tape.multiply(tape.element(alpha, k), embeddings[k]));
  }
  return {joint, alpha};
}

NodeId Model::score(Tape& tape, NodeId head_joint, RelationId relation, NodeId tail_joint) const {
  const NodeId phase = tape.param_row(tape.params().id_of(param_names::phase), relation);
  const NodeId rotated = tape.complex_rotate(head_joint, phase);
  return tape.complex_modulus_sum(tape.subtract(rotated, tail_joint));
}

NodeId Model::generate_modal_embedding(Tape& tape, NodeId structural, Modality m,
                                       SeededRng& rng) const {
  if (m == Modality::structural) {
    throw ContractViolation("generate_modal_embedding: no generator for the structural modality");
  }
  const auto& params = tape.params();
  const NodeId w1 = tape.param(params.id_of(param_names::generator(m, "w1")));
  const NodeId b1 = tape.param(params.id_of(param_names::generator(m, "b1")));
  const NodeId w2 = tape.param(params.id_of(param_names::generator(m, "w2")));
  const NodeId b2 = tape.param(params.id_of(param_names::generator(m, "b2")));
  std::vector<double> z(config_.noise_dim);
  for (auto& v : z) v = rng.normal();
  const NodeId input = tape.concat({structural, tape.constant(std::move(z))});
  const NodeId hidden = tape.leaky_relu(tape.add(tape.matvec(w1, input), b1), config_.leaky_slope);
  return tape.add(tape.matvec(w2, hidden), b2);
}

EntityTable Model::embed_all(const ParameterStore& params) const {
  EntityTable table;
  table.joint = Tensor({num_entities_, config_.width()});
  table.alpha = Tensor({num_entities_, fused_.size()});
  table.phase = params[param_names::phase].value;
  for (EntityId e = 0; e < num_entities_; ++e) {
    Tape tape(params);
    std::vector<NodeId> embeddings;
    for (auto m : fused_) embeddings.push_back(modal_embedding(tape, e, m));
    const Fusion f = fuse(tape, embeddings);
    auto joint = tape.value(f.joint);
    auto alpha = tape.value(f.alpha);
    std::copy(joint.begin(), joint.end(), table.joint.row(e).begin());
    std::copy(alpha.begin(), alpha.end(), table.alpha.row(e).begin());
  }
  return table;
}

const Fusion& EntityEmbedder::real(EntityId entity) {
  if (auto it = cache_.find(entity); it != cache_.end()) return it->second;
  std::vector<NodeId> embeddings;
  for (auto m : model_->fused_modalities()) {
    embeddings.push_back(model_->modal_embedding(*tape_, entity, m));
  }
  return cache_.emplace(entity, model_->fuse(*tape_, embeddings)).first->second;
}

Fusion EntityEmbedder::synthetic(EntityId entity, SeededRng& noise) {
  const NodeId structural = model_->modal_embedding(*tape_, entity, Modality::structural);
  const NodeId condition = tape_->detach(structural);
  std::vector<NodeId> embeddings;
  for (auto m : model_->fused_modalities()) {
    if (m == Modality::structural) {
      embeddings.push_back(structural);
    } else {
      embeddings.push_back(model_->generate_modal_embedding(*tape_, condition, m, noise));
    }
  }
  return model_->fuse(*tape_, embeddings);
}

std::vector<SyntheticTriple> synthetic_triple_set(EntityEmbedder& embedder,
                                                  const Triple& positive, std::size_t groups,
                                                  const PatternSet& patterns, SeededRng& noise) {
  if (groups < 1) throw ContractViolation("synthetic_triple_set: need at least one group");
  const bool need_head = patterns.contains(SyntheticPattern::synthetic_head) ||
                         patterns.contains(SyntheticPattern::synthetic_both);
  const bool need_tail = patterns.contains(SyntheticPattern::synthetic_tail) ||
                         patterns.contains(SyntheticPattern::synthetic_both);
  const Fusion head = embedder.real(positive.head);
  const Fusion tail = embedder.real(positive.tail);

  std::vector<SyntheticTriple> out;
  out.reserve(groups * patterns.size());
  for (std::size_t g = 0; g < groups; ++g) {
    Fusion head_star{}, tail_star{};
    if (need_head) head_star = embedder.synthetic(positive.head, noise);
    if (need_tail) tail_star = embedder.synthetic(positive.tail, noise);
    for (auto p : patterns.list()) {
      switch (p) {
        case SyntheticPattern::synthetic_tail:
          out.push_back({p, g, head, positive.relation, tail_star});
          break;
        case SyntheticPattern::synthetic_head:
          out.push_back({p, g, head_star, positive.relation, tail});
          break;
        case SyntheticPattern::synthetic_both:
          out.push_back({p, g, head_star, positive.relation, tail_star});
          break;
      }
    }
  }
  return out;
}

double rotate_distance(std::span<const double> head, std::span<const double> phase,
                       std::span<const double> tail) {
  double total = 0.0;
  for (std::size_t k = 0; k < phase.size(); ++k) {
    const double c = std::cos(phase[k]);
    const double s = std::sin(phase[k]);
    const double re = head[2 * k] * c - head[2 * k + 1] * s - tail[2 * k];
    const double im = head[2 * k] * s + head[2 * k + 1] * c - tail[2 * k + 1];
    total += std::hypot(re, im);
  }
  return total;
}

}  // namespace adamf

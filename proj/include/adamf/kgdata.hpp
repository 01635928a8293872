#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "adamf/tensor.hpp"

namespace adamf {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  auto operator<=>(const Triple&) const = default;
};

/// Dense, bijective name <-> index maps for entities and relations, in first
/// appearance order.
class Vocab {
 public:
  EntityId add_entity(std::string_view name);
  RelationId add_relation(std::string_view name);

  std::optional<EntityId> find_entity(std::string_view name) const;
  std::optional<RelationId> find_relation(std::string_view name) const;

  std::size_t num_entities() const { return entity_names_.size(); }
  std::size_t num_relations() const { return relation_names_.size(); }
  const std::string& entity_name(EntityId id) const { return entity_names_.at(id); }
  const std::string& relation_name(RelationId id) const { return relation_names_.at(id); }
  const std::vector<std::string>& entity_names() const { return entity_names_; }
  const std::vector<std::string>& relation_names() const { return relation_names_; }

 private:
  std::vector<std::string> entity_names_;
  std::vector<std::string> relation_names_;
  std::unordered_map<std::string, EntityId> entity_index_;
  std::unordered_map<std::string, RelationId> relation_index_;
};

/// Known completions of (h, r, ?) and (?, r, t) over every split.
class FilterIndex {
 public:
  FilterIndex() = default;
  FilterIndex(std::size_t num_relations, std::span<const std::vector<Triple>* const> splits);

  /// Sorted tails t with (h, r, t) known.
  std::span<const EntityId> tails(EntityId head, RelationId relation) const;
  /// Sorted heads h with (h, r, t) known.
  std::span<const EntityId> heads(RelationId relation, EntityId tail) const;
  bool contains(const Triple& t) const;

  std::size_t num_tail_keys() const { return tails_.size(); }
  std::size_t num_head_keys() const { return heads_.size(); }

 private:
  std::uint64_t key(std::uint32_t entity, RelationId relation) const {
    return static_cast<std::uint64_t>(entity) * num_relations_ + relation;
  }

  std::size_t num_relations_ = 0;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_;
  std::unordered_map<std::uint64_t, std::vector<EntityId>> heads_;
};

struct TripleDataset {
  Vocab vocab;
  std::vector<Triple> train;
  std::vector<Triple> valid;
  std::vector<Triple> test;
  FilterIndex filter;
  /// Non-fatal issues found while loading (duplicate lines, ...).
  std::vector<std::string> warnings;

  std::size_t num_entities() const { return vocab.num_entities(); }
  std::size_t num_relations() const { return vocab.num_relations(); }
};

/// Validates index bounds, a non-empty train split and split disjointness,
/// then builds the filter index.
TripleDataset make_dataset(Vocab vocab, std::vector<Triple> train, std::vector<Triple> valid,
                           std::vector<Triple> test);

/// Reads `head<TAB>relation<TAB>tail` files. Duplicates inside a split are
/// dropped with a warning.
TripleDataset load_triples(const std::filesystem::path& train_path,
                           const std::filesystem::path& valid_path,
                           const std::filesystem::path& test_path);

std::string format_triples(std::span<const Triple> triples, const Vocab& vocab);
void write_triples(const std::filesystem::path& path, std::span<const Triple> triples,
                   const Vocab& vocab);

enum class Modality : std::uint8_t { structural, visual, textual };

std::string_view to_string(Modality m);
/// Accepts "s"/"structural", "v"/"visual", "t"/"textual".
Modality parse_modality(std::string_view text);

/// Raw per-entity features of one modality. Rows of absent entities are zero
/// and must not be read.
struct FeatureTable {
  Modality modality = Modality::visual;
  std::size_t dim = 0;
  Tensor matrix;  // num_entities x dim
  std::vector<std::uint8_t> present;

  std::size_t num_entities() const { return present.size(); }
  std::size_t num_present() const;
  std::span<const double> row(EntityId e) const { return matrix.row(e); }
};

/// Table with every entity absent.
FeatureTable empty_features(std::size_t num_entities, Modality modality, std::size_t dim);

/// Reads `entity<TAB>c1,c2,...` lines. Unknown entities are skipped with a
/// warning; entities not listed are marked absent.
FeatureTable load_features(const std::filesystem::path& path, const Vocab& vocab,
                           Modality modality, std::size_t dim);

/// Writes the present rows in vocabulary order.
std::string format_features(const FeatureTable& table, const Vocab& vocab);
void write_features(const std::filesystem::path& path, const FeatureTable& table,
                    const Vocab& vocab);

/// Returns a copy in which exactly floor(ratio * |E|) entities, drawn
/// uniformly without replacement from a PRNG seeded with `seed`, are absent.
FeatureTable apply_modality_missing(const FeatureTable& table, double ratio, std::uint64_t seed);

/// The entity subset apply_modality_missing masks for the given inputs.
std::vector<EntityId> choose_missing_entities(std::size_t num_entities, double ratio,
                                              std::uint64_t seed);

}  // namespace adamf

#pragma once

#include <atomic>
#include <filesystem>
#include <set>
#include <string>

#include <unistd.h>

#include "adamf/kgdata.hpp"
#include "adamf/model.hpp"
#include "adamf/rng.hpp"

namespace adamf::testing {

/// Directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("adamf_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Random triples over `ne` entities and `nr` relations, split into
/// disjoint train/valid/test sets.
inline TripleDataset random_dataset(SeededRng& rng, std::size_t ne, std::size_t nr,
                                    std::size_t n_train, std::size_t n_valid,
                                    std::size_t n_test) {
  Vocab vocab;
  for (std::size_t i = 0; i < ne; ++i) vocab.add_entity("e" + std::to_string(i));
  for (std::size_t r = 0; r < nr; ++r) vocab.add_relation("r" + std::to_string(r));
  const std::size_t want = std::min(n_train + n_valid + n_test, ne * ne * nr);
  std::set<Triple> seen;
  std::vector<Triple> all;
  while (all.size() < want) {
    Triple t{static_cast<EntityId>(rng.below(ne)), static_cast<RelationId>(rng.below(nr)),
             static_cast<EntityId>(rng.below(ne))};
    if (seen.insert(t).second) all.push_back(t);
  }
  const std::size_t tr = std::max<std::size_t>(1, std::min(n_train, all.size()));
  const std::size_t va = std::min(n_valid, all.size() - tr);
  std::vector<Triple> train(all.begin(), all.begin() + tr);
  std::vector<Triple> valid(all.begin() + tr, all.begin() + tr + va);
  std::vector<Triple> test(all.begin() + tr + va, all.end());
  return make_dataset(std::move(vocab), std::move(train), std::move(valid), std::move(test));
}

/// Feature table with every entity present and standard-normal values.
inline FeatureTable random_features(SeededRng& rng, std::size_t ne, Modality m, std::size_t dim) {
  FeatureTable t = empty_features(ne, m, dim);
  for (auto& v : t.matrix.data) v = rng.normal();
  t.present.assign(ne, 1);
  return t;
}

/// Small all-modality model config.
inline ModelConfig small_config(std::size_t dim = 3, std::size_t feature_dim = 4) {
  ModelConfig c;
  c.dim = dim;
  c.visual_dim = feature_dim;
  c.textual_dim = feature_dim;
  c.noise_dim = 3;
  return c;
}

/// Overwrites every parameter with uniform values in [-scale, scale].
inline void randomize(ParameterStore& params, SeededRng& rng, double scale = 1.0) {
  for (auto& p : params.parameters())
    for (auto& v : p.value.data) v = rng.uniform(-scale, scale);
}

}  // namespace adamf::testing

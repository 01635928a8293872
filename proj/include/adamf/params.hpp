#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "adamf/tensor.hpp"

namespace adamf {

/// Which side of the minimax game owns a parameter.
enum class Group : std::uint8_t { discriminator, generator };

std::string_view to_string(Group g);

using ParamId = std::size_t;

/// Adam first/second moments and step count for one parameter.
struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step = 0;

  bool operator==(const AdamState&) const = default;
};

struct Parameter {
  std::string name;
  Group group = Group::discriminator;
  Tensor value;
  AdamState adam;

  bool operator==(const Parameter&) const = default;
};

/// Named trainable tensors plus optimizer state. Registration order is stable
/// and defines checkpoint order.
class ParameterStore {
 public:
  /// Registers a parameter; a duplicate name is a contract violation.
  ParamId add(std::string name, Group group, Tensor value);

  std::size_t size() const { return params_.size(); }
  bool contains(std::string_view name) const;
  ParamId id_of(std::string_view name) const;

  Parameter& at(ParamId id) { return params_.at(id); }
  const Parameter& at(ParamId id) const { return params_.at(id); }
  Parameter& operator[](std::string_view name) { return params_[id_of(name)]; }
  const Parameter& operator[](std::string_view name) const { return params_[id_of(name)]; }

  const std::vector<Parameter>& parameters() const { return params_; }
  std::vector<Parameter>& parameters() { return params_; }

  /// Number of scalar components across all parameters of a group.
  std::size_t scalar_count(Group g) const;

  bool operator==(const ParameterStore& other) const { return params_ == other.params_; }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, ParamId> index_;
};

/// Parameter name -> gradient tensor (same shape as the parameter).
using GradientMap = std::map<std::string, Tensor, std::less<>>;

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update applied to the parameters of `group` that
/// have an entry in `grads`. Entries belonging to the other group are ignored;
/// a name not in the store is a contract violation.
void adam_step(ParameterStore& params, const GradientMap& grads, Group group,
               const AdamOptions& options);

}  // namespace adamf

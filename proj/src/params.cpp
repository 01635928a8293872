#include "adamf/params.hpp"

#include <cmath>

#include "adamf/errors.hpp"

namespace adamf {

std::string_view to_string(Group g) {
  return g == Group::discriminator ? "discriminator" : "generator";
}

ParamId ParameterStore::add(std::string name, Group group, Tensor value) {
  if (index_.contains(name)) {
    throw ContractViolation("parameter registered twice: " + name);
  }
  const ParamId id = params_.size();
  index_.emplace(name, id);
  AdamState adam{Tensor(value.shape), Tensor(value.shape), 0};
  params_.push_back(Parameter{std::move(name), group, std::move(value), std::move(adam)});
  return id;
}

bool ParameterStore::contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

ParamId ParameterStore::id_of(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw ContractViolation("unknown parameter: " + std::string(name));
  }
  return it->second;
}

std::size_t ParameterStore::scalar_count(Group g) const {
  std::size_t n = 0;
  for (const auto& p : params_) {
    if (p.group == g) n += p.value.size();
  }
  return n;
}

void adam_step(ParameterStore& params, const GradientMap& grads, Group group,
               const AdamOptions& options) {
  // Validate everything before touching any state.
  for (const auto& [name, grad] : grads) {
    if (!params.contains(name)) {
      throw ContractViolation("adam_step: gradient for unknown parameter " + name);
    }
    const auto& p = params[name];
    if (grad.shape != p.value.shape) {
      throw ContractViolation("adam_step: gradient shape " + grad.shape_string() +
                              " does not match " + name + " " + p.value.shape_string());
    }
  }

  for (const auto& [name, grad] : grads) {
    auto& p = params[name];
    if (p.group != group) continue;
    auto& state = p.adam;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(options.beta1, t);
    const double correction2 = 1.0 - std::pow(options.beta2, t);
    auto& m = state.first_moment.data;
    auto& v = state.second_moment.data;
    auto& theta = p.value.data;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad.data[i];
      m[i] = options.beta1 * m[i] + (1.0 - options.beta1) * g;
      v[i] = options.beta2 * v[i] + (1.0 - options.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      theta[i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
    }
  }
}

}  // namespace adamf

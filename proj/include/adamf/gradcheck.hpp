#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

#include "adamf/params.hpp"
#include "adamf/tape.hpp"

namespace adamf {

/// Builds a scalar loss on the given tape from the store's current values.
/// Must be deterministic: every call sees the same noise and negatives.
using LossBuilder = std::function<NodeId(Tape&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t probes = 0;
};

/// |a - n| / max(1e-8, |a| + |n|)
double relative_error(double analytic, double numeric);

/// Compares the tape gradient of every scalar component of every parameter in
/// `groups` with a central difference of step `epsilon`. The store is
/// perturbed in place and restored before returning. Throws NumericError
/// naming the parameter if any probe loss is non-finite.
GradCheckResult finite_diff_check(const LossBuilder& loss_builder, ParameterStore& params,
                                  double epsilon, std::initializer_list<Group> groups);

}  // namespace adamf

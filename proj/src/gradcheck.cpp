#include "adamf/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "adamf/errors.hpp"

namespace adamf {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
}

GradCheckResult finite_diff_check(const LossBuilder& loss_builder, ParameterStore& params,
                                  double epsilon, std::initializer_list<Group> groups) {
  if (!(epsilon > 0.0)) throw ContractViolation("finite_diff_check: epsilon must be positive");
  std::vector<Group> group_list(groups);

  GradientMap analytic;
  std::vector<std::vector<double>> detached;
  {
    Tape tape(params, group_list);
    const NodeId root = loss_builder(tape);
    if (!std::isfinite(tape.scalar(root))) {
      throw NumericError("finite_diff_check: non-finite loss at the base point");
    }
    detached = tape.detached_values();
    analytic = tape.backward(root);
  }

  auto evaluate = [&](const std::string& name) {
    Tape tape(params);
    tape.replay_detached(detached);
    const double loss = tape.scalar(loss_builder(tape));
    if (!std::isfinite(loss)) {
      throw NumericError("finite_diff_check: non-finite loss while probing " + name);
    }
    return loss;
  };

  GradCheckResult result;
  for (auto& p : params.parameters()) {
    if (std::find(group_list.begin(), group_list.end(), p.group) == group_list.end()) continue;
    const auto& grad = analytic.at(p.name);
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double original = p.value.data[i];
      p.value.data[i] = original + epsilon;
      const double plus = evaluate(p.name);
      p.value.data[i] = original - epsilon;
      const double minus = evaluate(p.name);
      p.value.data[i] = original;

      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double err = relative_error(grad.data[i], numeric);
      ++result.probes;
      if (result.worst_parameter.empty() || err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = p.name;
        result.worst_index = i;
        result.analytic = grad.data[i];
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace adamf

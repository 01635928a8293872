#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <unordered_map>
#include <string_view>
#include <vector>

#include "adamf/params.hpp"

namespace adamf {

struct NodeId {
  std::uint32_t index = 0;
  bool operator==(const NodeId&) const = default;
};

enum class OpKind : std::uint8_t {
  constant,
  param,      // whole parameter tensor, flattened
  param_row,  // one row of a rank-2 parameter
  add,
  subtract,
  multiply,  // elementwise; a length-1 operand broadcasts
  matvec,
  concat,
  tanh,
  leaky_relu,
  softmax,
  log_sigmoid,
  scale,
  sum,
  element,
  complex_rotate,
  complex_modulus_sum,
};

std::string_view to_string(OpKind kind);

/// Forward kernels shared by the tape and by tape-free scoring paths.
/// Complex vectors are interleaved (re0, im0, re1, im1, ...).
namespace kernels {

void complex_rotate(std::span<const double> x, std::span<const double> phase,
                    std::span<double> out);
double complex_modulus_sum(std::span<const double> x);
/// Numerically stable log(sigmoid(x)).
double log_sigmoid(double x);
double sigmoid(double x);
void softmax(std::span<const double> x, std::span<double> out);

}  // namespace kernels

/// Eager reverse-mode recorder. Every op computes its value immediately and
/// appends a node; backward() walks the nodes in reverse append order.
///
/// Parameters are read from a ParameterStore. Only parameters whose group is
/// listed as differentiable become gradient leaves; all others enter the tape
/// as constants, which is how the discriminator and generator phases isolate
/// each other.
class Tape {
 public:
  Tape(const ParameterStore& params, std::initializer_list<Group> differentiable);
  Tape(const ParameterStore& params, std::span<const Group> differentiable);
  /// Forward-only tape: nothing is differentiable.
  explicit Tape(const ParameterStore& params);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;

  const ParameterStore& params() const { return *params_; }
  bool differentiable(Group g) const;

  // Leaves.
  NodeId constant(std::vector<double> values);
  NodeId constant(double value);
  /// Whole parameter; repeated calls for the same id return the same node.
  NodeId param(ParamId id);
  NodeId param_row(ParamId id, std::size_t row);
  /// Copy of a node's value with no gradient path back to it.
  NodeId detach(NodeId x);
  /// Values produced by detach() so far, in call order.
  const std::vector<std::vector<double>>& detached_values() const { return detached_; }
  /// Makes the n-th later detach() return `values[n]` instead of its input.
  /// Finite-difference probes use this to hold stop-gradient quantities at
  /// the point where the analytic gradient was taken.
  void replay_detached(std::vector<std::vector<double>> values);

  // Operators.
  NodeId add(NodeId a, NodeId b);
  NodeId subtract(NodeId a, NodeId b);
  NodeId multiply(NodeId a, NodeId b);
  /// `matrix` must be a rank-2 parameter leaf or a constant shaped with
  /// constant_matrix().
  NodeId matvec(NodeId matrix, NodeId vec);
  NodeId concat(std::span<const NodeId> parts);
  NodeId concat(std::initializer_list<NodeId> parts);
  NodeId tanh(NodeId x);
  NodeId leaky_relu(NodeId x, double slope);
  NodeId softmax(NodeId x);
  NodeId log_sigmoid(NodeId x);
  NodeId scale(NodeId x, double factor);
  NodeId sum(NodeId x);
  NodeId element(NodeId x, std::size_t index);
  NodeId complex_rotate(NodeId x, NodeId phase);
  NodeId complex_modulus_sum(NodeId x);

  NodeId constant_matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::span<const double> value(NodeId id) const;
  double scalar(NodeId id) const;
  bool requires_grad(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }

  /// Reverse pass from a scalar root. Returns a gradient for every parameter
  /// in the store (zero where unreachable or not differentiable). A tape can
  /// be differentiated once.
  GradientMap backward(NodeId root);

  /// Test hook: perturbs the backward kernel of one op kind so negative
  /// controls can confirm that gradient checks detect broken kernels.
  static void corrupt_backward_for_testing(OpKind kind, bool enabled);

 private:
  struct Node {
    OpKind kind;
    std::vector<double> value;
    std::vector<NodeId> inputs;
    std::size_t rows = 0;  // matrix leaves
    std::size_t cols = 0;
    double aux = 0.0;      // slope / factor / element index
    ParamId param = 0;
    std::size_t row = 0;
    bool requires_grad = false;
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const;
  void require_same_size(OpKind kind, NodeId a, NodeId b) const;

  const ParameterStore* params_;
  std::vector<bool> differentiable_;  // indexed by Group
  std::vector<Node> nodes_;
  std::unordered_map<ParamId, NodeId> param_nodes_;
  std::vector<std::vector<double>> detached_;
  std::optional<std::vector<std::vector<double>>> replay_;
  bool consumed_ = false;
};

}  // namespace adamf

#include "adamf/tape.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <string>

#include "adamf/errors.hpp"

namespace adamf {

namespace {

constexpr std::size_t kOpKinds = static_cast<std::size_t>(OpKind::complex_modulus_sum) + 1;
std::array<std::atomic<bool>, kOpKinds> g_corrupted{};

std::string sizes(std::size_t a, std::size_t b) {
  return "(" + std::to_string(a) + " vs " + std::to_string(b) + ")";
}

}  // namespace

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::constant: return "constant";
    case OpKind::param: return "param";
    case OpKind::param_row: return "param_row";
    case OpKind::add: return "add";
    case OpKind::subtract: return "subtract";
    case OpKind::multiply: return "multiply";
    case OpKind::matvec: return "matvec";
    case OpKind::concat: return "concat";
    case OpKind::tanh: return "tanh";
    case OpKind::leaky_relu: return "leaky_relu";
    case OpKind::softmax: return "softmax";
    case OpKind::log_sigmoid: return "log_sigmoid";
    case OpKind::scale: return "scale";
    case OpKind::sum: return "sum";
    case OpKind::element: return "element";
    case OpKind::complex_rotate: return "complex_rotate";
    case OpKind::complex_modulus_sum: return "complex_modulus_sum";
  }
  return "unknown";
}

namespace kernels {

void complex_rotate(std::span<const double> x, std::span<const double> phase,
                    std::span<double> out) {
  for (std::size_t k = 0; k < phase.size(); ++k) {
    const double re = x[2 * k];
    const double im = x[2 * k + 1];
    const double c = std::cos(phase[k]);
    const double s = std::sin(phase[k]);
    out[2 * k] = re * c - im * s;
    out[2 * k + 1] = re * s + im * c;
  }
}

double complex_modulus_sum(std::span<const double> x) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < x.size(); k += 2) {
    total += std::hypot(x[k], x[k + 1]);
  }
  return total;
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void softmax(std::span<const double> x, std::span<double> out) {
  const double max = *std::max_element(x.begin(), x.end());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - max);
    total += out[i];
  }
  for (auto& v : out) v /= total;
}

}  // namespace kernels

void Tape::corrupt_backward_for_testing(OpKind kind, bool enabled) {
  g_corrupted[static_cast<std::size_t>(kind)].store(enabled);
}

Tape::Tape(const ParameterStore& params, std::initializer_list<Group> differentiable)
    : Tape(params, std::span<const Group>(differentiable.begin(), differentiable.size())) {}

Tape::Tape(const ParameterStore& params, std::span<const Group> differentiable)
    : params_(&params), differentiable_(2, false) {
  for (Group g : differentiable) differentiable_[static_cast<std::size_t>(g)] = true;
}

Tape::Tape(const ParameterStore& params) : params_(&params), differentiable_(2, false) {}

bool Tape::differentiable(Group g) const { return differentiable_[static_cast<std::size_t>(g)]; }

NodeId Tape::push(Node n) {
  if (consumed_) throw ContractViolation("tape already consumed by backward()");
  if (!n.requires_grad) {
    for (NodeId in : n.inputs) {
      if (nodes_[in.index].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
  }
  nodes_.push_back(std::move(n));
  return NodeId{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw ContractViolation("node id " + std::to_string(id.index) + " out of range");
  }
  return nodes_[id.index];
}

void Tape::require_same_size(OpKind kind, NodeId a, NodeId b) const {
  const auto na = node(a).value.size();
  const auto nb = node(b).value.size();
  if (na != nb) {
    throw ContractViolation(std::string(to_string(kind)) + ": operand sizes differ " +
                            sizes(na, nb));
  }
}

std::span<const double> Tape::value(NodeId id) const { return node(id).value; }

double Tape::scalar(NodeId id) const {
  const auto& n = node(id);
  if (n.value.size() != 1) {
    throw ContractViolation("scalar(): node has " + std::to_string(n.value.size()) + " values");
  }
  return n.value[0];
}

bool Tape::requires_grad(NodeId id) const { return node(id).requires_grad; }

NodeId Tape::constant(std::vector<double> values) {
  Node n{OpKind::constant, std::move(values), {}};
  return push(std::move(n));
}

NodeId Tape::constant(double value) { return constant(std::vector<double>{value}); }

NodeId Tape::constant_matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols) {
    throw ContractViolation("constant_matrix: " + std::to_string(values.size()) +
                            " values for " + shape_string({rows, cols}));
  }
  Node n{OpKind::constant, std::move(values), {}};
  n.rows = rows;
  n.cols = cols;
  return push(std::move(n));
}

NodeId Tape::param(ParamId id) {
  if (auto it = param_nodes_.find(id); it != param_nodes_.end()) return it->second;
  const auto& p = params_->at(id);
  Node n{OpKind::param, p.value.data, {}};
  if (p.value.rank() == 2) {
    n.rows = p.value.shape[0];
    n.cols = p.value.shape[1];
  }
  n.param = id;
  n.requires_grad = differentiable(p.group);
  const NodeId node_id = push(std::move(n));
  param_nodes_.emplace(id, node_id);
  return node_id;
}

NodeId Tape::param_row(ParamId id, std::size_t row) {
  const auto& p = params_->at(id);
  if (p.value.rank() != 2 || row >= p.value.shape[0]) {
    throw ContractViolation("param_row: row " + std::to_string(row) + " invalid for " + p.name +
                            " " + p.value.shape_string());
  }
  auto r = p.value.row(row);
  Node n{OpKind::param_row, std::vector<double>(r.begin(), r.end()), {}};
  n.param = id;
  n.row = row;
  n.requires_grad = differentiable(p.group);
  return push(std::move(n));
}

NodeId Tape::detach(NodeId x) {
  const auto& src = node(x);
  Node n{OpKind::constant, src.value, {}};
  n.rows = src.rows;
  n.cols = src.cols;
  if (replay_) {
    const std::size_t k = detached_.size();
    if (k >= replay_->size() || (*replay_)[k].size() != n.value.size()) {
      throw ContractViolation("detach: replayed values do not match the recorded sequence");
    }
    n.value = (*replay_)[k];
  }
  detached_.push_back(n.value);
  return push(std::move(n));
}

void Tape::replay_detached(std::vector<std::vector<double>> values) {
  if (!detached_.empty()) throw ContractViolation("replay_detached: tape already has detached nodes");
  replay_ = std::move(values);
}

NodeId Tape::add(NodeId a, NodeId b) {
  require_same_size(OpKind::add, a, b);
  std::vector<double> out(node(a).value);
  const auto& vb = node(b).value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  return push(Node{OpKind::add, std::move(out), {a, b}});
}

NodeId Tape::subtract(NodeId a, NodeId b) {
  require_same_size(OpKind::subtract, a, b);
  std::vector<double> out(node(a).value);
  const auto& vb = node(b).value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  return push(Node{OpKind::subtract, std::move(out), {a, b}});
}

NodeId Tape::multiply(NodeId a, NodeId b) {
  const auto& va = node(a).value;
  const auto& vb = node(b).value;
  std::vector<double> out;
  if (va.size() == vb.size()) {
    out.resize(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] * vb[i];
  } else if (va.size() == 1) {
    out.resize(vb.size());
    for (std::size_t i = 0; i < vb.size(); ++i) out[i] = va[0] * vb[i];
  } else if (vb.size() == 1) {
    out.resize(va.size());
    for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] * vb[0];
  } else {
    throw ContractViolation("multiply: operand sizes differ " + sizes(va.size(), vb.size()));
  }
  return push(Node{OpKind::multiply, std::move(out), {a, b}});
}

NodeId Tape::matvec(NodeId matrix, NodeId vec) {
  const auto& m = node(matrix);
  const auto& x = node(vec).value;
  if (m.rows == 0 || m.cols == 0) {
    throw ContractViolation("matvec: left operand is not a matrix");
  }
  if (m.cols != x.size()) {
    throw ContractViolation("matvec: matrix " + shape_string({m.rows, m.cols}) +
                            " times vector of length " + std::to_string(x.size()));
  }
  std::vector<double> out(m.rows, 0.0);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* row = m.value.data() + i * m.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
  return push(Node{OpKind::matvec, std::move(out), {matrix, vec}});
}

NodeId Tape::concat(std::span<const NodeId> parts) {
  if (parts.empty()) throw ContractViolation("concat: no operands");
  std::vector<double> out;
  for (NodeId p : parts) {
    const auto& v = node(p).value;
    out.insert(out.end(), v.begin(), v.end());
  }
  return push(Node{OpKind::concat, std::move(out), {parts.begin(), parts.end()}});
}

NodeId Tape::concat(std::initializer_list<NodeId> parts) {
  return concat(std::span<const NodeId>(parts.begin(), parts.size()));
}

NodeId Tape::tanh(NodeId x) {
  std::vector<double> out(node(x).value);
  for (auto& v : out) v = std::tanh(v);
  return push(Node{OpKind::tanh, std::move(out), {x}});
}

NodeId Tape::leaky_relu(NodeId x, double slope) {
  std::vector<double> out(node(x).value);
  for (auto& v : out) v = v > 0.0 ? v : slope * v;
  Node n{OpKind::leaky_relu, std::move(out), {x}};
  n.aux = slope;
  return push(std::move(n));
}

NodeId Tape::softmax(NodeId x) {
  const auto& in = node(x).value;
  if (in.empty()) throw ContractViolation("softmax: empty operand");
  std::vector<double> out(in.size());
  kernels::softmax(in, out);
  return push(Node{OpKind::softmax, std::move(out), {x}});
}

NodeId Tape::log_sigmoid(NodeId x) {
  std::vector<double> out(node(x).value);
  for (auto& v : out) v = kernels::log_sigmoid(v);
  return push(Node{OpKind::log_sigmoid, std::move(out), {x}});
}

NodeId Tape::scale(NodeId x, double factor) {
  std::vector<double> out(node(x).value);
  for (auto& v : out) v *= factor;
  Node n{OpKind::scale, std::move(out), {x}};
  n.aux = factor;
  return push(std::move(n));
}

NodeId Tape::sum(NodeId x) {
  double total = 0.0;
  for (double v : node(x).value) total += v;
  return push(Node{OpKind::sum, {total}, {x}});
}

NodeId Tape::element(NodeId x, std::size_t index) {
  const auto& in = node(x).value;
  if (index >= in.size()) {
    throw ContractViolation("element: index " + std::to_string(index) + " out of range " +
                            std::to_string(in.size()));
  }
  Node n{OpKind::element, {in[index]}, {x}};
  n.aux = static_cast<double>(index);
  return push(std::move(n));
}

NodeId Tape::complex_rotate(NodeId x, NodeId phase) {
  const auto& vx = node(x).value;
  const auto& vp = node(phase).value;
  if (vx.size() != 2 * vp.size()) {
    throw ContractViolation("complex_rotate: vector of length " + std::to_string(vx.size()) +
                            " needs a phase of length " + std::to_string(vx.size() / 2) +
                            ", got " + std::to_string(vp.size()));
  }
  std::vector<double> out(vx.size());
  kernels::complex_rotate(vx, vp, out);
  return push(Node{OpKind::complex_rotate, std::move(out), {x, phase}});
}

NodeId Tape::complex_modulus_sum(NodeId x) {
  const auto& vx = node(x).value;
  if (vx.size() % 2 != 0) {
    throw ContractViolation("complex_modulus_sum: odd length " + std::to_string(vx.size()));
  }
  return push(Node{OpKind::complex_modulus_sum, {kernels::complex_modulus_sum(vx)}, {x}});
}

GradientMap Tape::backward(NodeId root) {
  if (consumed_) throw ContractViolation("backward(): tape already consumed");
  const auto& root_node = node(root);
  if (root_node.value.size() != 1) {
    throw ContractViolation("backward(): root must be scalar, has " +
                            std::to_string(root_node.value.size()) + " values");
  }
  consumed_ = true;

  GradientMap grads;
  std::vector<Tensor*> by_param(params_->size(), nullptr);
  for (ParamId id = 0; id < params_->size(); ++id) {
    const auto& p = params_->at(id);
    auto [it, _] = grads.emplace(p.name, Tensor(p.value.shape));
    by_param[id] = &it->second;
  }

  std::vector<std::vector<double>> adjoint(root.index + 1);
  adjoint[root.index] = {1.0};
  auto grad_of = [&](NodeId id) -> std::vector<double>* {
    const auto& n = nodes_[id.index];
    if (!n.requires_grad) return nullptr;
    auto& a = adjoint[id.index];
    if (a.empty()) a.assign(n.value.size(), 0.0);
    return &a;
  };

  for (std::size_t idx = root.index + 1; idx-- > 0;) {
    Node& n = nodes_[idx];
    if (!n.requires_grad || adjoint[idx].empty()) continue;
    std::vector<double> g = std::move(adjoint[idx]);
    if (g_corrupted[static_cast<std::size_t>(n.kind)].load()) {
      for (auto& v : g) v *= 1.01;
    }

    switch (n.kind) {
      case OpKind::constant:
        break;
      case OpKind::param: {
        auto& dst = by_param[n.param]->data;
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        break;
      }
      case OpKind::param_row: {
        auto dst = by_param[n.param]->row(n.row);
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
        break;
      }
      case OpKind::add: {
        if (auto* ga = grad_of(n.inputs[0]))
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        if (auto* gb = grad_of(n.inputs[1]))
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i];
        break;
      }
      case OpKind::subtract: {
        if (auto* ga = grad_of(n.inputs[0]))
          for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
        if (auto* gb = grad_of(n.inputs[1]))
          for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
        break;
      }
      case OpKind::multiply: {
        const auto& va = nodes_[n.inputs[0].index].value;
        const auto& vb = nodes_[n.inputs[1].index].value;
        auto* ga = grad_of(n.inputs[0]);
        auto* gb = grad_of(n.inputs[1]);
        for (std::size_t i = 0; i < g.size(); ++i) {
          const std::size_t ia = va.size() == 1 ? 0 : i;
          const std::size_t ib = vb.size() == 1 ? 0 : i;
          if (ga) (*ga)[ia] += g[i] * vb[ib];
          if (gb) (*gb)[ib] += g[i] * va[ia];
        }
        break;
      }
      case OpKind::matvec: {
        const auto& m = nodes_[n.inputs[0].index];
        const auto& x = nodes_[n.inputs[1].index].value;
        if (auto* gm = grad_of(n.inputs[0])) {
          for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t j = 0; j < m.cols; ++j) (*gm)[i * m.cols + j] += g[i] * x[j];
        }
        if (auto* gx = grad_of(n.inputs[1])) {
          for (std::size_t i = 0; i < m.rows; ++i)
            for (std::size_t j = 0; j < m.cols; ++j) (*gx)[j] += g[i] * m.value[i * m.cols + j];
        }
        break;
      }
      case OpKind::concat: {
        std::size_t offset = 0;
        for (NodeId in : n.inputs) {
          const std::size_t len = nodes_[in.index].value.size();
          if (auto* gi = grad_of(in))
            for (std::size_t i = 0; i < len; ++i) (*gi)[i] += g[offset + i];
          offset += len;
        }
        break;
      }
      case OpKind::tanh: {
        if (auto* gx = grad_of(n.inputs[0]))
          for (std::size_t i = 0; i < g.size(); ++i)
            (*gx)[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
        break;
      }
      case OpKind::leaky_relu: {
        const auto& x = nodes_[n.inputs[0].index].value;
        if (auto* gx = grad_of(n.inputs[0]))
          for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += x[i] > 0.0 ? g[i] : n.aux * g[i];
        break;
      }
      case OpKind::softmax: {
        if (auto* gx = grad_of(n.inputs[0])) {
          double dot = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * n.value[i];
          for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += n.value[i] * (g[i] - dot);
        }
        break;
      }
      case OpKind::log_sigmoid: {
        const auto& x = nodes_[n.inputs[0].index].value;
        if (auto* gx = grad_of(n.inputs[0]))
          for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * kernels::sigmoid(-x[i]);
        break;
      }
      case OpKind::scale: {
        if (auto* gx = grad_of(n.inputs[0]))
          for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i] * n.aux;
        break;
      }
      case OpKind::sum: {
        if (auto* gx = grad_of(n.inputs[0]))
          for (auto& v : *gx) v += g[0];
        break;
      }
      case OpKind::element: {
        if (auto* gx = grad_of(n.inputs[0])) (*gx)[static_cast<std::size_t>(n.aux)] += g[0];
        break;
      }
      case OpKind::complex_rotate: {
        const auto& phase = nodes_[n.inputs[1].index].value;
        auto* gx = grad_of(n.inputs[0]);
        auto* gp = grad_of(n.inputs[1]);
        for (std::size_t k = 0; k < phase.size(); ++k) {
          const double g_re = g[2 * k];
          const double g_im = g[2 * k + 1];
          if (gx) {
            const double c = std::cos(phase[k]);
            const double s = std::sin(phase[k]);
            (*gx)[2 * k] += g_re * c + g_im * s;
            (*gx)[2 * k + 1] += -g_re * s + g_im * c;
          }
          if (gp) (*gp)[k] += -g_re * n.value[2 * k + 1] + g_im * n.value[2 * k];
        }
        break;
      }
      case OpKind::complex_modulus_sum: {
        const auto& x = nodes_[n.inputs[0].index].value;
        if (auto* gx = grad_of(n.inputs[0])) {
          for (std::size_t k = 0; k + 1 < x.size(); k += 2) {
            const double modulus = std::hypot(x[k], x[k + 1]);
            if (modulus == 0.0) continue;  // subgradient 0 at the origin
            (*gx)[k] += g[0] * x[k] / modulus;
            (*gx)[k + 1] += g[0] * x[k + 1] / modulus;
          }
        }
        break;
      }
    }
  }
  return grads;
}

}  // namespace adamf

// SPDX-License-Identifier: Apache-2.0

#include "mechnet/autodiff.hpp"

#include <cmath>
#include <string>

#include "mechnet/error.hpp"
#include "mechnet/special.hpp"

namespace mechnet::ad {

const Matrix& Var::value() const { return tape_->value(index_); }
const Matrix& Var::grad() const { return tape_->grad(index_); }
bool Var::requires_grad() const { return tape_->requires_grad(index_); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, true, true, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) throw ContractError("op mixes tensors from different tapes");
    needs = needs || nodes_[in.index()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, needs, false, needs ? std::move(backward) : Backward{}});
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad_ref(std::size_t i) {
  Node& n = nodes_[i];
  if (n.grad.size() != n.value.size()) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw ContractError("backward: loss belongs to another tape");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward: loss must be a 1 x 1 scalar, got " + std::to_string(loss.rows()) +
                        " x " + std::to_string(loss.cols()));
  }
  for (auto& n : nodes_) {
    if (!n.leaf) n.grad.resize(0, 0);
  }
  if (!nodes_[loss.index()].requires_grad) return;
  grad_ref(loss.index())(0, 0) += 1.0;
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.leaf || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, i);
  }
}

void Tape::zero_grad() {
  for (auto& n : nodes_) n.grad.resize(0, 0);
}

void Tape::clear() { nodes_.clear(); }

namespace {

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
  }
}

// Accumulates `delta` into input `v` when it participates in the gradient.
template <typename Expr>
void accumulate(Tape& t, const Var& v, const Expr& delta) {
  if (t.requires_grad(v.index())) t.grad_ref(v.index()) += delta;
}

template <typename Fn, typename DFn>
Var elementwise(const Var& x, Fn f, DFn df_from_input_and_output) {
  Matrix y = x.value().unaryExpr(f);
  return x.tape()->record(std::move(y), {x}, [x, df_from_input_and_output](Tape& t, std::size_t self) {
    const Matrix& in = t.value(x.index());
    const Matrix& out = t.value(self);
    Matrix d(in.rows(), in.cols());
    for (Eigen::Index k = 0; k < in.size(); ++k) {
      d.data()[k] = df_from_input_and_output(in.data()[k], out.data()[k]);
    }
    accumulate(t, x, t.grad(self).cwiseProduct(d));
  });
}

Matrix row_softmax(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double top = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - top).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}

void check_segments(const char* op, const Var& x, std::span<const std::uint32_t> ids, std::size_t count) {
  if (static_cast<std::size_t>(x.rows()) != ids.size()) {
    throw DimensionError(std::string(op) + ": segment id count does not match row count");
  }
  for (auto id : ids) {
    if (id >= count) throw DimensionError(std::string(op) + ": segment id out of range");
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                         std::to_string(b.rows()) + " differ");
  }
  Matrix y = a.value() * b.value();
  return a.tape()->record(std::move(y), {a, b}, [a, b](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(a.index())) t.grad_ref(a.index()).noalias() += g * t.value(b.index()).transpose();
    if (t.requires_grad(b.index())) t.grad_ref(b.index()).noalias() += t.value(a.index()).transpose() * g;
  });
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  return a.tape()->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, std::size_t self) {
    accumulate(t, a, t.grad(self));
    accumulate(t, b, t.grad(self));
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  return a.tape()->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, std::size_t self) {
    accumulate(t, a, t.grad(self));
    accumulate(t, b, -t.grad(self));
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, std::size_t self) {
    accumulate(t, a, t.grad(self).cwiseProduct(t.value(b.index())));
    accumulate(t, b, t.grad(self).cwiseProduct(t.value(a.index())));
  });
}

Var mul_const(const Var& a, const Matrix& c) {
  if (a.rows() != c.rows() || a.cols() != c.cols()) throw DimensionError("mul_const: shape mismatch");
  return a.tape()->record(a.value().cwiseProduct(c), {a}, [a, c](Tape& t, std::size_t self) {
    accumulate(t, a, t.grad(self).cwiseProduct(c));
  });
}

Var scale(const Var& a, double c) {
  return a.tape()->record(a.value() * c, {a}, [a, c](Tape& t, std::size_t self) {
    accumulate(t, a, t.grad(self) * c);
  });
}

Var add_scalar(const Var& a, double c) {
  return a.tape()->record((a.value().array() + c).matrix(), {a}, [a](Tape& t, std::size_t self) {
    accumulate(t, a, t.grad(self));
  });
}

Var row_broadcast_add(const Var& x, const Var& row) {
  if (row.rows() != 1 || row.cols() != x.cols()) {
    throw DimensionError("row_broadcast_add: expected a 1 x " + std::to_string(x.cols()) + " row");
  }
  Matrix y = x.value().rowwise() + row.value().row(0);
  return x.tape()->record(std::move(y), {x, row}, [x, row](Tape& t, std::size_t self) {
    accumulate(t, x, t.grad(self));
    accumulate(t, row, t.grad(self).colwise().sum());
  });
}

Var relu(const Var& x) {
  return elementwise(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Var tanh(const Var& x) {
  return elementwise(
      x, [](double v) { return std::tanh(v); }, [](double, double out) { return 1.0 - out * out; });
}

Var exp(const Var& x) {
  return elementwise(
      x, [](double v) { return std::exp(v); }, [](double, double out) { return out; });
}

Var log(const Var& x) {
  return elementwise(
      x, [](double v) { return std::log(v); }, [](double in, double) { return 1.0 / in; });
}

Var softplus(const Var& x) {
  return elementwise(
      x, [](double v) { return special::softplus(v); },
      [](double in, double) { return 1.0 / (1.0 + std::exp(-in)); });
}

Var lgamma(const Var& x) {
  return elementwise(
      x, [](double v) { return special::lgamma(v); }, [](double in, double) { return special::digamma(in); });
}

Var digamma(const Var& x) {
  return elementwise(
      x, [](double v) { return special::digamma(v); }, [](double in, double) { return special::trigamma(in); });
}

Var softmax_row(const Var& x) {
  return x.tape()->record(row_softmax(x.value()), {x}, [x](Tape& t, std::size_t self) {
    const Matrix& y = t.value(self);
    const Matrix& g = t.grad(self);
    const Eigen::VectorXd inner = g.cwiseProduct(y).rowwise().sum();
    Matrix d = g.colwise() - inner;
    accumulate(t, x, y.cwiseProduct(d));
  });
}

Var log_softmax_row(const Var& x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double top = x.value().row(r).maxCoeff();
    const double lse = top + std::log((x.value().row(r).array() - top).exp().sum());
    y.row(r) = (x.value().row(r).array() - lse).matrix();
  }
  return x.tape()->record(std::move(y), {x}, [x](Tape& t, std::size_t self) {
    const Matrix& g = t.grad(self);
    const Matrix p = t.value(self).array().exp().matrix();
    const Eigen::VectorXd total = g.rowwise().sum();
    Matrix d = g - (p.array().colwise() * total.array()).matrix();
    accumulate(t, x, d);
  });
}

Var logsumexp_row(const Var& x) {
  Matrix y(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double top = x.value().row(r).maxCoeff();
    y(r, 0) = top + std::log((x.value().row(r).array() - top).exp().sum());
  }
  return x.tape()->record(std::move(y), {x}, [x](Tape& t, std::size_t self) {
    const Matrix p = row_softmax(t.value(x.index()));
    const Matrix& g = t.grad(self);
    accumulate(t, x, (p.array().colwise() * g.col(0).array()).matrix());
  });
}

Var segment_sum(const Var& x, std::span<const std::uint32_t> segment_ids, std::size_t segment_count) {
  check_segments("segment_sum", x, segment_ids, segment_count);
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(segment_count), x.cols());
  for (std::size_t r = 0; r < segment_ids.size(); ++r) y.row(segment_ids[r]) += x.value().row(r);
  std::vector<std::uint32_t> ids(segment_ids.begin(), segment_ids.end());
  return x.tape()->record(std::move(y), {x}, [x, ids = std::move(ids)](Tape& t, std::size_t self) {
    if (!t.requires_grad(x.index())) return;
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad_ref(x.index());
    for (std::size_t r = 0; r < ids.size(); ++r) gx.row(r) += g.row(ids[r]);
  });
}

Var segment_mean(const Var& x, std::span<const std::uint32_t> segment_ids, std::size_t segment_count) {
  check_segments("segment_mean", x, segment_ids, segment_count);
  std::vector<double> inv(segment_count, 0.0);
  for (auto id : segment_ids) inv[id] += 1.0;
  for (double& c : inv) c = c > 0.0 ? 1.0 / c : 0.0;
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(segment_count), x.cols());
  for (std::size_t r = 0; r < segment_ids.size(); ++r) y.row(segment_ids[r]) += x.value().row(r);
  for (std::size_t s = 0; s < segment_count; ++s) y.row(s) *= inv[s];
  std::vector<std::uint32_t> ids(segment_ids.begin(), segment_ids.end());
  return x.tape()->record(std::move(y), {x},
                          [x, ids = std::move(ids), inv = std::move(inv)](Tape& t, std::size_t self) {
                            if (!t.requires_grad(x.index())) return;
                            const Matrix& g = t.grad(self);
                            Matrix& gx = t.grad_ref(x.index());
                            for (std::size_t r = 0; r < ids.size(); ++r) gx.row(r) += g.row(ids[r]) * inv[ids[r]];
                          });
}

Var spmm(const SparseMatrix& a, const Var& x) {
  if (a.cols() != x.rows()) throw DimensionError("spmm: sparse operand columns do not match rows");
  Matrix y = a * x.value();
  // The operand is copied into the closure; batches are rebuilt per step so
  // the cost is one copy per forward pass.
  return x.tape()->record(std::move(y), {x}, [x, a](Tape& t, std::size_t self) {
    if (!t.requires_grad(x.index())) return;
    t.grad_ref(x.index()).noalias() += a.transpose() * t.grad(self);
  });
}

Var sum(const Var& x) {
  Matrix y(1, 1);
  y(0, 0) = x.value().sum();
  return x.tape()->record(std::move(y), {x}, [x](Tape& t, std::size_t self) {
    if (!t.requires_grad(x.index())) return;
    t.grad_ref(x.index()).array() += t.grad(self)(0, 0);
  });
}

Var mean(const Var& x) {
  if (x.value().size() == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.value().size()));
}

Var slice_cols(const Var& x, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > x.cols()) throw DimensionError("slice_cols: range out of bounds");
  Matrix y = x.value().middleCols(start, count);
  return x.tape()->record(std::move(y), {x}, [x, start, count](Tape& t, std::size_t self) {
    if (!t.requires_grad(x.index())) return;
    t.grad_ref(x.index()).middleCols(start, count) += t.grad(self);
  });
}

Var group_sum_cols(const Var& x, Eigen::Index group) {
  if (group <= 0 || x.cols() % group != 0) throw DimensionError("group_sum_cols: columns not divisible by group");
  const Eigen::Index k = x.cols() / group;
  Matrix y = Matrix::Zero(x.rows(), k);
  for (Eigen::Index c = 0; c < x.cols(); ++c) y.col(c / group) += x.value().col(c);
  return x.tape()->record(std::move(y), {x}, [x, group](Tape& t, std::size_t self) {
    if (!t.requires_grad(x.index())) return;
    const Matrix& g = t.grad(self);
    Matrix& gx = t.grad_ref(x.index());
    for (Eigen::Index c = 0; c < gx.cols(); ++c) gx.col(c) += g.col(c / group);
  });
}

AdamState make_adam(const AdamConfig& config, std::span<const Parameter> params) {
  AdamState state{config, 0, {}, {}};
  for (const auto& p : params) {
    state.m.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    state.v.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
  return state;
}

void adam_step(AdamState& state, std::span<Parameter> params) {
  if (params.size() != state.m.size()) throw ContractError("adam_step: parameter count changed");
  for (const auto& p : params) {
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw ContractError("adam_step: missing gradient for " + p.name);
    }
  }
  const auto& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * p.grad;
    state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * p.grad.cwiseProduct(p.grad);
    const auto m_hat = state.m[i].array() / correction1;
    const auto v_hat = state.v[i].array() / correction2;
    p.value.array() -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
    p.grad.setZero();
  }
}

}  // namespace mechnet::ad

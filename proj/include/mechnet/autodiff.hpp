// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace mechnet::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class Tape;

// Handle to a tensor recorded on a Tape. Cheap to copy; valid as long as
// the tape is alive and not cleared.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  // Zero-sized until something flows into it.
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;

  Tape* tape() const noexcept { return tape_; }
  std::size_t index() const noexcept { return index_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

// Linear record of every op evaluated since construction (or clear()).
// backward() walks it in reverse. A tape is built per batch and discarded;
// it is not thread-safe, but independent tapes may run concurrently.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Trainable leaf. Gradients accumulate here across backward() calls.
  Var leaf(Matrix value);

  // Seeds d(loss)/d(loss) = 1 and applies the chain rule. Intermediate
  // gradients are reset first, so repeated calls add to leaf gradients
  // only. Throws ContractError for a non-scalar loss.
  void backward(const Var& loss);

  void zero_grad();
  void clear();
  std::size_t size() const noexcept { return nodes_.size(); }

  // Used by op implementations.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  const Matrix& value(std::size_t i) const { return nodes_[i].value; }
  const Matrix& grad(std::size_t i) const { return nodes_[i].grad; }
  bool requires_grad(std::size_t i) const { return nodes_[i].requires_grad; }
  // Gradient accumulator of node i, allocated as zeros on first use.
  Matrix& grad_ref(std::size_t i);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool leaf = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

// Ops. All raise DimensionError naming the op on shape mismatch.
Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);               // elementwise
Var mul_const(const Var& a, const Matrix& c);      // elementwise by a constant
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);
Var row_broadcast_add(const Var& x, const Var& row);  // x (n x d) + row (1 x d)
Var relu(const Var& x);
Var tanh(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var softplus(const Var& x);
Var lgamma(const Var& x);
Var digamma(const Var& x);
Var softmax_row(const Var& x);
Var log_softmax_row(const Var& x);
Var logsumexp_row(const Var& x);  // n x d -> n x 1
// Row r of x is added into output row segment_ids[r]; output has
// segment_count rows.
Var segment_sum(const Var& x, std::span<const std::uint32_t> segment_ids, std::size_t segment_count);
// As segment_sum, divided by the segment size (empty segments give 0).
Var segment_mean(const Var& x, std::span<const std::uint32_t> segment_ids, std::size_t segment_count);
// a (constant, sparse) * x.
Var spmm(const SparseMatrix& a, const Var& x);
Var sum(const Var& x);   // -> 1 x 1
Var mean(const Var& x);  // -> 1 x 1
Var slice_cols(const Var& x, Eigen::Index start, Eigen::Index count);
// Sums each run of `group` consecutive columns: n x (k * group) -> n x k.
Var group_sum_cols(const Var& x, Eigen::Index group);

// A trainable tensor owned outside any tape.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;  // same shape as value once populated
};

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

AdamState make_adam(const AdamConfig& config, std::span<const Parameter> params);

// Bias-corrected Adam update, then zeroes every gradient. ContractError if a
// parameter has no gradient of matching shape.
void adam_step(AdamState& state, std::span<Parameter> params);

}  // namespace mechnet::ad

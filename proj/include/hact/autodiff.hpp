#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hact/graph.hpp"

namespace hact::ad {

/// Dense row-major 2-D tensor of doubles. Scalars are 1x1.
struct Tensor {
  std::array<std::size_t, 2> shape{0, 0};
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;  // same size as data once requires_grad is set

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Tensor parameter(std::size_t rows, std::size_t cols, double fill = 0.0);

  std::size_t rows() const { return shape[0]; }
  std::size_t cols() const { return shape[1]; }
  std::size_t size() const { return data.size(); }
  double operator()(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }

  void zero_grad();
};

class Tape;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records a forward computation and replays it backwards once.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf holding a copy of `t`; gradients flow into `t.grad` when t.requires_grad.
  Var leaf(Tensor& t);
  /// Leaf without gradient.
  Var constant(Tensor t);

  /// Accumulates d(root)/d(leaf) into every requires_grad leaf. The root must be
  /// 1x1; a tape can be replayed only once.
  void backward(Var root);

  /// Gradient of the last backward() root with respect to any recorded value.
  const std::vector<double>& grad(Var v) const;
  const Tensor& value(Var v) const { return nodes_.at(v.id_).value; }
  std::size_t size() const { return nodes_.size(); }

  using BackwardFn = std::function<void(Tape&, std::size_t)>;
  /// `op` names the operation for inspection; it must outlive the tape (use literals).
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward, std::string_view op = {});
  std::vector<double>& grad_mut(std::size_t id) { return nodes_[id].grad; }
  const Tensor& value_of(std::size_t id) const { return nodes_[id].value; }
  std::string_view op_of(std::size_t id) const { return nodes_.at(id).op; }
  const std::vector<std::size_t>& inputs_of(std::size_t id) const { return nodes_.at(id).inputs; }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    std::string_view op;
    Tensor* leaf = nullptr;
  };
  std::vector<Node> nodes_;
  bool replayed_ = false;
};

Var matmul(Var a, Var b);
/// Elementwise sum of equal shapes, or a (n x d) plus a (1 x d) bias row.
Var add(Var a, Var b);
/// max(0, x); the subgradient at 0 is 0.
Var relu(Var a);
/// axis 0 stacks rows, axis 1 stacks columns.
Var concat(std::span<const Var> parts, int axis);
/// out[s] = sum of rows i with segment_ids[i] == s.
Var segment_sum(Var a, std::span<const NodeIndex> segment_ids, std::size_t num_segments);
/// out[i] = a[rows[i]].
Var row_gather(Var a, std::span<const NodeIndex> rows);
/// Sum of all entries, as 1x1.
Var sum(Var a);
/// Mean over rows of -log softmax(logits)[label].
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // added to the gradient: g += wd * theta
};

class Adam {
 public:
  Adam(std::vector<Tensor*> params, AdamConfig config);

  void step();
  void zero_grad();
  long steps() const { return t_; }

 private:
  std::vector<Tensor*> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

struct FiniteDiffResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

/// Compares backward() against central differences for every entry of `params`.
/// Relative error is |a - n| / max(|a|, |n|, 1e-8).
FiniteDiffResult finite_diff_check(const std::function<Var(Tape&)>& loss, std::span<Tensor* const> params,
                                   double h = 1e-5);

}  // namespace hact::ad

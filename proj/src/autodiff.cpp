#include "hact/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hact/errors.hpp"

namespace hact::ad {

namespace {

std::string shape_str(const Tensor& t) {
  return "(" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + ")";
}

Tape& same_tape(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) throw std::invalid_argument("operands recorded on different tapes");
  return *a.tape();
}

// C (n x m) += A (n x k) * B (k x m)
void gemm_nn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c + i * m;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

// C (n x k) += G (n x m) * B^T, B is (k x m)
void gemm_nt(const double* g, const double* b, double* c, std::size_t n, std::size_t m, std::size_t k) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* gi = g + i * m;
    double* ci = c + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * m;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += gi[j] * bp[j];
      ci[p] += s;
    }
  }
}

// C (k x m) += A^T * G, A is (n x k), G is (n x m)
void gemm_tn(const double* a, const double* g, double* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * k;
    const double* gi = g + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c + p * m;
      for (std::size_t j = 0; j < m; ++j) cp[j] += av * gi[j];
    }
  }
}

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill) : shape{rows, cols}, data(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : shape{rows, cols}, data(std::move(values)) {
  if (data.size() != rows * cols) throw ShapeError("tensor data size does not match shape");
}

Tensor Tensor::parameter(std::size_t rows, std::size_t cols, double fill) {
  Tensor t(rows, cols, fill);
  t.requires_grad = true;
  t.grad.assign(t.data.size(), 0.0);
  return t;
}

void Tensor::zero_grad() { grad.assign(data.size(), 0.0); }

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("empty Var");
  return tape_->value(*this);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward, std::string_view op) {
  if (replayed_) throw std::logic_error("tape already replayed; record a new forward pass");
  Node n;
  n.value = std::move(value);
  n.value.requires_grad = false;
  n.value.grad.clear();
  n.inputs = std::move(inputs);
  n.backward = std::move(backward);
  n.op = op;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor& t) {
  Tensor copy(t.rows(), t.cols(), t.data);
  Var v = record(std::move(copy), {}, nullptr, "leaf");
  if (t.requires_grad) {
    if (t.grad.size() != t.data.size()) t.zero_grad();
    nodes_[v.id_].leaf = &t;
  }
  return v;
}

Var Tape::constant(Tensor t) { return record(std::move(t), {}, nullptr, "constant"); }

void Tape::backward(Var root) {
  if (root.tape_ != this) throw std::invalid_argument("backward: root belongs to another tape");
  if (replayed_) throw std::logic_error("backward called twice on the same tape; run the forward pass again");
  const auto& rv = nodes_[root.id_].value;
  if (rv.rows() != 1 || rv.cols() != 1) throw ShapeError("backward: root must be a scalar, got " + shape_str(rv));
  replayed_ = true;
  for (auto& n : nodes_) n.grad.assign(n.value.size(), 0.0);
  nodes_[root.id_].grad[0] = 1.0;
  for (std::size_t i = root.id_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward) n.backward(*this, i);
    if (n.leaf != nullptr) {
      for (std::size_t j = 0; j < n.grad.size(); ++j) n.leaf->grad[j] += n.grad[j];
    }
  }
}

const std::vector<double>& Tape::grad(Var v) const {
  if (!replayed_) throw std::logic_error("grad: backward has not run");
  return nodes_.at(v.id_).grad;
}

Var matmul(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) throw ShapeError("matmul: " + shape_str(av) + " x " + shape_str(bv));
  const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
  Tensor out(n, m);
  gemm_nn(av.data.data(), bv.data.data(), out.data.data(), n, k, m);
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib, n, k, m](Tape& t, std::size_t self) {
    const auto& g = t.grad_mut(self);
    gemm_nt(g.data(), t.value_of(ib).data.data(), t.grad_mut(ia).data(), n, m, k);
    gemm_tn(t.value_of(ia).data.data(), g.data(), t.grad_mut(ib).data(), n, k, m);
  }, "matmul");
}

Var add(Var a, Var b) {
  Tape& tape = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool broadcast = av.shape != bv.shape;
  if (broadcast && !(bv.rows() == 1 && bv.cols() == av.cols())) {
    throw ShapeError("add: " + shape_str(av) + " + " + shape_str(bv));
  }
  Tensor out = Tensor(av.rows(), av.cols(), av.data);
  const std::size_t cols = av.cols();
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += broadcast ? bv.data[i % cols] : bv.data[i];
  const std::size_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), {ia, ib}, [ia, ib, broadcast, cols](Tape& t, std::size_t self) {
    const auto& g = t.grad_mut(self);
    auto& ga = t.grad_mut(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    auto& gb = t.grad_mut(ib);
    for (std::size_t i = 0; i < g.size(); ++i) gb[broadcast ? i % cols : i] += g[i];
  }, "add");
}

Var relu(Var a) {
  Tape& tape = *a.tape();
  Tensor out = Tensor(a.rows(), a.cols(), a.value().data);
  for (auto& x : out.data) x = x > 0.0 ? x : 0.0;
  const std::size_t ia = a.id();
  return tape.record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const auto& g = t.grad_mut(self);
    const auto& x = t.value_of(ia).data;
    auto& ga = t.grad_mut(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) ga[i] += g[i];
    }
  }, "relu");
}

Var concat(std::span<const Var> parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
  Tape& tape = *parts[0].tape();
  std::vector<std::size_t> ids;
  std::size_t rows = 0, cols = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const Var& p = parts[i];
    if (p.tape() != &tape) throw std::invalid_argument("operands recorded on different tapes");
    ids.push_back(p.id());
    if (axis == 0) {
      if (i > 0 && p.cols() != cols) throw ShapeError("concat axis 0: column count mismatch");
      cols = p.cols();
      rows += p.rows();
    } else {
      if (i > 0 && p.rows() != rows) throw ShapeError("concat axis 1: row count mismatch");
      rows = p.rows();
      cols += p.cols();
    }
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < v.rows(); ++r) {
      for (std::size_t c = 0; c < v.cols(); ++c) {
        if (axis == 0) {
          out(offset + r, c) = v(r, c);
        } else {
          out(r, offset + c) = v(r, c);
        }
      }
    }
    offset += axis == 0 ? v.rows() : v.cols();
  }
  return tape.record(std::move(out), ids, [ids, axis, cols](Tape& t, std::size_t self) {
    const auto& g = t.grad_mut(self);
    std::size_t offset = 0;
    for (auto id : ids) {
      const Tensor& v = t.value_of(id);
      auto& gi = t.grad_mut(id);
      for (std::size_t r = 0; r < v.rows(); ++r) {
        for (std::size_t c = 0; c < v.cols(); ++c) {
          gi[r * v.cols() + c] += axis == 0 ? g[(offset + r) * cols + c] : g[r * cols + offset + c];
        }
      }
      offset += axis == 0 ? v.rows() : v.cols();
    }
  }, "concat");
}

Var segment_sum(Var a, std::span<const NodeIndex> segment_ids, std::size_t num_segments) {
  const Tensor& av = a.value();
  if (segment_ids.size() != av.rows()) throw ShapeError("segment_sum: one segment id per row required");
  const std::size_t d = av.cols();
  Tensor out(num_segments, d);
  for (std::size_t i = 0; i < segment_ids.size(); ++i) {
    if (segment_ids[i] >= num_segments) throw std::out_of_range("segment_sum: segment id out of range");
    const double* src = av.data.data() + i * d;
    double* dst = out.data.data() + segment_ids[i] * d;
    for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
  }
  std::vector<NodeIndex> ids(segment_ids.begin(), segment_ids.end());
  const std::size_t ia = a.id();
  return a.tape()->record(std::move(out), {ia}, [ia, ids = std::move(ids), d](Tape& t, std::size_t self) {
    const auto& g = t.grad_mut(self);
    auto& ga = t.grad_mut(ia);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double* src = g.data() + ids[i] * d;
      double* dst = ga.data() + i * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
  }, "segment_sum");
}

Var row_gather(Var a, std::span<const NodeIndex> rows) {
  const Tensor& av = a.value();
  const std::size_t d = av.cols();
  Tensor out(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= av.rows()) throw std::out_of_range("row_gather: row index out of range");
    std::copy_n(av.data.data() + rows[i] * d, d, out.data.data() + i * d);
  }
  std::vector<NodeIndex> idx(rows.begin(), rows.end());
  const std::size_t ia = a.id();
  return a.tape()->record(std::move(out), {ia}, [ia, idx = std::move(idx), d](Tape& t, std::size_t self) {
    const auto& g = t.grad_mut(self);
    auto& ga = t.grad_mut(ia);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const double* src = g.data() + i * d;
      double* dst = ga.data() + idx[i] * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
    }
  }, "row_gather");
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data) s += x;
  const std::size_t ia = a.id();
  return a.tape()->record(Tensor(1, 1, s), {ia}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad_mut(self)[0];
    for (auto& x : t.grad_mut(ia)) x += g;
  }, "sum");
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& z = logits.value();
  const std::size_t n = z.rows(), c = z.cols();
  if (labels.size() != n || n == 0) throw ShapeError("softmax_cross_entropy: one label per row required");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= c) throw std::out_of_range("softmax_cross_entropy: label out of range");
  }
  std::vector<double> probs(n * c);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* zi = z.data.data() + i * c;
    const double mx = *std::max_element(zi, zi + c);
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(zi[j] - mx);
    const double lse = mx + std::log(s);
    loss += lse - zi[labels[i]];
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(zi[j] - lse);
  }
  loss /= static_cast<double>(n);
  std::vector<int> ys(labels.begin(), labels.end());
  const std::size_t il = logits.id();
  return logits.tape()->record(
      Tensor(1, 1, loss), {il}, [il, probs = std::move(probs), ys = std::move(ys), n, c](Tape& t, std::size_t self) {
        const double g = t.grad_mut(self)[0] / static_cast<double>(n);
        auto& gl = t.grad_mut(il);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            const double target = static_cast<std::size_t>(ys[i]) == j ? 1.0 : 0.0;
            gl[i * c + j] += g * (probs[i * c + j] - target);
          }
        }
      }, "softmax_cross_entropy");
}

Adam::Adam(std::vector<Tensor*> params, AdamConfig config) : params_(std::move(params)), cfg_(config) {
  for (auto* p : params_) {
    if (!p->requires_grad) throw std::invalid_argument("Adam: parameter does not require grad");
    if (p->grad.size() != p->data.size()) p->zero_grad();
    m_.emplace_back(p->data.size(), 0.0);
    v_.emplace_back(p->data.size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = *params_[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double g = p.grad[i] + cfg_.weight_decay * p.data[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

FiniteDiffResult finite_diff_check(const std::function<Var(Tape&)>& loss, std::span<Tensor* const> params,
                                   double h) {
  for (auto* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  auto eval = [&] {
    Tape tape;
    return loss(tape).value().data.at(0);
  };
  FiniteDiffResult result;
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->data.size(); ++i) {
      const double orig = p->data[i];
      p->data[i] = orig + h;
      const double fp = eval();
      p->data[i] = orig - h;
      const double fm = eval();
      p->data[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double analytic = p->grad[i];
      const double abs_err = std::abs(analytic - numeric);
      const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      result.max_abs_error = std::max(result.max_abs_error, abs_err);
      result.max_rel_error = std::max(result.max_rel_error, rel);
      ++result.checked;
    }
  }
  return result;
}

}  // namespace hact::ad

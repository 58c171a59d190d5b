#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "matchrank/errors.hpp"

namespace matchrank {

using Shape = std::vector<std::size_t>;

namespace detail {
struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
};
}  // namespace detail

// Dense row-major f64 tensor of rank 0..2. Immutable after creation: ops
// return fresh tensors and gradients live outside the tensor, so shared
// parameter tensors may be read from concurrent tapes.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  std::size_t size() const { return impl_->data.size(); }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t rows() const;  // rank-2 only
  std::size_t cols() const;  // rank-2 only
  const std::vector<double>& data() const { return impl_->data; }
  double value() const;  // single-element tensors only
  double operator[](std::size_t i) const { return impl_->data[i]; }
  bool requires_grad() const { return impl_->requires_grad; }

  // identity used as gradient-map key
  const detail::TensorImpl* id() const { return impl_.get(); }

  std::string shape_str() const;

 private:
  std::shared_ptr<const detail::TensorImpl> impl_;
};

// Gradients keyed by tensor identity. Produced by Tape::backward; combined
// across batch shards by summation.
class GradientMap {
 public:
  bool contains(const Tensor& t) const { return grads_.count(t.id()) != 0; }
  const std::vector<double>& at(const Tensor& t) const;
  const std::vector<double>* find(const Tensor& t) const;
  void set(const Tensor& t, std::vector<double> g);
  // elementwise sum; entries missing on either side are kept/inserted
  void accumulate(const GradientMap& other);
  void scale(double factor);
  std::size_t size() const { return grads_.size(); }

 private:
  std::unordered_map<const detail::TensorImpl*, std::vector<double>> grads_;
};

// Per-backward gradient accumulator. Local to one backward() call, so
// concurrent tapes never contend even when they share leaf tensors.
class GradStore {
 public:
  std::vector<double>& of(const Tensor& t);
  const std::vector<double>* find(const Tensor& t) const;

 private:
  std::unordered_map<const detail::TensorImpl*, std::vector<double>> g_;
};

// Define-by-run tape: ops append pull-back closures in execution order,
// which is already a topological order, so backward is a single reverse
// sweep visiting each node once. Rebuilt per forward pass; single-threaded.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t node_count() const { return nodes_.size(); }
  void reset();

  // --- elementwise ---
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor div(const Tensor& a, const Tensor& b);  // throws on zero denominator
  Tensor add_scalar(const Tensor& a, double c);
  Tensor mul_scalar(const Tensor& a, double c);
  Tensor log(const Tensor& a);  // throws on non-positive input
  Tensor exp(const Tensor& a);  // throws on overflow to infinity
  Tensor abs(const Tensor& a);
  Tensor sigmoid(const Tensor& a);
  Tensor prelu(const Tensor& x, const Tensor& slope);  // slope: {1} or one per channel

  // --- linear algebra ---
  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);  // x*w + b per row

  // --- shape / gather ---
  Tensor reshape(const Tensor& a, Shape shape);
  Tensor concat(const std::vector<Tensor>& parts);      // along last axis
  Tensor stack_rows(const std::vector<Tensor>& rows);   // n x {d} -> {n,d}
  Tensor tile_rows(const Tensor& v, std::size_t n);     // {d} -> {n,d}, rows = v
  Tensor tile_cols(const Tensor& v, std::size_t m);     // {n} -> {n,m}, cols = v
  Tensor repeat_blocks(const Tensor& x, std::size_t times);     // {n,d} -> {times*n,d}
  Tensor repeat_rows_each(const Tensor& x, std::size_t times);  // {n,d} -> {n*times,d}
  Tensor gather_row(const Tensor& table, std::size_t row);      // {v,d} -> {d}

  // --- reductions ---
  Tensor sum(const Tensor& a);       // -> scalar
  Tensor mean(const Tensor& a);      // -> scalar
  Tensor sum_rows(const Tensor& a);  // {n,m} -> {n}
  Tensor sum_cols(const Tensor& a);  // {n,m} -> {m}

  // --- softmax ---
  // Masked positions get exactly 0; each unmasked row is a softmax over its
  // unmasked logits, stabilized by max-subtraction over unmasked entries.
  // mask is row-major, same element count as logits (rank 1 or 2).
  Tensor masked_softmax(const Tensor& logits, const std::vector<bool>& mask);

  // Reverse sweep from a single-element root. Returns gradients for every
  // requires_grad leaf that participated in the recorded graph.
  GradientMap backward(const Tensor& root);

 private:
  using PullBack = std::function<void(GradStore&)>;
  void record(const Tensor& out, PullBack pull);
  bool track(const Tensor& t);  // returns requires_grad && recording

  bool recording_;
  std::vector<PullBack> nodes_;
  std::vector<Tensor> leaves_;  // requires_grad inputs not produced here
  std::unordered_map<const detail::TensorImpl*, bool> seen_;
};

}  // namespace matchrank

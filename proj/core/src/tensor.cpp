#include "matchrank/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace matchrank {

namespace {

std::size_t shape_product(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_to_str(const Shape& s) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << '}';
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                     b.shape_str());
  }
}

std::size_t channels_of(const Tensor& x) {
  return x.rank() == 0 ? 1 : x.shape().back();
}

}  // namespace

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_product(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_to_str(shape) + " does not hold " +
                     std::to_string(data.size()) + " values");
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  impl_ = std::move(impl);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return Tensor({}, {v}, requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  auto n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, v), requires_grad);
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw ShapeError("rows: tensor has rank " + std::to_string(rank()));
  return impl_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ShapeError("cols: tensor has rank " + std::to_string(rank()));
  return impl_->shape[1];
}

double Tensor::value() const {
  if (size() != 1) {
    throw ValueError("value: tensor with " + std::to_string(size()) +
                     " elements is not a scalar");
  }
  return impl_->data[0];
}

std::string Tensor::shape_str() const { return shape_to_str(impl_->shape); }

const std::vector<double>& GradientMap::at(const Tensor& t) const {
  auto it = grads_.find(t.id());
  if (it == grads_.end()) throw ValueError("gradient map: tensor not present");
  return it->second;
}

const std::vector<double>* GradientMap::find(const Tensor& t) const {
  auto it = grads_.find(t.id());
  return it == grads_.end() ? nullptr : &it->second;
}

void GradientMap::set(const Tensor& t, std::vector<double> g) {
  grads_[t.id()] = std::move(g);
}

void GradientMap::accumulate(const GradientMap& other) {
  for (const auto& [id, g] : other.grads_) {
    auto it = grads_.find(id);
    if (it == grads_.end()) {
      grads_.emplace(id, g);
    } else {
      if (it->second.size() != g.size()) {
        throw ShapeError("gradient map: accumulating mismatched gradient sizes");
      }
      for (std::size_t i = 0; i < g.size(); ++i) it->second[i] += g[i];
    }
  }
}

void GradientMap::scale(double factor) {
  for (auto& [id, g] : grads_) {
    for (double& v : g) v *= factor;
  }
}

std::vector<double>& GradStore::of(const Tensor& t) {
  auto [it, inserted] = g_.try_emplace(t.id());
  if (inserted) it->second.assign(t.size(), 0.0);
  return it->second;
}

const std::vector<double>* GradStore::find(const Tensor& t) const {
  auto it = g_.find(t.id());
  return it == g_.end() ? nullptr : &it->second;
}

void Tape::reset() {
  nodes_.clear();
  leaves_.clear();
  seen_.clear();
}

bool Tape::track(const Tensor& t) {
  if (!recording_ || !t.requires_grad()) return false;
  auto [it, inserted] = seen_.try_emplace(t.id(), false);
  if (inserted) leaves_.push_back(t);  // requires_grad input not produced here
  return true;
}

void Tape::record(const Tensor& out, PullBack pull) {
  seen_[out.id()] = true;  // produced, not a leaf
  nodes_.push_back(std::move(pull));
}

GradientMap Tape::backward(const Tensor& root) {
  if (!root.defined() || root.size() != 1) {
    throw ValueError("backward: root must be a single-element tensor, got shape " +
                     (root.defined() ? root.shape_str() : std::string("<undefined>")));
  }
  track(root);  // a bare leaf root still reports d(root)/d(root) = 1
  GradStore store;
  store.of(root)[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)(store);
  GradientMap result;
  for (const Tensor& leaf : leaves_) {
    if (const auto* g = store.find(leaf)) {
      result.set(leaf, *g);
    } else {
      result.set(leaf, std::vector<double>(leaf.size(), 0.0));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Tensor Tape::add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  const bool ga = track(a), gb = track(b);
  Tensor res(a.shape(), std::move(out), ga || gb);
  if (!res.requires_grad()) return res;
  record(res, [a, b, res, ga, gb](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    if (ga) {
      auto& da = s.of(a);
      for (std::size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i];
    }
    if (gb) {
      auto& db = s.of(b);
      for (std::size_t i = 0; i < g->size(); ++i) db[i] += (*g)[i];
    }
  });
  return res;
}

Tensor Tape::sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  const bool ga = track(a), gb = track(b);
  Tensor res(a.shape(), std::move(out), ga || gb);
  if (!res.requires_grad()) return res;
  record(res, [a, b, res, ga, gb](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    if (ga) {
      auto& da = s.of(a);
      for (std::size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i];
    }
    if (gb) {
      auto& db = s.of(b);
      for (std::size_t i = 0; i < g->size(); ++i) db[i] -= (*g)[i];
    }
  });
  return res;
}

Tensor Tape::mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  const bool ga = track(a), gb = track(b);
  Tensor res(a.shape(), std::move(out), ga || gb);
  if (!res.requires_grad()) return res;
  record(res, [a, b, res, ga, gb](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    if (ga) {
      auto& da = s.of(a);
      for (std::size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i] * b[i];
    }
    if (gb) {
      auto& db = s.of(b);
      for (std::size_t i = 0; i < g->size(); ++i) db[i] += (*g)[i] * a[i];
    }
  });
  return res;
}

Tensor Tape::div(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "div");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (b[i] == 0.0) throw ValueError("div: zero denominator at index " + std::to_string(i));
    out[i] = a[i] / b[i];
  }
  const bool ga = track(a), gb = track(b);
  Tensor res(a.shape(), std::move(out), ga || gb);
  if (!res.requires_grad()) return res;
  record(res, [a, b, res, ga, gb](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    if (ga) {
      auto& da = s.of(a);
      for (std::size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i] / b[i];
    }
    if (gb) {
      auto& db = s.of(b);
      for (std::size_t i = 0; i < g->size(); ++i) db[i] -= (*g)[i] * res[i] / b[i];
    }
  });
  return res;
}

Tensor Tape::add_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + c;
  if (!track(a)) return Tensor(a.shape(), std::move(out));
  Tensor res(a.shape(), std::move(out), true);
  record(res, [a, res](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& da = s.of(a);
    for (std::size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i];
  });
  return res;
}

Tensor Tape::mul_scalar(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * c;
  if (!track(a)) return Tensor(a.shape(), std::move(out));
  Tensor res(a.shape(), std::move(out), true);
  record(res, [a, res, c](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& da = s.of(a);
    for (std::size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i] * c;
  });
  return res;
}

Tensor Tape::log(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(a[i] > 0.0)) {
      throw ValueError("log: non-positive input " + std::to_string(a[i]) + " at index " +
                       std::to_string(i));
    }
    out[i] = std::log(a[i]);
  }
  if (!track(a)) return Tensor(a.shape(), std::move(out));
  Tensor res(a.shape(), std::move(out), true);
  record(res, [a, res](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& da = s.of(a);
    for (std::size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i] / a[i];
  });
  return res;
}

Tensor Tape::exp(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::exp(a[i]);
    if (!std::isfinite(out[i])) {
      throw ValueError("exp: overflow at index " + std::to_string(i) + " (input " +
                       std::to_string(a[i]) + ")");
    }
  }
  if (!track(a)) return Tensor(a.shape(), std::move(out));
  Tensor res(a.shape(), std::move(out), true);
  record(res, [a, res](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& da = s.of(a);
    for (std::size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i] * res[i];
  });
  return res;
}

Tensor Tape::abs(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::fabs(a[i]);
  if (!track(a)) return Tensor(a.shape(), std::move(out));
  Tensor res(a.shape(), std::move(out), true);
  record(res, [a, res](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& da = s.of(a);
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double sign = a[i] > 0.0 ? 1.0 : (a[i] < 0.0 ? -1.0 : 0.0);
      da[i] += (*g)[i] * sign;
    }
  });
  return res;
}

Tensor Tape::sigmoid(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a[i];
    if (x >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      out[i] = e / (1.0 + e);
    }
  }
  if (!track(a)) return Tensor(a.shape(), std::move(out));
  Tensor res(a.shape(), std::move(out), true);
  record(res, [a, res](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& da = s.of(a);
    for (std::size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i] * res[i] * (1.0 - res[i]);
  });
  return res;
}

Tensor Tape::prelu(const Tensor& x, const Tensor& slope) {
  const std::size_t ch = channels_of(x);
  if (slope.size() != 1 && slope.size() != ch) {
    throw ShapeError("prelu: slope " + slope.shape_str() + " does not match " +
                     std::to_string(ch) + " channels of " + x.shape_str());
  }
  const bool shared = slope.size() == 1;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double a = shared ? slope[0] : slope[i % ch];
    out[i] = x[i] >= 0.0 ? x[i] : a * x[i];
  }
  const bool gx = track(x), gs = track(slope);
  Tensor res(x.shape(), std::move(out), gx || gs);
  if (!res.requires_grad()) return res;
  record(res, [x, slope, res, gx, gs, ch, shared](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    if (gx) {
      auto& dx = s.of(x);
      for (std::size_t i = 0; i < g->size(); ++i) {
        const double a = shared ? slope[0] : slope[i % ch];
        dx[i] += (*g)[i] * (x[i] >= 0.0 ? 1.0 : a);
      }
    }
    if (gs) {
      auto& ds = s.of(slope);
      for (std::size_t i = 0; i < g->size(); ++i) {
        if (x[i] < 0.0) ds[shared ? 0 : i % ch] += (*g)[i] * x[i];
      }
    }
  });
  return res;
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

namespace {

// c += a * b, all row-major; accumulation over k stays monotone per output
// element so results are bitwise reproducible.
void matmul_acc(const double* a, const double* b, double* c, std::size_t n,
                std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a[i * k + kk];
      const double* brow = b + kk * m;
      double* crow = c + i * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

// c += a * b^T ; a: n x m, b: k x m, c: n x k
void matmul_acc_bt(const double* a, const double* b, double* c, std::size_t n,
                   std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double* arow = a + i * m;
      const double* brow = b + kk * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) acc += arow[j] * brow[j];
      c[i * k + kk] += acc;
    }
  }
}

// c += a^T * b ; a: n x k, b: n x m, c: k x m
void matmul_acc_at(const double* a, const double* b, double* c, std::size_t n,
                   std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* brow = b + i * m;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = a[i * k + kk];
      if (av == 0.0) continue;
      double* crow = c + kk * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace

Tensor Tape::matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw ShapeError("matmul: incompatible shapes " + a.shape_str() + " x " +
                     b.shape_str());
  }
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  std::vector<double> out(n * m, 0.0);
  matmul_acc(a.data().data(), b.data().data(), out.data(), n, k, m);
  const bool ga = track(a), gb = track(b);
  Tensor res({n, m}, std::move(out), ga || gb);
  if (!res.requires_grad()) return res;
  record(res, [a, b, res, ga, gb, n, k, m](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    if (ga) matmul_acc_bt(g->data(), b.data().data(), s.of(a).data(), n, k, m);
    if (gb) matmul_acc_at(a.data().data(), g->data(), s.of(b).data(), n, k, m);
  });
  return res;
}

Tensor Tape::linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || x.cols() != w.rows()) {
    throw ShapeError("linear: incompatible shapes " + x.shape_str() + " x " +
                     w.shape_str());
  }
  if (b.rank() != 1 || b.size() != w.cols()) {
    throw ShapeError("linear: bias " + b.shape_str() + " does not match output width " +
                     std::to_string(w.cols()));
  }
  const std::size_t n = x.rows(), k = x.cols(), m = w.cols();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = b[j];
  }
  matmul_acc(x.data().data(), w.data().data(), out.data(), n, k, m);
  const bool gx = track(x), gw = track(w), gb = track(b);
  Tensor res({n, m}, std::move(out), gx || gw || gb);
  if (!res.requires_grad()) return res;
  record(res, [x, w, b, res, gx, gw, gb, n, k, m](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    if (gx) matmul_acc_bt(g->data(), w.data().data(), s.of(x).data(), n, k, m);
    if (gw) matmul_acc_at(x.data().data(), g->data(), s.of(w).data(), n, k, m);
    if (gb) {
      auto& db = s.of(b);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) db[j] += (*g)[i * m + j];
      }
    }
  });
  return res;
}

// ---------------------------------------------------------------------------
// shape / gather
// ---------------------------------------------------------------------------

Tensor Tape::reshape(const Tensor& a, Shape shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  if (n != a.size()) {
    throw ShapeError("reshape: cannot view " + a.shape_str() + " as " +
                     shape_to_str(shape));
  }
  if (!track(a)) return Tensor(std::move(shape), a.data());
  Tensor res(std::move(shape), a.data(), true);
  record(res, [a, res](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& da = s.of(a);
    for (std::size_t i = 0; i < g->size(); ++i) da[i] += (*g)[i];
  });
  return res;
}

Tensor Tape::concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const std::size_t rank = parts.front().rank();
  if (rank != 1 && rank != 2) {
    throw ShapeError("concat: rank " + std::to_string(rank) + " not supported");
  }
  const std::size_t rows = rank == 2 ? parts.front().rows() : 1;
  std::size_t total_cols = 0;
  for (const auto& p : parts) {
    if (p.rank() != rank || (rank == 2 && p.rows() != rows)) {
      throw ShapeError("concat: mismatched part " + p.shape_str() + " vs " +
                       parts.front().shape_str());
    }
    total_cols += rank == 2 ? p.cols() : p.size();
  }
  Shape out_shape = rank == 2 ? Shape{rows, total_cols} : Shape{total_cols};
  std::vector<double> out(rows * total_cols);
  std::size_t col_off = 0;
  for (const auto& p : parts) {
    const std::size_t pc = rank == 2 ? p.cols() : p.size();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < pc; ++j) {
        out[i * total_cols + col_off + j] = p[i * pc + j];
      }
    }
    col_off += pc;
  }
  bool any = false;
  std::vector<bool> want(parts.size());
  for (std::size_t pi = 0; pi < parts.size(); ++pi) {
    want[pi] = track(parts[pi]);
    any = any || want[pi];
  }
  Tensor res(std::move(out_shape), std::move(out), any);
  if (!any) return res;
  record(res, [parts, want, res, rank, rows, total_cols](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    std::size_t col_off = 0;
    for (std::size_t pi = 0; pi < parts.size(); ++pi) {
      const auto& p = parts[pi];
      const std::size_t pc = rank == 2 ? p.cols() : p.size();
      if (want[pi]) {
        auto& dp = s.of(p);
        for (std::size_t i = 0; i < rows; ++i) {
          for (std::size_t j = 0; j < pc; ++j) {
            dp[i * pc + j] += (*g)[i * total_cols + col_off + j];
          }
        }
      }
      col_off += pc;
    }
  });
  return res;
}

Tensor Tape::stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ShapeError("stack_rows: no inputs");
  const std::size_t d = rows.front().size();
  for (const auto& r : rows) {
    if (r.rank() != 1 || r.size() != d) {
      throw ShapeError("stack_rows: row " + r.shape_str() + " does not match width " +
                       std::to_string(d));
    }
  }
  const std::size_t n = rows.size();
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = rows[i][j];
  }
  bool any = false;
  std::vector<bool> want(n);
  for (std::size_t i = 0; i < n; ++i) {
    want[i] = track(rows[i]);
    any = any || want[i];
  }
  Tensor res({n, d}, std::move(out), any);
  if (!any) return res;
  record(res, [rows, want, res, n, d](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    for (std::size_t i = 0; i < n; ++i) {
      if (!want[i]) continue;
      auto& dr = s.of(rows[i]);
      for (std::size_t j = 0; j < d; ++j) dr[j] += (*g)[i * d + j];
    }
  });
  return res;
}

Tensor Tape::tile_rows(const Tensor& v, std::size_t n) {
  if (v.rank() != 1) throw ShapeError("tile_rows: expected rank-1, got " + v.shape_str());
  const std::size_t d = v.size();
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = v[j];
  }
  if (!track(v)) return Tensor({n, d}, std::move(out));
  Tensor res({n, d}, std::move(out), true);
  record(res, [v, res, n, d](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& dv = s.of(v);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) dv[j] += (*g)[i * d + j];
    }
  });
  return res;
}

Tensor Tape::tile_cols(const Tensor& v, std::size_t m) {
  if (v.rank() != 1) throw ShapeError("tile_cols: expected rank-1, got " + v.shape_str());
  const std::size_t n = v.size();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = v[i];
  }
  if (!track(v)) return Tensor({n, m}, std::move(out));
  Tensor res({n, m}, std::move(out), true);
  record(res, [v, res, n, m](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& dv = s.of(v);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) dv[i] += (*g)[i * m + j];
    }
  });
  return res;
}

Tensor Tape::repeat_blocks(const Tensor& x, std::size_t times) {
  if (x.rank() != 2) throw ShapeError("repeat_blocks: expected rank-2, got " + x.shape_str());
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> out(times * n * d);
  for (std::size_t b = 0; b < times; ++b) {
    std::copy(x.data().begin(), x.data().end(), out.begin() + b * n * d);
  }
  if (!track(x)) return Tensor({times * n, d}, std::move(out));
  Tensor res({times * n, d}, std::move(out), true);
  record(res, [x, res, times, n, d](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& dx = s.of(x);
    for (std::size_t b = 0; b < times; ++b) {
      const double* gb = g->data() + b * n * d;
      for (std::size_t i = 0; i < n * d; ++i) dx[i] += gb[i];
    }
  });
  return res;
}

Tensor Tape::repeat_rows_each(const Tensor& x, std::size_t times) {
  if (x.rank() != 2) {
    throw ShapeError("repeat_rows_each: expected rank-2, got " + x.shape_str());
  }
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> out(n * times * d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < times; ++t) {
      std::copy(x.data().begin() + i * d, x.data().begin() + (i + 1) * d,
                out.begin() + (i * times + t) * d);
    }
  }
  if (!track(x)) return Tensor({n * times, d}, std::move(out));
  Tensor res({n * times, d}, std::move(out), true);
  record(res, [x, res, times, n, d](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& dx = s.of(x);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t t = 0; t < times; ++t) {
        const double* gr = g->data() + (i * times + t) * d;
        for (std::size_t j = 0; j < d; ++j) dx[i * d + j] += gr[j];
      }
    }
  });
  return res;
}

Tensor Tape::gather_row(const Tensor& table, std::size_t row) {
  if (table.rank() != 2) {
    throw ShapeError("gather_row: expected rank-2 table, got " + table.shape_str());
  }
  if (row >= table.rows()) {
    throw ShapeError("gather_row: row " + std::to_string(row) + " out of range for " +
                     table.shape_str());
  }
  const std::size_t d = table.cols();
  std::vector<double> out(table.data().begin() + row * d,
                          table.data().begin() + (row + 1) * d);
  if (!track(table)) return Tensor({d}, std::move(out));
  Tensor res({d}, std::move(out), true);
  record(res, [table, res, row, d](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& dt = s.of(table);
    for (std::size_t j = 0; j < d; ++j) dt[row * d + j] += (*g)[j];
  });
  return res;
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

Tensor Tape::sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  if (!track(a)) return Tensor::scalar(acc);
  Tensor res = Tensor::scalar(acc, true);
  record(res, [a, res](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& da = s.of(a);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += (*g)[0];
  });
  return res;
}

Tensor Tape::mean(const Tensor& a) {
  if (a.size() == 0) throw ShapeError("mean: empty tensor");
  double acc = 0.0;
  for (double v : a.data()) acc += v;
  const double inv = 1.0 / static_cast<double>(a.size());
  acc *= inv;
  if (!track(a)) return Tensor::scalar(acc);
  Tensor res = Tensor::scalar(acc, true);
  record(res, [a, res, inv](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& da = s.of(a);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += (*g)[0] * inv;
  });
  return res;
}

Tensor Tape::sum_rows(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("sum_rows: expected rank-2, got " + a.shape_str());
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i] += a[i * m + j];
  }
  if (!track(a)) return Tensor({n}, std::move(out));
  Tensor res({n}, std::move(out), true);
  record(res, [a, res, n, m](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& da = s.of(a);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) da[i * m + j] += (*g)[i];
    }
  });
  return res;
}

Tensor Tape::sum_cols(const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("sum_cols: expected rank-2, got " + a.shape_str());
  const std::size_t n = a.rows(), m = a.cols();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[j] += a[i * m + j];
  }
  if (!track(a)) return Tensor({m}, std::move(out));
  Tensor res({m}, std::move(out), true);
  record(res, [a, res, n, m](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& da = s.of(a);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) da[i * m + j] += (*g)[j];
    }
  });
  return res;
}

// ---------------------------------------------------------------------------
// masked softmax
// ---------------------------------------------------------------------------

Tensor Tape::masked_softmax(const Tensor& logits, const std::vector<bool>& mask) {
  if (logits.rank() != 1 && logits.rank() != 2) {
    throw ShapeError("masked_softmax: expected rank 1 or 2, got " + logits.shape_str());
  }
  if (mask.size() != logits.size()) {
    throw ShapeError("masked_softmax: mask size " + std::to_string(mask.size()) +
                     " does not match logits " + logits.shape_str());
  }
  const std::size_t n = logits.rank() == 2 ? logits.cols() : logits.size();
  const std::size_t r = logits.size() / n;
  std::vector<double> out(logits.size(), 0.0);
  for (std::size_t row = 0; row < r; ++row) {
    const std::size_t base = row * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (mask[base + j] && logits[base + j] > mx) mx = logits[base + j];
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw ValueError("masked_softmax: fully masked row " + std::to_string(row));
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask[base + j]) {
        out[base + j] = std::exp(logits[base + j] - mx);
        denom += out[base + j];
      }
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (mask[base + j]) out[base + j] /= denom;
    }
  }
  if (!track(logits)) return Tensor(logits.shape(), std::move(out));
  Tensor res(logits.shape(), std::move(out), true);
  record(res, [logits, mask, res, r, n](GradStore& s) {
    const auto* g = s.find(res);
    if (!g) return;
    auto& dl = s.of(logits);
    for (std::size_t row = 0; row < r; ++row) {
      const std::size_t base = row * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask[base + j]) dot += (*g)[base + j] * res[base + j];
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (mask[base + j]) dl[base + j] += res[base + j] * ((*g)[base + j] - dot);
      }
    }
  });
  return res;
}

}  // namespace matchrank

#include "tabom/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace tabom {

int numel(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

Array::Array(Shape s, double fill) : shape(std::move(s)) {
  for (int d : shape)
    if (d <= 0) throw std::invalid_argument("Array: non-positive dim in " + shape_str(shape));
  data.assign(numel(shape), fill);
}

Array::Array(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (numel(shape) != static_cast<int>(data.size()))
    throw std::invalid_argument("Array: shape " + shape_str(shape) + " does not match data length " +
                                std::to_string(data.size()));
}

namespace {

// Suffix broadcast: returns how many times b tiles into a, or throws.
int tile_count(const Shape& a, const Shape& b, const char* op) {
  if (b.size() > a.size())
    throw std::invalid_argument(std::string(op) + ": shapes " + shape_str(a) + " vs " + shape_str(b));
  for (size_t i = 0; i < b.size(); ++i)
    if (b[b.size() - 1 - i] != a[a.size() - 1 - i])
      throw std::invalid_argument(std::string(op) + ": shapes " + shape_str(a) + " vs " + shape_str(b));
  return numel(a) / numel(b);
}

int last_dim(const Shape& s) { return s.empty() ? 1 : s.back(); }

}  // namespace

int Tape::push(Array value, std::function<void()> back) {
  Node n;
  n.grad = Array(value.shape, 0.0);
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(Array value) { return push(std::move(value)); }

void Tape::zero_grad() {
  for (auto& n : nodes_) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
}

void Tape::backward(int root) {
  if (root < 0 || root >= size()) throw std::invalid_argument("backward: bad node id");
  if (nodes_[root].value.size() != 1)
    throw std::invalid_argument("backward: root must be scalar, got shape " +
                                shape_str(nodes_[root].value.shape));
  adj_.assign(nodes_.size(), {});
  for (size_t i = 0; i < nodes_.size(); ++i) adj_[i].assign(nodes_[i].value.size(), 0.0);
  adj_[root][0] = 1.0;
  for (int id = root; id >= 0; --id)
    if (nodes_[id].back) nodes_[id].back();
  for (size_t i = 0; i < nodes_.size(); ++i)
    for (int j = 0; j < nodes_[i].value.size(); ++j) nodes_[i].grad.data[j] += adj_[i][j];
  adj_.clear();
}

int Tape::matmul(int a, int b) {
  const Array& A = value(a);
  const Array& B = value(b);
  if (A.shape.size() != 2 || B.shape.size() != 2 || A.shape[1] != B.shape[0])
    throw std::invalid_argument("matmul: shapes " + shape_str(A.shape) + " vs " + shape_str(B.shape));
  int n = A.shape[0], k = A.shape[1], m = B.shape[1];
  Array C(Shape{n, m});
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < k; ++p) {
      double av = A.data[i * k + p];
      if (av == 0.0) continue;
      const double* brow = &B.data[p * m];
      double* crow = &C.data[i * m];
      for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a, b, n, k, m]() {
    const auto& dC = adj(self);
    const Array& A = value(a);
    const Array& B = value(b);
    auto& dA = adj(a);
    auto& dB = adj(b);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) {
        double g = dC[i * m + j];
        if (g == 0.0) continue;
        for (int p = 0; p < k; ++p) {
          dA[i * k + p] += g * B.data[p * m + j];
          dB[p * m + j] += g * A.data[i * k + p];
        }
      }
  };
  return self;
}

int Tape::transpose(int a) {
  const Array& A = value(a);
  if (A.shape.size() != 2) throw std::invalid_argument("transpose: need 2-D, got " + shape_str(A.shape));
  int n = A.shape[0], m = A.shape[1];
  Array T(Shape{m, n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) T.data[j * n + i] = A.data[i * m + j];
  int self = push(std::move(T));
  nodes_[self].back = [this, self, a, n, m]() {
    const auto& dT = adj(self);
    auto& dA = adj(a);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < m; ++j) dA[i * m + j] += dT[j * n + i];
  };
  return self;
}

int Tape::add(int a, int b) {
  const Array& A = value(a);
  const Array& B = value(b);
  int reps = tile_count(A.shape, B.shape, "add");
  int nb = B.size();
  Array C(A.shape);
  for (int i = 0; i < A.size(); ++i) C.data[i] = A.data[i] + B.data[i % nb];
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a, b, nb]() {
    const auto& dC = adj(self);
    auto& dA = adj(a);
    auto& dB = adj(b);
    for (size_t i = 0; i < dC.size(); ++i) {
      dA[i] += dC[i];
      dB[i % nb] += dC[i];
    }
  };
  (void)reps;
  return self;
}

int Tape::sub(int a, int b) {
  const Array& A = value(a);
  const Array& B = value(b);
  tile_count(A.shape, B.shape, "sub");
  int nb = B.size();
  Array C(A.shape);
  for (int i = 0; i < A.size(); ++i) C.data[i] = A.data[i] - B.data[i % nb];
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a, b, nb]() {
    const auto& dC = adj(self);
    auto& dA = adj(a);
    auto& dB = adj(b);
    for (size_t i = 0; i < dC.size(); ++i) {
      dA[i] += dC[i];
      dB[i % nb] -= dC[i];
    }
  };
  return self;
}

int Tape::mul(int a, int b) {
  const Array& A = value(a);
  const Array& B = value(b);
  tile_count(A.shape, B.shape, "mul");
  int nb = B.size();
  Array C(A.shape);
  for (int i = 0; i < A.size(); ++i) C.data[i] = A.data[i] * B.data[i % nb];
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a, b, nb]() {
    const auto& dC = adj(self);
    const Array& A = value(a);
    const Array& B = value(b);
    auto& dA = adj(a);
    auto& dB = adj(b);
    for (size_t i = 0; i < dC.size(); ++i) {
      dA[i] += dC[i] * B.data[i % nb];
      dB[i % nb] += dC[i] * A.data[i];
    }
  };
  return self;
}

int Tape::scale(int a, double c) {
  const Array& A = value(a);
  Array C(A.shape);
  for (int i = 0; i < A.size(); ++i) C.data[i] = A.data[i] * c;
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a, c]() {
    const auto& dC = adj(self);
    auto& dA = adj(a);
    for (size_t i = 0; i < dC.size(); ++i) dA[i] += dC[i] * c;
  };
  return self;
}

int Tape::shift(int a, double c) {
  const Array& A = value(a);
  Array C(A.shape);
  for (int i = 0; i < A.size(); ++i) C.data[i] = A.data[i] + c;
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a]() {
    const auto& dC = adj(self);
    auto& dA = adj(a);
    for (size_t i = 0; i < dC.size(); ++i) dA[i] += dC[i];
  };
  return self;
}

int Tape::log(int a) {
  const Array& A = value(a);
  Array C(A.shape);
  for (int i = 0; i < A.size(); ++i) C.data[i] = std::log(A.data[i]);
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a]() {
    const auto& dC = adj(self);
    const Array& A = value(a);
    auto& dA = adj(a);
    for (size_t i = 0; i < dC.size(); ++i) dA[i] += dC[i] / A.data[i];
  };
  return self;
}

int Tape::exp(int a) {
  const Array& A = value(a);
  Array C(A.shape);
  for (int i = 0; i < A.size(); ++i) C.data[i] = std::exp(A.data[i]);
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a]() {
    const auto& dC = adj(self);
    const Array& Y = value(self);
    auto& dA = adj(a);
    for (size_t i = 0; i < dC.size(); ++i) dA[i] += dC[i] * Y.data[i];
  };
  return self;
}

int Tape::relu(int a) {
  const Array& A = value(a);
  Array C(A.shape);
  for (int i = 0; i < A.size(); ++i) C.data[i] = A.data[i] > 0.0 ? A.data[i] : 0.0;
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a]() {
    const auto& dC = adj(self);
    const Array& A = value(a);
    auto& dA = adj(a);
    for (size_t i = 0; i < dC.size(); ++i)
      if (A.data[i] > 0.0) dA[i] += dC[i];
  };
  return self;
}

int Tape::gelu(int a) {
  const Array& A = value(a);
  Array C(A.shape);
  for (int i = 0; i < A.size(); ++i) {
    double x = A.data[i];
    C.data[i] = 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
  }
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a]() {
    const auto& dC = adj(self);
    const Array& A = value(a);
    auto& dA = adj(a);
    constexpr double inv_sqrt_2pi = 0.3989422804014326779;
    for (size_t i = 0; i < dC.size(); ++i) {
      double x = A.data[i];
      double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
      double pdf = inv_sqrt_2pi * std::exp(-0.5 * x * x);
      dA[i] += dC[i] * (cdf + x * pdf);
    }
  };
  return self;
}

int Tape::max_const(int a, double c) {
  const Array& A = value(a);
  Array C(A.shape);
  for (int i = 0; i < A.size(); ++i) C.data[i] = std::max(A.data[i], c);
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a, c]() {
    const auto& dC = adj(self);
    const Array& A = value(a);
    auto& dA = adj(a);
    for (size_t i = 0; i < dC.size(); ++i)
      if (A.data[i] > c) dA[i] += dC[i];  // exactly at the kink: subgradient 0
  };
  return self;
}

int Tape::sum(int a) {
  const Array& A = value(a);
  double s = 0.0;
  for (double v : A.data) s += v;
  int self = push(Array::scalar(s));
  nodes_[self].back = [this, self, a]() {
    double g = adj(self)[0];
    auto& dA = adj(a);
    for (auto& v : dA) v += g;
  };
  return self;
}

int Tape::mean(int a) {
  const Array& A = value(a);
  double s = 0.0;
  for (double v : A.data) s += v;
  int n = A.size();
  int self = push(Array::scalar(s / n));
  nodes_[self].back = [this, self, a, n]() {
    double g = adj(self)[0] / n;
    auto& dA = adj(a);
    for (auto& v : dA) v += g;
  };
  return self;
}

int Tape::row_sum(int a) {
  const Array& A = value(a);
  if (A.shape.size() != 2) throw std::invalid_argument("row_sum: need 2-D, got " + shape_str(A.shape));
  int n = A.shape[0], d = A.shape[1];
  Array C(Shape{n});
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < d; ++j) s += A.data[i * d + j];
    C.data[i] = s;
  }
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a, n, d]() {
    const auto& dC = adj(self);
    auto& dA = adj(a);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) dA[i * d + j] += dC[i];
  };
  return self;
}

int Tape::softmax_rows(int a) {
  const Array& A = value(a);
  int d = last_dim(A.shape);
  int rows = A.size() / d;
  Array P(A.shape);
  for (int i = 0; i < rows; ++i) {
    const double* z = &A.data[i * d];
    double* p = &P.data[i * d];
    double mx = z[0];
    for (int j = 1; j < d; ++j) mx = std::max(mx, z[j]);
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      p[j] = std::exp(z[j] - mx);
      s += p[j];
    }
    for (int j = 0; j < d; ++j) p[j] /= s;
  }
  int self = push(std::move(P));
  nodes_[self].back = [this, self, a, rows, d]() {
    const auto& dP = adj(self);
    const Array& P = value(self);
    auto& dZ = adj(a);
    for (int i = 0; i < rows; ++i) {
      const double* p = &P.data[i * d];
      const double* dp = &dP[i * d];
      double dot = 0.0;
      for (int j = 0; j < d; ++j) dot += dp[j] * p[j];
      for (int j = 0; j < d; ++j) dZ[i * d + j] += p[j] * (dp[j] - dot);
    }
  };
  return self;
}

int Tape::gather(int a, std::vector<int> rows) {
  const Array& A = value(a);
  if (A.shape.empty()) throw std::invalid_argument("gather: scalar input");
  int n = A.shape[0];
  int stride = A.size() / n;
  for (int r : rows)
    if (r < 0 || r >= n) throw std::invalid_argument("gather: row " + std::to_string(r) + " out of [0," + std::to_string(n) + ")");
  Shape out_shape = A.shape;
  out_shape[0] = static_cast<int>(rows.size());
  Array C(out_shape);
  for (size_t i = 0; i < rows.size(); ++i)
    std::copy_n(&A.data[rows[i] * stride], stride, &C.data[i * stride]);
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a, rows = std::move(rows), stride]() {
    const auto& dC = adj(self);
    auto& dA = adj(a);
    for (size_t i = 0; i < rows.size(); ++i)
      for (int j = 0; j < stride; ++j) dA[rows[i] * stride + j] += dC[i * stride + j];
  };
  return self;
}

int Tape::scatter_add(int a, std::vector<int> rows, int out_rows) {
  const Array& A = value(a);
  if (A.shape.empty() || A.shape[0] != static_cast<int>(rows.size()))
    throw std::invalid_argument("scatter_add: first dim " + shape_str(A.shape) + " vs " +
                                std::to_string(rows.size()) + " indices");
  int stride = A.size() / A.shape[0];
  for (int r : rows)
    if (r < 0 || r >= out_rows) throw std::invalid_argument("scatter_add: row out of range");
  Shape out_shape = A.shape;
  out_shape[0] = out_rows;
  Array C(out_shape);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < stride; ++j) C.data[rows[i] * stride + j] += A.data[i * stride + j];
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a, rows = std::move(rows), stride]() {
    const auto& dC = adj(self);
    auto& dA = adj(a);
    for (size_t i = 0; i < rows.size(); ++i)
      for (int j = 0; j < stride; ++j) dA[i * stride + j] += dC[rows[i] * stride + j];
  };
  return self;
}

int Tape::slice_cols(int a, int start, int len) {
  const Array& A = value(a);
  if (A.shape.size() != 2 || start < 0 || len <= 0 || start + len > A.shape[1])
    throw std::invalid_argument("slice_cols: bad slice [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") of " + shape_str(A.shape));
  int n = A.shape[0], d = A.shape[1];
  Array C(Shape{n, len});
  for (int i = 0; i < n; ++i)
    std::copy_n(&A.data[i * d + start], len, &C.data[i * len]);
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a, start, len, n, d]() {
    const auto& dC = adj(self);
    auto& dA = adj(a);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < len; ++j) dA[i * d + start + j] += dC[i * len + j];
  };
  return self;
}

int Tape::concat_cols(const std::vector<int>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no parts");
  int n = value(parts[0]).shape[0];
  int total = 0;
  for (int p : parts) {
    const Array& A = value(p);
    if (A.shape.size() != 2 || A.shape[0] != n)
      throw std::invalid_argument("concat_cols: incompatible part " + shape_str(A.shape));
    total += A.shape[1];
  }
  Array C(Shape{n, total});
  int off = 0;
  for (int p : parts) {
    const Array& A = value(p);
    int d = A.shape[1];
    for (int i = 0; i < n; ++i) std::copy_n(&A.data[i * d], d, &C.data[i * total + off]);
    off += d;
  }
  int self = push(std::move(C));
  nodes_[self].back = [this, self, parts, n, total]() {
    const auto& dC = adj(self);
    int off = 0;
    for (int p : parts) {
      int d = value(p).shape[1];
      auto& dA = adj(p);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) dA[i * d + j] += dC[i * total + off + j];
      off += d;
    }
  };
  return self;
}

int Tape::layer_norm(int a, int gain, int bias, double eps) {
  const Array& A = value(a);
  int d = last_dim(A.shape);
  if (value(gain).size() != d || value(bias).size() != d)
    throw std::invalid_argument("layer_norm: gain/bias must be [" + std::to_string(d) + "]");
  int rows = A.size() / d;
  Array C(A.shape);
  auto xhat = std::make_shared<std::vector<double>>(A.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  const Array& G = value(gain);
  const Array& B = value(bias);
  for (int i = 0; i < rows; ++i) {
    const double* x = &A.data[i * d];
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += x[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= d;
    double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[i] = inv;
    for (int j = 0; j < d; ++j) {
      double xh = (x[j] - mu) * inv;
      (*xhat)[i * d + j] = xh;
      C.data[i * d + j] = G.data[j] * xh + B.data[j];
    }
  }
  int self = push(std::move(C));
  nodes_[self].back = [this, self, a, gain, bias, rows, d, xhat, inv_std]() {
    const auto& dY = adj(self);
    const Array& G = value(gain);
    auto& dX = adj(a);
    auto& dG = adj(gain);
    auto& dB = adj(bias);
    for (int i = 0; i < rows; ++i) {
      double m1 = 0.0, m2 = 0.0;
      for (int j = 0; j < d; ++j) {
        double dyg = dY[i * d + j] * G.data[j];
        m1 += dyg;
        m2 += dyg * (*xhat)[i * d + j];
      }
      m1 /= d;
      m2 /= d;
      double inv = (*inv_std)[i];
      for (int j = 0; j < d; ++j) {
        double dyg = dY[i * d + j] * G.data[j];
        dX[i * d + j] += inv * (dyg - m1 - (*xhat)[i * d + j] * m2);
        dG[j] += dY[i * d + j] * (*xhat)[i * d + j];
        dB[j] += dY[i * d + j];
      }
    }
  };
  return self;
}

int Tape::cross_entropy_rows(int logits, std::vector<int> targets) {
  const Array& Z = value(logits);
  if (Z.shape.size() != 2 || Z.shape[0] != static_cast<int>(targets.size()))
    throw std::invalid_argument("cross_entropy_rows: logits " + shape_str(Z.shape) + " vs " +
                                std::to_string(targets.size()) + " targets");
  int n = Z.shape[0], v = Z.shape[1];
  for (int t : targets)
    if (t < 0 || t >= v) throw std::invalid_argument("cross_entropy_rows: target out of range");
  Array C(Shape{n});
  for (int i = 0; i < n; ++i) {
    const double* z = &Z.data[i * v];
    double mx = z[0];
    for (int j = 1; j < v; ++j) mx = std::max(mx, z[j]);
    double s = 0.0;
    for (int j = 0; j < v; ++j) s += std::exp(z[j] - mx);
    C.data[i] = mx + std::log(s) - z[targets[i]];
  }
  int self = push(std::move(C));
  nodes_[self].back = [this, self, logits, targets = std::move(targets), n, v]() {
    const auto& dC = adj(self);
    const Array& Z = value(logits);
    auto& dZ = adj(logits);
    for (int i = 0; i < n; ++i) {
      double g = dC[i];
      if (g == 0.0) continue;
      const double* z = &Z.data[i * v];
      double mx = z[0];
      for (int j = 1; j < v; ++j) mx = std::max(mx, z[j]);
      double s = 0.0;
      for (int j = 0; j < v; ++j) s += std::exp(z[j] - mx);
      for (int j = 0; j < v; ++j) {
        double p = std::exp(z[j] - mx) / s;
        dZ[i * v + j] += g * (p - (j == targets[i] ? 1.0 : 0.0));
      }
    }
  };
  return self;
}

}  // namespace tabom

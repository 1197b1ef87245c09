#pragma once

#include <functional>
#include <string>
#include <vector>

namespace tabom {

using Shape = std::vector<int>;

int numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major tensor of 64-bit floats.
struct Array {
  Shape shape;
  std::vector<double> data;

  Array() = default;
  explicit Array(Shape s, double fill = 0.0);
  Array(Shape s, std::vector<double> d);

  int size() const { return static_cast<int>(data.size()); }
  static Array scalar(double v) { return Array(Shape{1}, std::vector<double>{v}); }
};

/// Reverse-mode tape. Node ids are topologically ordered by construction;
/// backward() walks them in reverse and accumulates into persistent grad
/// buffers (repeated calls accumulate until zero_grad()).
///
/// Broadcasting is suffix-only: for elementwise binary ops the second
/// operand's shape must equal a trailing suffix of the first's.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  int leaf(Array value);

  const Array& value(int id) const { return nodes_[id].value; }
  const Array& grad(int id) const { return nodes_[id].grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  void zero_grad();
  void backward(int root);  // root must be scalar (shape [1] or [])

  int matmul(int a, int b);          // [n,k] x [k,m] -> [n,m]
  int transpose(int a);              // [n,m] -> [m,n]
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int scale(int a, double c);
  int shift(int a, double c);
  int neg(int a) { return scale(a, -1.0); }
  int log(int a);
  int exp(int a);
  int relu(int a);
  int gelu(int a);
  int max_const(int a, double c);    // elementwise max(x,c); subgradient 0 at the kink
  int sum(int a);                    // -> [1]
  int mean(int a);                   // -> [1]
  int row_sum(int a);                // [n,d] -> [n]
  int softmax_rows(int a);           // softmax over the last axis
  int gather(int a, std::vector<int> rows);                      // first-axis gather
  int scatter_add(int a, std::vector<int> rows, int out_rows);   // first-axis scatter
  int slice_cols(int a, int start, int len);                     // [n,d] -> [n,len]
  int concat_cols(const std::vector<int>& parts);
  int layer_norm(int a, int gain, int bias, double eps = 1e-5);  // normalize last axis
  int cross_entropy_rows(int logits, std::vector<int> targets);  // [n,V] -> [n]

 private:
  struct Node {
    Array value;
    Array grad;
    std::function<void()> back;  // reads adj_[self], adds into adj_[inputs]
  };

  int push(Array value, std::function<void()> back = {});
  std::vector<double>& adj(int id) { return adj_[id]; }

  std::vector<Node> nodes_;
  std::vector<std::vector<double>> adj_;  // scratch adjoints, valid during backward()
};

}  // namespace tabom

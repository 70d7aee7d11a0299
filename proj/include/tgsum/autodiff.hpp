#pragma once

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "tgsum/io.hpp"

namespace tgsum::ad {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Matrix value;
};

// Named, ordered collection of learnable matrices.
class ParameterSet {
 public:
  int add(const std::string& name, int rows, int cols);
  int index(const std::string& name) const;  // throws when absent
  bool contains(const std::string& name) const { return by_name_.count(name) > 0; }

  Parameter& operator[](int i) { return params_[static_cast<std::size_t>(i)]; }
  const Parameter& operator[](int i) const { return params_[static_cast<std::size_t>(i)]; }
  Matrix& value(const std::string& name) { return params_[static_cast<std::size_t>(index(name))].value; }
  const Matrix& value(const std::string& name) const {
    return params_[static_cast<std::size_t>(index(name))].value;
  }

  int size() const { return static_cast<int>(params_.size()); }
  long num_scalars() const;
  bool all_finite() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, int> by_name_;
};

// Gradient buffer shaped like a ParameterSet.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterSet& params);

  void zero();
  void add(const Gradients& other, double scale = 1.0);
  void scale(double s);
  double norm() const;
  bool all_finite() const;

  Matrix& operator[](int i) { return grads_[static_cast<std::size_t>(i)]; }
  const Matrix& operator[](int i) const { return grads_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(grads_.size()); }

 private:
  std::vector<Matrix> grads_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Tape of matrix operations. Values are computed eagerly; `backward` replays
// the tape in reverse and adds parameter gradients into the sink. A graph
// without a sink records no backward closures.
class Graph {
 public:
  explicit Graph(const ParameterSet& params, Gradients* sink = nullptr);

  bool tracking() const { return sink_ != nullptr; }
  const Matrix& value(Var v) const;
  double scalar(Var v) const { return value(v)(0, 0); }

  Var constant(Matrix m);
  Var param(int index);
  Var param(const std::string& name) { return param(params_.index(name)); }

  // Rows of a parameter table selected by `ids`.
  Var gather(int param_index, std::span<const int> ids);

  Var matmul(Var a, Var b);     // a * b
  Var matmul_nt(Var a, Var b);  // a * b^T
  Var add(Var a, Var b);
  Var add_row(Var a, Var row);  // broadcast 1 x m row over every row of a
  Var sub(Var a, Var b);
  Var scale(Var a, double s);
  Var mul(Var a, Var b);  // elementwise
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var glu(Var a);  // first half of columns gated by sigmoid of second half
  Var softmax_rows(Var a);
  Var rows(Var a, int start, int count);
  Var cols(Var a, int start, int count);
  Var concat_cols(Var a, Var b);
  Var concat_rows(std::span<const Var> parts);
  Var mean_rows(Var a);
  Var sum(Var a);  // 1 x 1

  // 1-D convolution over rows (time) with `width` taps. Row i of the output
  // sees input rows [i - pad_left, i - pad_left + width). Out-of-range rows are
  // zero. `weight` is (width * in_channels) x out_channels, `bias` is 1 x out.
  Var conv1d(Var x, Var weight, Var bias, int width, int pad_left);

  // Inverted dropout with a mask drawn from `rng`; identity when p == 0.
  Var dropout(Var a, double p, Rng& rng);

  // Sum over rows of -log softmax(logits)[row, target]; rows with target < 0
  // are skipped. Returns 1 x 1.
  Var nll(Var logits, std::span<const int> targets);

  void backward(Var loss);

  std::size_t num_nodes() const { return nodes_.size(); }

  // Drops every node created after `mark`. Vars issued after the mark become
  // invalid. Used by decoding loops that reuse one graph for many queries.
  std::size_t mark() const { return nodes_.size(); }
  void rewind(std::size_t mark);

 private:
  struct Node {
    Matrix owned;
    const Matrix* external = nullptr;
    Matrix grad;
    int param_index = -1;
    bool requires_grad = false;
    std::function<void(Graph&, int)> backward;
    const Matrix& value() const { return external ? *external : owned; }
  };

  Var push(Matrix value, bool requires_grad, std::function<void(Graph&, int)> backward);
  bool needs(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }
  const Matrix& grad_of(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  void accumulate(Var v, const Matrix& g);

  const ParameterSet& params_;
  Gradients* sink_;
  std::vector<Node> nodes_;
  std::vector<int> param_nodes_;  // param index -> node id (or -1)
};

}  // namespace tgsum::ad

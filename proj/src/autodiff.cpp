#include "tgsum/autodiff.hpp"

#include <cmath>

#include "tgsum/error.hpp"

namespace tgsum::ad {

// ---------------------------------------------------------------------------
// ParameterSet / Gradients

int ParameterSet::add(const std::string& name, int rows, int cols) {
  if (by_name_.count(name)) throw ConfigError("duplicate parameter: " + name);
  int idx = static_cast<int>(params_.size());
  params_.push_back({name, Matrix::Zero(rows, cols)});
  by_name_.emplace(name, idx);
  return idx;
}

int ParameterSet::index(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

long ParameterSet::num_scalars() const {
  long n = 0;
  for (const auto& p : params_) n += static_cast<long>(p.value.size());
  return n;
}

bool ParameterSet::all_finite() const {
  for (const auto& p : params_)
    if (!p.value.allFinite()) return false;
  return true;
}

Gradients::Gradients(const ParameterSet& params) {
  for (const auto& p : params) grads_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
}

void Gradients::zero() {
  for (auto& g : grads_) g.setZero();
}

void Gradients::add(const Gradients& other, double scale) {
  for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i] += scale * other.grads_[i];
}

void Gradients::scale(double s) {
  for (auto& g : grads_) g *= s;
}

double Gradients::norm() const {
  double sq = 0;
  for (const auto& g : grads_) sq += g.squaredNorm();
  return std::sqrt(sq);
}

bool Gradients::all_finite() const {
  for (const auto& g : grads_)
    if (!g.allFinite()) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Graph

Graph::Graph(const ParameterSet& params, Gradients* sink)
    : params_(params), sink_(sink), param_nodes_(static_cast<std::size_t>(params.size()), -1) {
  nodes_.reserve(256);
}

const Matrix& Graph::value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value(); }

Var Graph::push(Matrix value, bool requires_grad, std::function<void(Graph&, int)> backward) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad && tracking();
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Graph::accumulate(Var v, const Matrix& g) {
  auto& n = nodes_[static_cast<std::size_t>(v.id)];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

Var Graph::constant(Matrix m) { return push(std::move(m), false, nullptr); }

Var Graph::param(int index) {
  auto& slot = param_nodes_.at(static_cast<std::size_t>(index));
  if (slot >= 0) return Var{slot};
  Node n;
  n.external = &params_[index].value;
  n.param_index = index;
  n.requires_grad = tracking();
  nodes_.push_back(std::move(n));
  slot = static_cast<int>(nodes_.size()) - 1;
  return Var{slot};
}

Var Graph::gather(int param_index, std::span<const int> ids) {
  const Matrix& table = params_[param_index].value;
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= table.rows())
      throw DataError("index " + std::to_string(ids[r]) + " out of range for " + params_[param_index].name);
    out.row(static_cast<Eigen::Index>(r)) = table.row(ids[r]);
  }
  std::vector<int> rows(ids.begin(), ids.end());
  return push(std::move(out), true, [param_index, rows = std::move(rows)](Graph& g, int self) {
    Matrix& dst = (*g.sink_)[param_index];
    const Matrix& gr = g.grad_of(self);
    for (std::size_t r = 0; r < rows.size(); ++r) dst.row(rows[r]) += gr.row(static_cast<Eigen::Index>(r));
  });
}

Var Graph::matmul(Var a, Var b) {
  Matrix v = value(a) * value(b);
  return push(std::move(v), needs(a) || needs(b), [a, b](Graph& g, int self) {
    const Matrix& gr = g.grad_of(self);
    if (g.needs(a)) g.accumulate(a, gr * g.value(b).transpose());
    if (g.needs(b)) g.accumulate(b, g.value(a).transpose() * gr);
  });
}

Var Graph::matmul_nt(Var a, Var b) {
  Matrix v = value(a) * value(b).transpose();
  return push(std::move(v), needs(a) || needs(b), [a, b](Graph& g, int self) {
    const Matrix& gr = g.grad_of(self);
    if (g.needs(a)) g.accumulate(a, gr * g.value(b));
    if (g.needs(b)) g.accumulate(b, gr.transpose() * g.value(a));
  });
}

Var Graph::add(Var a, Var b) {
  Matrix v = value(a) + value(b);
  return push(std::move(v), needs(a) || needs(b), [a, b](Graph& g, int self) {
    const Matrix& gr = g.grad_of(self);
    g.accumulate(a, gr);
    g.accumulate(b, gr);
  });
}

Var Graph::add_row(Var a, Var row) {
  if (value(row).rows() != 1 || value(row).cols() != value(a).cols())
    throw ConfigError("add_row: shape mismatch");
  Matrix v = value(a).rowwise() + value(row).row(0);
  return push(std::move(v), needs(a) || needs(row), [a, row](Graph& g, int self) {
    const Matrix& gr = g.grad_of(self);
    g.accumulate(a, gr);
    if (g.needs(row)) g.accumulate(row, gr.colwise().sum());
  });
}

Var Graph::sub(Var a, Var b) {
  Matrix v = value(a) - value(b);
  return push(std::move(v), needs(a) || needs(b), [a, b](Graph& g, int self) {
    const Matrix& gr = g.grad_of(self);
    g.accumulate(a, gr);
    if (g.needs(b)) g.accumulate(b, -gr);
  });
}

Var Graph::scale(Var a, double s) {
  Matrix v = value(a) * s;
  return push(std::move(v), needs(a), [a, s](Graph& g, int self) { g.accumulate(a, g.grad_of(self) * s); });
}

Var Graph::mul(Var a, Var b) {
  Matrix v = value(a).cwiseProduct(value(b));
  return push(std::move(v), needs(a) || needs(b), [a, b](Graph& g, int self) {
    const Matrix& gr = g.grad_of(self);
    if (g.needs(a)) g.accumulate(a, gr.cwiseProduct(g.value(b)));
    if (g.needs(b)) g.accumulate(b, gr.cwiseProduct(g.value(a)));
  });
}

Var Graph::tanh(Var a) {
  Matrix v = value(a).array().tanh().matrix();
  return push(std::move(v), needs(a), [a](Graph& g, int self) {
    const Matrix& y = g.value(Var{self});
    g.accumulate(a, g.grad_of(self).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

namespace {
Matrix sigmoid_of(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }
}  // namespace

Var Graph::sigmoid(Var a) {
  Matrix v = sigmoid_of(value(a));
  return push(std::move(v), needs(a), [a](Graph& g, int self) {
    const Matrix& y = g.value(Var{self});
    g.accumulate(a, g.grad_of(self).cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  });
}

Var Graph::glu(Var a) {
  const Matrix& x = value(a);
  if (x.cols() % 2 != 0) throw ConfigError("glu: odd channel count");
  const Eigen::Index half = x.cols() / 2;
  Matrix gate = sigmoid_of(x.rightCols(half));
  Matrix v = x.leftCols(half).cwiseProduct(gate);
  return push(std::move(v), needs(a), [a, half, gate = std::move(gate)](Graph& g, int self) {
    const Matrix& gr = g.grad_of(self);
    const Matrix& x = g.value(a);
    Matrix dx(x.rows(), x.cols());
    dx.leftCols(half) = gr.cwiseProduct(gate);
    dx.rightCols(half) =
        (gr.array() * x.leftCols(half).array() * gate.array() * (1.0 - gate.array())).matrix();
    g.accumulate(a, dx);
  });
}

Var Graph::softmax_rows(Var a) {
  const Matrix& x = value(a);
  Matrix v(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double m = x.row(r).maxCoeff();
    v.row(r) = (x.row(r).array() - m).exp().matrix();
    v.row(r) /= v.row(r).sum();
  }
  return push(std::move(v), needs(a), [a](Graph& g, int self) {
    const Matrix& y = g.value(Var{self});
    const Matrix& gr = g.grad_of(self);
    Matrix dx(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      double dot = gr.row(r).dot(y.row(r));
      dx.row(r) = (y.row(r).array() * (gr.row(r).array() - dot)).matrix();
    }
    g.accumulate(a, dx);
  });
}

Var Graph::rows(Var a, int start, int count) {
  const Matrix& x = value(a);
  if (start < 0 || count < 0 || start + count > x.rows()) throw ConfigError("rows: range out of bounds");
  Matrix v = x.middleRows(start, count);
  return push(std::move(v), needs(a), [a, start, count](Graph& g, int self) {
    const Matrix& x = g.value(a);
    Matrix dx = Matrix::Zero(x.rows(), x.cols());
    dx.middleRows(start, count) = g.grad_of(self);
    g.accumulate(a, dx);
  });
}

Var Graph::cols(Var a, int start, int count) {
  const Matrix& x = value(a);
  if (start < 0 || count < 0 || start + count > x.cols()) throw ConfigError("cols: range out of bounds");
  Matrix v = x.middleCols(start, count);
  return push(std::move(v), needs(a), [a, start, count](Graph& g, int self) {
    const Matrix& x = g.value(a);
    Matrix dx = Matrix::Zero(x.rows(), x.cols());
    dx.middleCols(start, count) = g.grad_of(self);
    g.accumulate(a, dx);
  });
}

Var Graph::concat_cols(Var a, Var b) {
  const Matrix& x = value(a);
  const Matrix& y = value(b);
  if (x.rows() != y.rows()) throw ConfigError("concat_cols: row mismatch");
  Matrix v(x.rows(), x.cols() + y.cols());
  v << x, y;
  const Eigen::Index ca = x.cols();
  const Eigen::Index cb = y.cols();
  return push(std::move(v), needs(a) || needs(b), [a, b, ca, cb](Graph& g, int self) {
    const Matrix& gr = g.grad_of(self);
    if (g.needs(a)) g.accumulate(a, gr.leftCols(ca));
    if (g.needs(b)) g.accumulate(b, gr.rightCols(cb));
  });
}

Var Graph::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ConfigError("concat_rows: no inputs");
  Eigen::Index total = 0;
  const Eigen::Index cols = value(parts[0]).cols();
  bool any = false;
  for (Var p : parts) {
    if (value(p).cols() != cols) throw ConfigError("concat_rows: column mismatch");
    total += value(p).rows();
    any = any || needs(p);
  }
  Matrix v(total, cols);
  Eigen::Index off = 0;
  for (Var p : parts) {
    v.middleRows(off, value(p).rows()) = value(p);
    off += value(p).rows();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(v), any, [inputs = std::move(inputs)](Graph& g, int self) {
    const Matrix& gr = g.grad_of(self);
    Eigen::Index off = 0;
    for (Var p : inputs) {
      Eigen::Index n = g.value(p).rows();
      if (g.needs(p)) g.accumulate(p, gr.middleRows(off, n));
      off += n;
    }
  });
}

Var Graph::mean_rows(Var a) {
  const Matrix& x = value(a);
  Matrix v = x.colwise().mean();
  const auto n = static_cast<double>(x.rows());
  return push(std::move(v), needs(a), [a, n](Graph& g, int self) {
    const Matrix& x = g.value(a);
    Matrix dx = g.grad_of(self).replicate(x.rows(), 1) / n;
    g.accumulate(a, dx);
  });
}

Var Graph::sum(Var a) {
  Matrix v(1, 1);
  v(0, 0) = value(a).sum();
  return push(std::move(v), needs(a), [a](Graph& g, int self) {
    const Matrix& x = g.value(a);
    g.accumulate(a, Matrix::Constant(x.rows(), x.cols(), g.grad_of(self)(0, 0)));
  });
}

Var Graph::conv1d(Var x, Var weight, Var bias, int width, int pad_left) {
  const Matrix& in = value(x);
  const Eigen::Index n = in.rows();
  const Eigen::Index c = in.cols();
  if (value(weight).rows() != width * c) throw ConfigError("conv1d: weight shape mismatch");
  // im2col: row i holds inputs i - pad_left + k for k in [0, width)
  Matrix col = Matrix::Zero(n, width * c);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int k = 0; k < width; ++k) {
      Eigen::Index src = i - pad_left + k;
      if (src >= 0 && src < n) col.block(i, k * c, 1, c) = in.row(src);
    }
  }
  Matrix v = (col * value(weight)).rowwise() + value(bias).row(0);
  bool rg = needs(x) || needs(weight) || needs(bias);
  return push(std::move(v), rg, [x, weight, bias, width, pad_left, col = std::move(col)](Graph& g, int self) {
    const Matrix& gr = g.grad_of(self);
    if (g.needs(weight)) g.accumulate(weight, col.transpose() * gr);
    if (g.needs(bias)) g.accumulate(bias, gr.colwise().sum());
    if (g.needs(x)) {
      const Matrix& in = g.value(x);
      const Eigen::Index n = in.rows();
      const Eigen::Index c = in.cols();
      Matrix dcol = gr * g.value(weight).transpose();
      Matrix dx = Matrix::Zero(n, c);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int k = 0; k < width; ++k) {
          Eigen::Index src = i - pad_left + k;
          if (src >= 0 && src < n) dx.row(src) += dcol.block(i, k * c, 1, c);
        }
      }
      g.accumulate(x, dx);
    }
  });
}

Var Graph::dropout(Var a, double p, Rng& rng) {
  if (p <= 0.0) return a;
  const Matrix& x = value(a);
  Matrix mask(x.rows(), x.cols());
  const double keep = 1.0 - p;
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) mask(i, j) = uniform01(rng) < keep ? 1.0 / keep : 0.0;
  return mul(a, constant(std::move(mask)));
}

Var Graph::nll(Var logits, std::span<const int> targets) {
  const Matrix& x = value(logits);
  if (static_cast<Eigen::Index>(targets.size()) != x.rows()) throw ConfigError("nll: target count mismatch");
  Matrix probs(x.rows(), x.cols());
  double total = 0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double m = x.row(r).maxCoeff();
    probs.row(r) = (x.row(r).array() - m).exp().matrix();
    double z = probs.row(r).sum();
    probs.row(r) /= z;
    int t = targets[static_cast<std::size_t>(r)];
    if (t < 0) continue;
    if (t >= x.cols()) throw DataError("nll: target id out of range");
    total += -(x(r, t) - m - std::log(z));
  }
  Matrix v(1, 1);
  v(0, 0) = total;
  std::vector<int> tg(targets.begin(), targets.end());
  return push(std::move(v), needs(logits), [logits, tg = std::move(tg), probs = std::move(probs)](Graph& g, int self) {
    const double up = g.grad_of(self)(0, 0);
    Matrix dx = probs;
    for (Eigen::Index r = 0; r < dx.rows(); ++r) {
      int t = tg[static_cast<std::size_t>(r)];
      if (t < 0) {
        dx.row(r).setZero();
      } else {
        dx(r, t) -= 1.0;
      }
    }
    g.accumulate(logits, dx * up);
  });
}

void Graph::rewind(std::size_t mark) {
  if (mark > nodes_.size()) throw ConfigError("rewind past the end of the graph");
  nodes_.resize(mark);
  for (auto& slot : param_nodes_)
    if (slot >= static_cast<int>(mark)) slot = -1;
}

void Graph::backward(Var loss) {
  if (!tracking()) throw ConfigError("backward on a graph without gradient sink");
  if (value(loss).size() != 1) throw ConfigError("backward expects a scalar");
  auto& root = nodes_[static_cast<std::size_t>(loss.id)];
  if (!root.requires_grad) return;
  root.grad = Matrix::Ones(1, 1);
  for (int id = loss.id; id >= 0; --id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.size() == 0) continue;
    if (n.param_index >= 0) {
      (*sink_)[n.param_index] += n.grad;
    } else if (n.backward) {
      n.backward(*this, id);
    }
    // parameters and gathers only need their gradient once
    n.grad.resize(0, 0);
  }
}

}  // namespace tgsum::ad

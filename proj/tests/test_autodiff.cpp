#include <doctest.h>

#include <cmath>
#include <functional>

#include "tgsum/autodiff.hpp"

using namespace tgsum;
using namespace tgsum::ad;

namespace {

// Builds a scalar loss from the parameter set on a fresh graph.
using LossFn = std::function<Var(Graph&)>;

double max_gradient_error(ParameterSet& params, const LossFn& loss) {
  Gradients grads(params);
  {
    Graph g(params, &grads);
    g.backward(loss(g));
  }
  double worst = 0;
  const double h = 1e-6;
  for (int p = 0; p < params.size(); ++p) {
    Matrix& m = params[p].value;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double keep = m.data()[i];
      m.data()[i] = keep + h;
      Graph gu(params);
      double up = gu.scalar(loss(gu));
      m.data()[i] = keep - h;
      Graph gd(params);
      double down = gd.scalar(loss(gd));
      m.data()[i] = keep;
      double fd = (up - down) / (2 * h);
      double an = grads[p].data()[i];
      worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(fd) + std::abs(an)));
    }
  }
  return worst;
}

ParameterSet random_params(std::initializer_list<std::tuple<std::string, int, int>> shapes, std::uint64_t seed) {
  ParameterSet ps;
  Rng rng(seed);
  for (const auto& [name, r, c] : shapes) {
    int i = ps.add(name, r, c);
    for (Eigen::Index k = 0; k < ps[i].value.size(); ++k) ps[i].value.data()[k] = normal(rng, 0, 0.7);
  }
  return ps;
}

}  // namespace

TEST_CASE("elementwise and matrix ops match finite differences") {
  auto ps = random_params({{"a", 3, 4}, {"b", 4, 2}, {"c", 3, 4}, {"r", 1, 4}}, 1);
  auto loss = [](Graph& g) {
    Var a = g.param("a"), b = g.param("b"), c = g.param("c"), r = g.param("r");
    Var x = g.add_row(g.mul(g.tanh(a), g.sigmoid(c)), r);
    Var y = g.sub(g.scale(x, 1.5), c);
    Var z = g.matmul(y, b);
    Var w = g.matmul_nt(z, g.cols(g.matmul(a, b), 0, 2));
    return g.sum(g.mul(w, w));
  };
  CHECK(max_gradient_error(ps, loss) < 1e-6);
}

TEST_CASE("glu, softmax, slicing and concatenation") {
  auto ps = random_params({{"a", 4, 6}, {"b", 2, 3}}, 2);
  auto loss = [](Graph& g) {
    Var a = g.param("a"), b = g.param("b");
    Var h = g.glu(a);                        // 4 x 3
    Var s = g.softmax_rows(h);
    Var top = g.rows(s, 1, 2);               // 2 x 3
    Var both = g.concat_cols(top, b);        // 2 x 6
    std::vector<Var> parts = {both, g.tanh(both)};
    Var stacked = g.concat_rows(parts);      // 4 x 6
    Var m = g.cols(g.mean_rows(stacked), 0, 5);
    return g.sum(g.mul(m, g.rows(g.cols(stacked, 1, 5), 2, 1)));
  };
  CHECK(max_gradient_error(ps, loss) < 1e-6);
}

TEST_CASE("gather accumulates repeated rows") {
  auto ps = random_params({{"emb", 5, 3}, {"w", 3, 1}}, 3);
  std::vector<int> ids = {1, 3, 1, 4};
  auto loss = [&](Graph& g) {
    Var e = g.gather(ps.index("emb"), ids);
    return g.sum(g.tanh(g.matmul(e, g.param("w"))));
  };
  CHECK(max_gradient_error(ps, loss) < 1e-6);
  Gradients grads(ps);
  Graph g(ps, &grads);
  g.backward(loss(g));
  CHECK(grads[0].row(0).norm() == 0.0);
  CHECK(grads[0].row(2).norm() == 0.0);
}

TEST_CASE("conv1d matches a direct loop and finite differences") {
  auto ps = random_params({{"x", 5, 2}, {"w", 6, 3}, {"bias", 1, 3}}, 4);
  for (int pad : {0, 1, 2}) {
    Graph g(ps);
    Var y = g.conv1d(g.param("x"), g.param("w"), g.param("bias"), 3, pad);
    const Matrix& x = ps.value("x");
    const Matrix& w = ps.value("w");
    Matrix expect(5, 3);
    for (int i = 0; i < 5; ++i) {
      Eigen::RowVectorXd acc = ps.value("bias");
      for (int k = 0; k < 3; ++k) {
        int src = i - pad + k;
        if (src < 0 || src >= 5) continue;
        acc += x.row(src) * w.middleRows(2 * k, 2);
      }
      expect.row(i) = acc;
    }
    CHECK((g.value(y) - expect).cwiseAbs().maxCoeff() < 1e-12);
    auto loss = [pad](Graph& gg) {
      Var out = gg.conv1d(gg.param("x"), gg.param("w"), gg.param("bias"), 3, pad);
      return gg.sum(gg.mul(out, gg.tanh(out)));
    };
    CHECK(max_gradient_error(ps, loss) < 1e-6);
  }
}

TEST_CASE("nll equals the negative log softmax and skips negative targets") {
  auto ps = random_params({{"l", 3, 4}}, 5);
  std::vector<int> targets = {2, -1, 0};
  Graph g(ps);
  double got = g.scalar(g.nll(g.param("l"), targets));
  const Matrix& l = ps.value("l");
  double expect = 0;
  for (int r : {0, 2}) {
    double lse = std::log(l.row(r).array().exp().sum());
    expect += lse - l(r, targets[static_cast<std::size_t>(r)]);
  }
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));
  auto loss = [&](Graph& gg) { return gg.nll(gg.param("l"), targets); };
  CHECK(max_gradient_error(ps, loss) < 1e-6);
}

TEST_CASE("softmax is stable for large logits") {
  ParameterSet ps;
  ps.add("l", 1, 3);
  ps.value("l") << 1000, 1001, 999;
  Graph g(ps);
  Matrix s = g.value(g.softmax_rows(g.param("l")));
  CHECK(s.allFinite());
  CHECK(s.sum() == doctest::Approx(1.0));
  std::vector<int> t = {1};
  CHECK(std::isfinite(g.scalar(g.nll(g.param("l"), t))));
}

TEST_CASE("dropout is identity at zero and inverted otherwise") {
  ParameterSet ps;
  ps.add("a", 50, 40);
  ps.value("a").setOnes();
  Rng rng(9);
  Graph g(ps);
  CHECK(g.value(g.dropout(g.param("a"), 0.0, rng)) == ps.value("a"));
  Matrix d = g.value(g.dropout(g.param("a"), 0.25, rng));
  for (Eigen::Index i = 0; i < d.size(); ++i) CHECK((d.data()[i] == 0.0 || std::abs(d.data()[i] - 1 / 0.75) < 1e-12));
  CHECK(d.mean() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("rewind drops nodes and keeps earlier values") {
  auto ps = random_params({{"a", 2, 2}}, 6);
  Graph g(ps);
  Var a = g.tanh(g.param("a"));
  Matrix before = g.value(a);
  auto m = g.mark();
  for (int i = 0; i < 10; ++i) g.tanh(a);
  g.rewind(m);
  CHECK(g.num_nodes() == m);
  CHECK(g.value(a) == before);
}

TEST_CASE("parameter set lookup and gradient buffer algebra") {
  auto ps = random_params({{"a", 2, 3}, {"b", 1, 1}}, 7);
  CHECK(ps.num_scalars() == 7);
  CHECK(ps.index("b") == 1);
  CHECK_THROWS(ps.index("c"));
  Gradients g(ps);
  g[0].setConstant(1.0);
  g[1].setConstant(2.0);
  CHECK(g.norm() == doctest::Approx(std::sqrt(10.0)));
  Gradients h(ps);
  h.add(g, 2.0);
  h.scale(0.5);
  CHECK(h.norm() == doctest::Approx(g.norm()));
  h.zero();
  CHECK(h.norm() == 0.0);
  g[0](0, 0) = std::nan("");
  CHECK_FALSE(g.all_finite());
}

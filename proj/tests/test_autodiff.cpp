#include <doctest.h>

#include "burgan/autodiff/gradcheck.hpp"
#include "burgan/autodiff/mlp.hpp"
#include "burgan/common/errors.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace burgan;
using namespace burgan::ad;

namespace {

// Straightforward loop evaluator used as an independent oracle for mlp_forward.
std::vector<double> naive_forward(const Mlp& net, std::vector<double> a) {
  for (const Layer& l : net.layers) {
    std::vector<double> z(static_cast<std::size_t>(l.weight.rows()));
    for (Eigen::Index o = 0; o < l.weight.rows(); ++o) {
      double acc = l.bias(0, o);
      for (Eigen::Index i = 0; i < l.weight.cols(); ++i) acc += l.weight(o, i) * a[static_cast<std::size_t>(i)];
      switch (l.activation) {
        case Activation::tanh: acc = std::tanh(acc); break;
        case Activation::relu: acc = acc > 0 ? acc : 0; break;
        case Activation::sigmoid: acc = 1.0 / (1.0 + std::exp(-acc)); break;
        case Activation::identity: break;
      }
      z[static_cast<std::size_t>(o)] = acc;
    }
    a = std::move(z);
  }
  return a;
}

Mlp random_net(std::vector<LayerSpec> specs, std::uint64_t seed, double bias_scale = 0.3) {
  std::mt19937_64 rng(seed);
  Mlp net = Mlp::glorot(specs, rng);
  std::normal_distribution<double> n(0.0, bias_scale);
  for (Layer& l : net.layers)
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias.data()[i] = n(rng);
  return net;
}

double rel_err(double analytic, double reference) {
  return std::abs(analytic - reference) / std::max(std::abs(reference), kGradcheckFloor);
}

double eval_scalar(const Mlp& net, std::span<const double> rest, double x, double t) {
  Matrix in(1, static_cast<Eigen::Index>(rest.size() + 2));
  in(0, 0) = x;
  in(0, 1) = t;
  for (std::size_t k = 0; k < rest.size(); ++k) in(0, static_cast<Eigen::Index>(k + 2)) = rest[k];
  return mlp_evaluate(net, in)(0, 0);
}

}  // namespace

TEST_CASE("mlp_forward: zero weights give the composed bias") {
  std::vector<LayerSpec> specs{{3, 4, Activation::identity}, {4, 2, Activation::identity}};
  Mlp net = Mlp::zeros(specs);
  net.layers[1].bias << 0.25, -1.5;
  Tape tape;
  Matrix in(1, 3);
  in << 7.0, -2.0, 3.0;
  Var out = mlp_forward(bind(tape, net, false), tape.constant(in));
  CHECK(out.value()(0, 0) == 0.25);
  CHECK(out.value()(0, 1) == -1.5);

  net.layers[0].bias.setConstant(0.4);
  net.layers[0].activation = Activation::tanh;
  Tape tape2;
  Var out2 = mlp_forward(bind(tape2, net, false), tape2.constant(in));
  CHECK(out2.value()(0, 0) == 0.25);
}

TEST_CASE("mlp_forward: single tanh neuron closed form") {
  std::vector<LayerSpec> specs{{1, 1, Activation::tanh}};
  Mlp net = Mlp::zeros(specs);
  net.layers[0].weight(0, 0) = 2.0;
  net.layers[0].bias(0, 0) = 1.0;
  Tape tape;
  Matrix in(1, 1);
  in << 0.5;
  Var out = mlp_forward(bind(tape, net, false), tape.constant(in));
  CHECK(out.value()(0, 0) == doctest::Approx(0.9640275800758169).epsilon(1e-15));
}

TEST_CASE("mlp_forward matches an independent loop evaluator") {
  Mlp net = random_net({{5, 7, Activation::tanh}, {7, 3, Activation::sigmoid}}, 11);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  Matrix in(6, 5);
  for (Eigen::Index i = 0; i < in.size(); ++i) in.data()[i] = n(rng);
  Tape tape;
  const Matrix out = mlp_forward(bind(tape, net, true), tape.constant(in)).value();
  const Matrix plain = mlp_evaluate(net, in);
  for (Eigen::Index r = 0; r < in.rows(); ++r) {
    std::vector<double> row(in.row(r).data(), in.row(r).data() + in.cols());
    const auto ref = naive_forward(net, row);
    for (Eigen::Index c = 0; c < 3; ++c) {
      CHECK(out(r, c) == doctest::Approx(ref[static_cast<std::size_t>(c)]).epsilon(1e-13));
      CHECK(plain(r, c) == out(r, c));
    }
  }
}

TEST_CASE("mlp_forward errors") {
  std::vector<LayerSpec> bad{{3, 4, Activation::tanh}, {5, 1, Activation::identity}};
  CHECK_THROWS_AS(Mlp::zeros(bad), ConfigError);
  std::vector<LayerSpec> zero_dim{{0, 4, Activation::tanh}};
  CHECK_THROWS_AS(Mlp::zeros(zero_dim), ConfigError);

  std::vector<LayerSpec> specs{{2, 2, Activation::identity}, {2, 1, Activation::identity}};
  Mlp net = Mlp::zeros(specs);
  Tape tape;
  CHECK_THROWS_AS(mlp_forward(bind(tape, net, false), tape.constant(Matrix::Zero(1, 3))), ConfigError);

  net.layers[0].weight.setConstant(1e200);
  net.layers[1].weight.setConstant(1e200);
  Tape tape2;
  Matrix big = Matrix::Constant(1, 2, 1e200);
  try {
    (void)mlp_forward(bind(tape2, net, false), tape2.constant(big));
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("make_matrix and checked tapes reject non-finite data") {
  std::vector<double> ok{1, 2, 3, 4};
  CHECK(make_matrix(2, 2, ok)(1, 0) == 3.0);
  CHECK_THROWS_AS(make_matrix(3, 2, ok), ConfigError);
  std::vector<double> bad{1, std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(make_matrix(1, 2, bad), NumericError);

  Tape checked(true);
  Var a = checked.variable(Matrix::Constant(1, 1, -1.0));
  CHECK_THROWS_AS(log(a), NumericError);
  Tape loose;
  Var b = loose.variable(Matrix::Constant(1, 1, -1.0));
  CHECK(std::isnan(log(b).scalar()));
}

TEST_CASE("jet_forward: single tanh neuron") {
  const double w = 1.5, b = 0.2, x = 0.3;
  std::vector<LayerSpec> specs{{2, 1, Activation::tanh}};
  Mlp net = Mlp::zeros(specs);
  net.layers[0].weight(0, 0) = w;
  net.layers[0].bias(0, 0) = b;
  const Jet2 j = jet_forward(net, {}, x, 0.7);
  const double u = std::tanh(w * x + b);
  CHECK(j.value == doctest::Approx(u).epsilon(1e-15));
  CHECK(j.d_dx == doctest::Approx(w * (1 - u * u)).epsilon(1e-14));
  CHECK(j.d2_dx2 == doctest::Approx(-2 * w * w * u * (1 - u * u)).epsilon(1e-14));
  CHECK(j.d_dt == 0.0);
}

TEST_CASE("jet_forward: zero weights on the x slot give zero x-derivatives") {
  Mlp net = random_net({{4, 8, Activation::tanh}, {8, 1, Activation::identity}}, 5);
  net.layers[0].weight.col(0).setZero();
  const std::vector<double> rest{0.1, -0.4};
  const Jet2 j = jet_forward(net, rest, 0.9, 0.2);
  CHECK(j.d_dx == 0.0);
  CHECK(j.d2_dx2 == 0.0);
  CHECK(j.d_dt != 0.0);
}

TEST_CASE("jet_forward: Table-1-sized tanh net vs central finite differences") {
  // 50 inputs (x, t, 32 latent, 16 noise), five 256-wide tanh layers, a 256 projection, scalar head
  std::vector<LayerSpec> specs{{50, 256, Activation::tanh}};
  for (int k = 0; k < 5; ++k) specs.push_back({256, 256, Activation::tanh});
  specs.push_back({256, 1, Activation::identity});
  const Mlp net = random_net(specs, 2024, 0.1);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> n;
  double worst1 = 0, worst_t = 0, worst2 = 0;
  for (int p = 0; p < 100; ++p) {
    std::vector<double> rest(48);
    for (double& r : rest) r = n(rng);
    const double x = u(rng), t = 0.5 * (u(rng) + 1.0);
    const Jet2 j = jet_forward(net, rest, x, t);
    const double h1 = 1e-4, h2 = 1e-3;
    const double fx = (eval_scalar(net, rest, x + h1, t) - eval_scalar(net, rest, x - h1, t)) / (2 * h1);
    const double ft = (eval_scalar(net, rest, x, t + h1) - eval_scalar(net, rest, x, t - h1)) / (2 * h1);
    const double fxx = (eval_scalar(net, rest, x + h2, t) - 2 * eval_scalar(net, rest, x, t) +
                        eval_scalar(net, rest, x - h2, t)) / (h2 * h2);
    CHECK(j.value == doctest::Approx(eval_scalar(net, rest, x, t)).epsilon(1e-13));
    worst1 = std::max(worst1, rel_err(j.d_dx, fx));
    worst_t = std::max(worst_t, rel_err(j.d_dt, ft));
    worst2 = std::max(worst2, rel_err(j.d2_dx2, fxx));
  }
  MESSAGE("jet vs FD worst rel. err: dx " << worst1 << ", dt " << worst_t << ", dxx " << worst2);
  CHECK(worst1 <= 1e-5);
  CHECK(worst_t <= 1e-5);
  CHECK(worst2 <= 1e-4);
}

TEST_CASE("jet primitives are consistent with finite differences of their value channel") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> n;
  for (Activation act : {Activation::tanh, Activation::sigmoid, Activation::relu, Activation::identity}) {
    // inner function z(x) = p x^2/2 + q x + r has z' = p x + q, z'' = p
    for (int trial = 0; trial < 20; ++trial) {
      const double p = n(rng), q = n(rng), r = n(rng), x = n(rng);
      auto zf = [&](double s) { return 0.5 * p * s * s + q * s + r; };
      auto f = [&](double s) {
        Matrix m(1, 1);
        m << zf(s);
        activate_inplace(m, act);
        return m(0, 0);
      };
      if (act == Activation::relu && std::abs(zf(x)) < 1e-2) continue;  // stay off the kink
      Tape tape;
      JetBatch in;
      in.value = tape.constant(Matrix::Constant(1, 1, zf(x)));
      in.dx = tape.constant(Matrix::Constant(1, 1, p * x + q));
      in.dt = tape.constant(Matrix::Constant(1, 1, 0.0));
      in.dxx = tape.constant(Matrix::Constant(1, 1, p));
      const Jet2 j = jet_activate(in, act).at(0);
      const double h1 = 1e-5, h2 = 1e-4;
      const double fd1 = (f(x + h1) - f(x - h1)) / (2 * h1);
      const double fd2 = (f(x + h2) - 2 * f(x) + f(x - h2)) / (h2 * h2);
      CHECK(std::abs(j.d_dx - fd1) <= 1e-6 * std::max(1.0, std::abs(fd1)));
      CHECK(std::abs(j.d2_dx2 - fd2) <= 1e-5 * std::max(1.0, std::abs(fd2)));
    }
  }
}

TEST_CASE("reverse_gradient basics") {
  Tape tape;
  Var theta = tape.variable(Matrix::Constant(1, 1, 3.0));
  Var loss = square(theta);
  const auto g = reverse_gradient(tape, loss, std::vector<Var>{theta});
  CHECK(g[0](0, 0) == 6.0);

  Tape tape2;
  Var w = tape2.variable(Matrix::Constant(2, 2, 1.0));
  Var c = tape2.constant(Matrix::Constant(1, 1, 4.0));
  const auto g2 = reverse_gradient(tape2, add_scalar(c, 1.0), std::vector<Var>{w});
  CHECK(g2[0].isZero(0.0));

  Tape tape3;
  Var m = tape3.variable(Matrix::Constant(2, 1, 1.0));
  CHECK_THROWS_AS(tape3.backward(m), ContractViolation);
}

TEST_CASE("reverse-mode input gradient equals the jet x channel") {
  Mlp net = random_net({{1, 16, Activation::tanh}, {16, 16, Activation::sigmoid}, {16, 1, Activation::identity}}, 8);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 10; ++trial) {
    const double x = n(rng);
    Tape tape;
    Var in = tape.variable(Matrix::Constant(1, 1, x));
    const BoundMlp bound = bind(tape, net, false);
    Var out = mlp_forward(bound, in);
    tape.backward(out);
    const double reverse = tape.gradient(in)(0, 0);

    Tape jt;
    const JetBatch j = mlp_jet_forward(bind(jt, net, false),
                                       seed_jets(jt, Matrix::Constant(1, 1, x), 0, 1.0, 0, 0.0, JetChannels::first_x()));
    CHECK(std::abs(reverse - j.dx.value()(0, 0)) <= 1e-12 * std::max(1.0, std::abs(reverse)));
  }
}

TEST_CASE("gradients are linear in the loss") {
  Mlp net = random_net({{3, 6, Activation::tanh}, {6, 1, Activation::identity}}, 21);
  Matrix x1(1, 3), x2(1, 3);
  x1 << 0.3, -0.2, 0.9;
  x2 << -1.1, 0.5, 0.05;
  auto grads = [&](double a, double b) {
    Tape tape;
    const BoundMlp bound = bind(tape, net, true);
    Var l1 = sum(square(mlp_forward(bound, tape.constant(x1))));
    Var l2 = sum(square(mlp_forward(bound, tape.constant(x2))));
    Var total = add(scale(l1, a), scale(l2, b));
    return reverse_gradient(tape, total, bound.parameters());
  };
  // powers of two keep the scaling exact
  const auto g1 = grads(1.0, 0.0);
  const auto g2 = grads(0.0, 1.0);
  const auto g = grads(2.0, 0.5);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Matrix expected = 2.0 * g1[k] + 0.5 * g2[k];
    CHECK(g[k] == expected);
  }
}

TEST_CASE("tape backward is deterministic") {
  Mlp net = random_net({{4, 32, Activation::tanh}, {32, 1, Activation::identity}}, 4);
  Matrix in = Matrix::Random(16, 4);
  auto run = [&] {
    Tape tape;
    const BoundMlp bound = bind(tape, net, true);
    const JetBatch j = mlp_jet_forward(bound, seed_jets(tape, in, 0, 1.0, 1, 1.0, JetChannels::full()));
    Var loss = mean(square(add(j.dt.valid() ? j.dt : j.value, mul(j.value, j.dx))));
    return reverse_gradient(tape, loss, bound.parameters());
  };
  const auto a = run();
  const auto b = run();
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);
}

TEST_CASE("parameter gradients through jet channels match finite differences") {
  const std::vector<LayerSpec> specs{{3, 5, Activation::tanh}, {5, 4, Activation::tanh}, {4, 1, Activation::identity}};
  Mlp net = random_net(specs, 77);
  Matrix in = Matrix::Random(6, 3);

  auto loss_of = [&](const Mlp& m, Tape& tape, BoundMlp& bound) {
    bound = bind(tape, m, true);
    const JetBatch j = mlp_jet_forward(bound, seed_jets(tape, in, 0, 0.5, 1, 2.0, JetChannels::full()));
    Var residual = add(sub(j.dt, scale(j.dxx, 0.1)), mul(j.value, j.dx));
    return mean(square(residual));
  };

  std::vector<double> flat;
  for (const Matrix* p : net.parameters()) flat.insert(flat.end(), p->data(), p->data() + p->size());
  auto unflatten = [&](std::span<const double> v) {
    Mlp m = net;
    std::size_t off = 0;
    for (Matrix* p : m.parameters()) {
      std::copy(v.begin() + static_cast<std::ptrdiff_t>(off), v.begin() + static_cast<std::ptrdiff_t>(off + p->size()),
                p->data());
      off += static_cast<std::size_t>(p->size());
    }
    return m;
  };
  ScalarFunction f = [&](std::span<const double> v) {
    Tape tape;
    BoundMlp bound;
    return loss_of(unflatten(v), tape, bound).scalar();
  };

  Tape tape;
  BoundMlp bound;
  Var loss = loss_of(net, tape, bound);
  const auto grads = reverse_gradient(tape, loss, bound.parameters());
  std::vector<double> analytic;
  for (const Matrix& g : grads) analytic.insert(analytic.end(), g.data(), g.data() + g.size());
  const double err = finite_difference_check(f, flat, analytic, 1e-6);
  MESSAGE("jet-loss parameter gradient rel. err " << err);
  CHECK(err <= 1e-4);
}

TEST_CASE("finite_difference_check on closed forms") {
  ScalarFunction sq = [](std::span<const double> v) { return v[0] * v[0]; };
  const std::vector<double> p{2.0};
  const std::vector<double> g{4.0};
  CHECK(finite_difference_check(sq, p, g, 1e-5) <= 1e-9);

  ScalarFunction th = [](std::span<const double> v) { return std::tanh(v[0]); };
  const std::vector<double> z{0.0};
  const std::vector<double> one{1.0};
  CHECK(finite_difference_check(th, z, one, 1e-5) <= 1e-10);
}

TEST_CASE("primitive backward rules") {
  // gather/reshape/slice/concat route gradients back to the right slots
  Tape tape;
  Matrix base(3, 2);
  base << 1, 2, 3, 4, 5, 6;
  Var a = tape.variable(base);
  const std::vector<Eigen::Index> idx{2, 0, 2};
  Var g = gather_rows(a, idx);
  Var r = reshape(g, 2, 3);
  Var s = slice_cols(r, 1, 2);
  std::vector<Var> parts{s, s};
  Var c = concat_cols(parts);
  tape.backward(sum(c));
  Matrix expected(3, 2);
  // r = [[5,6,1],[2,5,6]]; s takes cols 1..2 of r: entries (0,1),(0,2),(1,1),(1,2) -> g flat 1,2,4,5
  // g flat index -> (row, col) of g: 1->(0,1) 2->(1,0) 4->(2,0) 5->(2,1); each counted twice
  // g rows map to a rows 2,0,2
  expected << 2, 0, 0, 0, 2, 4;
  CHECK(tape.gradient(a) == expected);

  Tape t2;
  Var x = t2.variable(Matrix::Constant(1, 3, 0.5));
  Var cl = clamp(x, 0.0, 0.4);
  t2.backward(sum(cl));
  CHECK(t2.gradient(x).isZero(0.0));
}

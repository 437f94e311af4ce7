#include <cmath>
#include <random>

#include "doctest.h"
#include "grm/core_math.hpp"
#include "support.hpp"

using namespace grm;
using grm::test::max_rel_error;
using grm::test::numeric_gradient;
using grm::test::uniform;

TEST_SUITE("core_math") {

TEST_CASE("linear evaluates Wx + b") {
  Vector x(2);
  x << 1, 2;
  const Vector y = linear(x, Matrix::Identity(2, 2), Vector::Zero(2));
  CHECK(y(0) == 1);
  CHECK(y(1) == 2);

  Vector b(2);
  b << 3, -1;
  std::mt19937_64 rng(1);
  const Vector z = linear(Vector::Zero(3), uniform(2, 3, rng), b);
  CHECK(z(0) == 3);
  CHECK(z(1) == -1);
}

TEST_CASE("linear rejects mismatched shapes and names both") {
  try {
    linear(Vector::Zero(3), Matrix::Zero(2, 4), Vector::Zero(2));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    CHECK(what.find("2x4") != std::string::npos);
    CHECK(what.find("3x1") != std::string::npos);
  }
  CHECK_THROWS_AS(linear(Vector::Zero(4), Matrix::Zero(2, 4), Vector::Zero(3)), ShapeError);
}

TEST_CASE("linear gradient matches finite differences") {
  std::mt19937_64 rng(2);
  const Matrix x = uniform(3, 1, rng);
  const Matrix W = uniform(4, 3, rng);
  const Matrix b = uniform(4, 1, rng);
  const Matrix weights = uniform(4, 1, rng);  // loss = weights . tanh(Wx + b)
  auto loss = [&](const Matrix& xx, const Matrix& WW, const Matrix& bb) {
    return weights.col(0).dot(linear(xx, WW, bb).array().tanh().matrix());
  };
  const Vector y = linear(x, W, b);
  const Vector up = (weights.array() * (1 - y.array().tanh().square())).matrix();
  const auto g = linear_backward(x, W, up);
  CHECK(max_rel_error(g.dx, numeric_gradient([&](const Matrix& v) { return loss(v, W, b); }, x)) < 1e-4);
  CHECK(max_rel_error(g.dW, numeric_gradient([&](const Matrix& v) { return loss(x, v, b); }, W)) < 1e-4);
  CHECK(max_rel_error(g.db, numeric_gradient([&](const Matrix& v) { return loss(x, W, v); }, b)) < 1e-4);
}

TEST_CASE("affine_rows gradient matches finite differences") {
  std::mt19937_64 rng(3);
  const Matrix X = uniform(5, 3, rng);
  const Matrix W = uniform(4, 3, rng);
  const Matrix b = uniform(4, 1, rng);
  const Matrix C = uniform(5, 4, rng);
  auto loss = [&](const Matrix& XX, const Matrix& WW, const Matrix& bb) {
    return (affine_rows(XX, WW, bb).array().tanh() * C.array()).sum();
  };
  const Matrix Y = affine_rows(X, W, b);
  const Matrix up = (C.array() * (1 - Y.array().tanh().square())).matrix();
  const auto g = affine_rows_backward(X, W, up);
  CHECK(max_rel_error(g.dX, numeric_gradient([&](const Matrix& v) { return loss(v, W, b); }, X)) < 1e-4);
  CHECK(max_rel_error(g.dW, numeric_gradient([&](const Matrix& v) { return loss(X, v, b); }, W)) < 1e-4);
  CHECK(max_rel_error(g.db, numeric_gradient([&](const Matrix& v) { return loss(X, W, v); }, b)) < 1e-4);
}

TEST_CASE("activations at reference points") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(std::tanh(0.0) == 0.0);
  // 1 / (1 + e^-1) to 5 dp
  CHECK(sigmoid(1.0) == doctest::Approx(0.73106).epsilon(1e-5));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  Vector x(3);
  x << -1, 0, 2;
  const Matrix s = activation(x, Activation::kSigmoid);
  for (int k = 0; k < 3; ++k) CHECK(s(k) == doctest::Approx(1 / (1 + std::exp(-x(k)))));
}

TEST_CASE("activation gradients match finite differences") {
  std::mt19937_64 rng(4);
  const Matrix x = uniform(6, 1, rng);
  const Matrix c = uniform(6, 1, rng);
  for (const auto kind : {Activation::kSigmoid, Activation::kTanh}) {
    auto loss = [&](const Matrix& v) { return c.col(0).dot(activation(v, kind).col(0)); };
    const Matrix y = activation(x, kind);
    const Matrix g = activation_backward(y, c, kind);
    CHECK(max_rel_error(g, numeric_gradient(loss, x)) < 1e-4);
  }
}

TEST_CASE("hadamard identities and gradient") {
  std::mt19937_64 rng(5);
  const Matrix y = uniform(3, 1, rng);
  CHECK(hadamard(Matrix::Ones(3, 1), y) == y);
  CHECK(hadamard(Matrix::Zero(2, 1), uniform(2, 1, rng)).isZero(0));
  CHECK_THROWS_AS(hadamard(Matrix::Ones(3, 1), Matrix::Ones(2, 1)), ShapeError);

  const Matrix a = uniform(6, 1, rng);
  const Matrix b = uniform(6, 1, rng);
  const Matrix c = uniform(6, 1, rng);
  auto loss = [&](const Matrix& p, const Matrix& q) { return c.col(0).dot(hadamard(p, q).col(0)); };
  const auto g = hadamard_backward(a, b, c);
  CHECK(max_rel_error(g.dx, numeric_gradient([&](const Matrix& v) { return loss(v, b); }, a)) < 1e-4);
  CHECK(max_rel_error(g.dy, numeric_gradient([&](const Matrix& v) { return loss(a, v); }, b)) < 1e-4);
}

TEST_CASE("lowrank_bilinear reference values") {
  std::mt19937_64 rng(6);
  const Vector zero = Vector::Zero(4);
  CHECK(lowrank_bilinear(zero, uniform(5, 1, rng), uniform(3, 4, rng), uniform(3, 5, rng)).isZero(0));

  const Matrix one = Matrix::Ones(1, 1);
  const Vector h = Vector::Ones(1);
  // tanh(1)^2
  CHECK(lowrank_bilinear(h, h, one, one)(0) == doctest::Approx(0.58002).epsilon(1e-5));
  CHECK_THROWS_AS(lowrank_bilinear(h, h, Matrix::Ones(2, 1), Matrix::Ones(3, 1)), ShapeError);
}

TEST_CASE("lowrank_bilinear gradient at rank 8") {
  std::mt19937_64 rng(7);
  const Matrix hr = uniform(6, 1, rng);
  const Matrix ho = uniform(5, 1, rng);
  const Matrix U = uniform(8, 6, rng);
  const Matrix V = uniform(8, 5, rng);
  const Matrix c = uniform(8, 1, rng);
  auto loss = [&](const Matrix& a, const Matrix& b, const Matrix& u, const Matrix& v) {
    return c.col(0).dot(lowrank_bilinear(a, b, u, v));
  };
  const auto g = lowrank_bilinear_backward(hr, ho, U, V, c);
  CHECK(max_rel_error(g.dh_r, numeric_gradient([&](const Matrix& x) { return loss(x, ho, U, V); }, hr)) < 1e-4);
  CHECK(max_rel_error(g.dh_o, numeric_gradient([&](const Matrix& x) { return loss(hr, x, U, V); }, ho)) < 1e-4);
  CHECK(max_rel_error(g.dU, numeric_gradient([&](const Matrix& x) { return loss(hr, ho, x, V); }, U)) < 1e-4);
  CHECK(max_rel_error(g.dV, numeric_gradient([&](const Matrix& x) { return loss(hr, ho, U, x); }, V)) < 1e-4);
}

TEST_CASE("softmax_xent reference values") {
  const Vector equal = Vector::Constant(6, 0.3);
  for (int y = 0; y < 6; ++y) CHECK(softmax_xent(equal, y).loss == doctest::Approx(std::log(6.0)).epsilon(1e-12));

  Vector s = Vector::Zero(4);
  s(2) = 100;
  CHECK(softmax_xent(s, 2).loss < 1e-10);
  CHECK(softmax_xent(s, 2).loss >= 0);

  CHECK_THROWS_AS(softmax_xent(s, 4), IndexError);
  CHECK_THROWS_AS(softmax_xent(s, -1), IndexError);
}

TEST_CASE("softmax sums to one and xent gradient matches finite differences") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector s = grm::test::uniform_vec(6, rng, -5, 5);
    CHECK(std::abs(softmax(s).sum() - 1) < 1e-12);
    const int y = trial % 6;
    const auto r = softmax_xent(s, y);
    CHECK(r.loss >= 0);
    const Matrix numeric = numeric_gradient([&](const Matrix& v) { return softmax_xent(Vector(v), y).loss; }, s);
    CHECK(max_rel_error(r.grad, numeric) < 1e-4);
  }
}

TEST_CASE("ops are bitwise deterministic") {
  std::mt19937_64 rng(9);
  const Matrix X = uniform(7, 5, rng);
  const Matrix W = uniform(3, 5, rng);
  const Matrix b = uniform(3, 1, rng);
  CHECK(affine_rows(X, W, b) == affine_rows(X, W, b));
  const Vector s = grm::test::uniform_vec(6, rng);
  CHECK(softmax_xent(s, 1).grad == softmax_xent(s, 1).grad);
}

}

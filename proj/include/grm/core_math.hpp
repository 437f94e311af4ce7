#pragma once

// Dense differentiable primitives. Every forward op has a paired backward
// routine that maps an upstream gradient to gradients of its inputs; callers
// compose them in reverse order.

#include <cmath>
#include <concepts>
#include <limits>
#include <string>

#include "grm/types.hpp"

namespace grm {

enum class Activation { kSigmoid, kTanh };

namespace detail {

template <class A, class B>
void require_same_size(const Eigen::EigenBase<A>& a, const Eigen::EigenBase<B>& b,
                       const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape " + shape_of(a) + " vs " + shape_of(b));
  }
}

}  // namespace detail

template <std::floating_point Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) {
    return Scalar(1) / (Scalar(1) + std::exp(-x));
  }
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <class Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) { return sigmoid(v); });
}

template <class Derived>
MatrixX<typename Derived::Scalar> activation(const Eigen::MatrixBase<Derived>& x,
                                             Activation kind) {
  if (kind == Activation::kSigmoid) {
    return sigmoid(x);
  }
  return x.array().tanh().matrix();
}

// Gradient through an activation, expressed with the forward output y.
template <class DY, class DG>
MatrixX<typename DY::Scalar> activation_backward(const Eigen::MatrixBase<DY>& y,
                                                 const Eigen::MatrixBase<DG>& upstream,
                                                 Activation kind) {
  detail::require_same_size(y, upstream, "activation_backward");
  using Scalar = typename DY::Scalar;
  if (kind == Activation::kSigmoid) {
    return (upstream.array() * y.array() * (Scalar(1) - y.array())).matrix();
  }
  return (upstream.array() * (Scalar(1) - y.array().square())).matrix();
}

// y = W x + b
template <class DX, class DW, class DB>
VectorX<typename DX::Scalar> linear(const Eigen::MatrixBase<DX>& x,
                                    const Eigen::MatrixBase<DW>& W,
                                    const Eigen::MatrixBase<DB>& b) {
  if (x.cols() != 1 || b.cols() != 1 || W.cols() != x.rows() || W.rows() != b.rows()) {
    throw ShapeError("linear: W " + shape_of(W) + " incompatible with x " + shape_of(x) +
                     " and b " + shape_of(b));
  }
  return W * x + b;
}

template <class Scalar>
struct LinearGrad {
  VectorX<Scalar> dx;
  MatrixX<Scalar> dW;
  VectorX<Scalar> db;
};

template <class DX, class DW, class DG>
LinearGrad<typename DX::Scalar> linear_backward(const Eigen::MatrixBase<DX>& x,
                                                const Eigen::MatrixBase<DW>& W,
                                                const Eigen::MatrixBase<DG>& upstream) {
  if (upstream.cols() != 1 || W.rows() != upstream.rows() || W.cols() != x.rows()) {
    throw ShapeError("linear_backward: W " + shape_of(W) + " incompatible with x " +
                     shape_of(x) + " and upstream " + shape_of(upstream));
  }
  return {W.transpose() * upstream, upstream * x.transpose(), upstream};
}

// Row-stacked affine map: every row x of X becomes W x + b.
template <class DX, class DW, class DB>
MatrixX<typename DX::Scalar> affine_rows(const Eigen::MatrixBase<DX>& X,
                                         const Eigen::MatrixBase<DW>& W,
                                         const Eigen::MatrixBase<DB>& b) {
  if (W.cols() != X.cols() || b.size() != W.rows()) {
    throw ShapeError("affine_rows: X " + shape_of(X) + " incompatible with W " + shape_of(W) +
                     " and b " + shape_of(b));
  }
  MatrixX<typename DX::Scalar> Y = X * W.transpose();
  Y.rowwise() += b.reshaped().transpose();
  return Y;
}

template <class Scalar>
struct AffineRowsGrad {
  MatrixX<Scalar> dX;
  MatrixX<Scalar> dW;
  VectorX<Scalar> db;
};

template <class DX, class DW, class DG>
AffineRowsGrad<typename DX::Scalar> affine_rows_backward(const Eigen::MatrixBase<DX>& X,
                                                         const Eigen::MatrixBase<DW>& W,
                                                         const Eigen::MatrixBase<DG>& upstream) {
  if (upstream.rows() != X.rows() || upstream.cols() != W.rows() || W.cols() != X.cols()) {
    throw ShapeError("affine_rows_backward: X " + shape_of(X) + ", W " + shape_of(W) +
                     ", upstream " + shape_of(upstream));
  }
  return {upstream * W, upstream.transpose() * X, upstream.colwise().sum().transpose()};
}

template <class DX, class DY>
MatrixX<typename DX::Scalar> hadamard(const Eigen::MatrixBase<DX>& x,
                                      const Eigen::MatrixBase<DY>& y) {
  detail::require_same_size(x, y, "hadamard");
  return x.cwiseProduct(y);
}

template <class Scalar>
struct HadamardGrad {
  MatrixX<Scalar> dx;
  MatrixX<Scalar> dy;
};

template <class DX, class DY, class DG>
HadamardGrad<typename DX::Scalar> hadamard_backward(const Eigen::MatrixBase<DX>& x,
                                                    const Eigen::MatrixBase<DY>& y,
                                                    const Eigen::MatrixBase<DG>& upstream) {
  detail::require_same_size(x, y, "hadamard_backward");
  detail::require_same_size(x, upstream, "hadamard_backward");
  return {upstream.cwiseProduct(y), upstream.cwiseProduct(x)};
}

// tanh(U h_r) ⊙ tanh(V h_o)
template <class DR, class DO, class DU, class DV>
VectorX<typename DR::Scalar> lowrank_bilinear(const Eigen::MatrixBase<DR>& h_r,
                                              const Eigen::MatrixBase<DO>& h_o,
                                              const Eigen::MatrixBase<DU>& U,
                                              const Eigen::MatrixBase<DV>& V) {
  if (h_r.cols() != 1 || h_o.cols() != 1 || U.cols() != h_r.rows() ||
      V.cols() != h_o.rows() || U.rows() != V.rows()) {
    throw ShapeError("lowrank_bilinear: U " + shape_of(U) + " with h_r " + shape_of(h_r) +
                     ", V " + shape_of(V) + " with h_o " + shape_of(h_o));
  }
  return (U * h_r).array().tanh().cwiseProduct((V * h_o).array().tanh()).matrix();
}

template <class Scalar>
struct BilinearGrad {
  VectorX<Scalar> dh_r;
  VectorX<Scalar> dh_o;
  MatrixX<Scalar> dU;
  MatrixX<Scalar> dV;
};

template <class DR, class DO, class DU, class DV, class DG>
BilinearGrad<typename DR::Scalar> lowrank_bilinear_backward(
    const Eigen::MatrixBase<DR>& h_r, const Eigen::MatrixBase<DO>& h_o,
    const Eigen::MatrixBase<DU>& U, const Eigen::MatrixBase<DV>& V,
    const Eigen::MatrixBase<DG>& upstream) {
  using Scalar = typename DR::Scalar;
  if (h_r.cols() != 1 || h_o.cols() != 1 || U.cols() != h_r.rows() ||
      V.cols() != h_o.rows() || U.rows() != V.rows() || upstream.cols() != 1 ||
      upstream.rows() != U.rows()) {
    throw ShapeError("lowrank_bilinear_backward: U " + shape_of(U) + ", V " + shape_of(V) +
                     ", upstream " + shape_of(upstream));
  }
  const VectorX<Scalar> pr = (U * h_r).array().tanh().matrix();
  const VectorX<Scalar> po = (V * h_o).array().tanh().matrix();
  const VectorX<Scalar> dpre_r =
      (upstream.array() * po.array() * (Scalar(1) - pr.array().square())).matrix();
  const VectorX<Scalar> dpre_o =
      (upstream.array() * pr.array() * (Scalar(1) - po.array().square())).matrix();
  return {U.transpose() * dpre_r, V.transpose() * dpre_o, dpre_r * h_r.transpose(),
          dpre_o * h_o.transpose()};
}

template <class Derived>
VectorX<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  const Scalar shift = s.maxCoeff();
  VectorX<Scalar> p = (s.array() - shift).exp().matrix();
  p /= p.sum();
  return p;
}

template <class Scalar>
struct SoftmaxXent {
  Scalar loss;
  VectorX<Scalar> grad;
};

// Cross-entropy of a max-shifted softmax against class y.
template <class Derived>
SoftmaxXent<typename Derived::Scalar> softmax_xent(const Eigen::MatrixBase<Derived>& s,
                                                   Eigen::Index y) {
  using Scalar = typename Derived::Scalar;
  if (y < 0 || y >= s.size()) {
    throw IndexError("softmax_xent: class " + std::to_string(y) + " out of range for " +
                     std::to_string(s.size()) + " scores");
  }
  const Scalar shift = s.maxCoeff();
  const auto shifted = (s.array() - shift).eval();
  const Scalar log_norm = std::log(shifted.exp().sum());
  VectorX<Scalar> grad = (shifted - log_norm).exp().matrix();
  grad(y) -= Scalar(1);
  // -log p_y = log_norm - shifted_y; clamp the rounding residue at exact saturation
  const Scalar loss = std::max(Scalar(0), log_norm - shifted(y));
  return {loss, grad};
}

}  // namespace grm

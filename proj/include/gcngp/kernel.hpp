#pragma once

// Activation expectations C = <phi(h_a) phi(h_b)> for zero-mean Gaussian
// preactivations, their derivatives with respect to covariance entries, and
// elementwise versions over full covariance matrices.

#include "gcngp/core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <algorithm>
#include <functional>
#include <memory>
#include <numbers>
#include <string>

namespace gcngp {

/// Physicists' Gauss-Hermite rule (weight exp(-x^2)), built with Golub-Welsch.
template <typename Scalar>
struct GaussHermiteRule {
  VectorX<Scalar> nodes;
  VectorX<Scalar> weights;
};

template <typename Scalar>
GaussHermiteRule<Scalar> gauss_hermite_rule(int n_points) {
  if (n_points < 1) throw Error(ErrorCode::InvalidArgument, "quadrature needs at least one point");
  MatrixX<Scalar> jacobi = MatrixX<Scalar>::Zero(n_points, n_points);
  for (int i = 0; i + 1 < n_points; ++i)
    jacobi(i, i + 1) = jacobi(i + 1, i) = std::sqrt(Scalar(i + 1) / Scalar(2));
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(jacobi);
  GaussHermiteRule<Scalar> rule;
  rule.nodes = solver.eigenvalues();
  rule.weights = std::sqrt(std::numbers::pi_v<Scalar>) * solver.eigenvectors().row(0).transpose().array().square();
  return rule;
}

/// erf(sqrt(pi)/2 x): slope one at the origin, saturating at +-1.
template <typename Scalar>
Scalar erf_activation(Scalar x) {
  return std::erf(std::sqrt(std::numbers::pi_v<Scalar>) / Scalar(2) * x);
}

template <typename Scalar = double>
struct KernelSpec {
  enum class Kind { AnalyticErf, Quadrature };

  Kind kind = Kind::AnalyticErf;
  std::function<Scalar(Scalar)> activation;
  int n_points = 64;
  std::shared_ptr<const GaussHermiteRule<Scalar>> rule;

  static KernelSpec analytic_erf() { return KernelSpec{}; }

  static KernelSpec quadrature(std::function<Scalar(Scalar)> phi, int n_points = 64) {
    KernelSpec spec;
    spec.kind = Kind::Quadrature;
    spec.activation = std::move(phi);
    spec.n_points = n_points;
    spec.rule = std::make_shared<const GaussHermiteRule<Scalar>>(gauss_hermite_rule<Scalar>(n_points));
    return spec;
  }

  std::string name() const {
    return kind == Kind::AnalyticErf ? "erf" : "quadrature(" + std::to_string(n_points) + ")";
  }
};

/// Partial derivatives of C_{gd} with respect to K_{gd} (cross) and the two
/// variances K_{gg} (first) and K_{dd} (second).
template <typename Scalar>
struct PairDerivatives {
  Scalar cross = 0;
  Scalar first = 0;
  Scalar second = 0;
};

namespace detail {

template <typename Scalar>
constexpr Scalar kArgTolerance = Scalar(1e-12);

template <typename Scalar>
Scalar clamp_unit(Scalar x) {
  if (!(std::abs(x) <= Scalar(1) + kArgTolerance<Scalar>))
    throw Error(ErrorCode::NonPsdInput, "covariance is not positive semidefinite (|correlation| > 1)");
  return std::clamp(x, Scalar(-1), Scalar(1));
}

template <typename Scalar>
void check_variance(Scalar k) {
  // 1 + (pi/2) k must stay positive for the closed form; quadrature needs k >= 0.
  if (!(k >= -Scalar(1e-10))) throw Error(ErrorCode::NonPsdInput, "negative variance in covariance");
}

template <typename Scalar>
Scalar quad_pair(Scalar k_gg, Scalar k_dd, Scalar k_gd, const KernelSpec<Scalar>& spec) {
  const auto& rule = *spec.rule;
  const Scalar a = std::max(k_gg, Scalar(0));
  const Scalar b = std::max(k_dd, Scalar(0));
  const Scalar l11 = std::sqrt(a);
  const Scalar l21 = l11 > 0 ? k_gd / l11 : Scalar(0);
  const Scalar l22 = std::sqrt(std::max(b - l21 * l21, Scalar(0)));
  const Scalar root2 = std::sqrt(Scalar(2));
  Scalar total = 0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    const Scalar xi = rule.nodes(i);
    const Scalar outer = spec.activation(root2 * l11 * xi);
    Scalar inner = 0;
    for (Eigen::Index j = 0; j < rule.nodes.size(); ++j)
      inner += rule.weights(j) * spec.activation(root2 * (l21 * xi + l22 * rule.nodes(j)));
    total += rule.weights(i) * outer * inner;
  }
  return total / std::numbers::pi_v<Scalar>;
}

template <typename Scalar>
Scalar quad_self(Scalar k, const KernelSpec<Scalar>& spec) {
  const auto& rule = *spec.rule;
  const Scalar scale = std::sqrt(Scalar(2) * std::max(k, Scalar(0)));
  Scalar total = 0;
  for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
    const Scalar v = spec.activation(scale * rule.nodes(i));
    total += rule.weights(i) * v * v;
  }
  return total / std::sqrt(std::numbers::pi_v<Scalar>);
}

template <typename Scalar>
void check_pair(Scalar k_gg, Scalar k_dd, Scalar k_gd) {
  check_variance(k_gg);
  check_variance(k_dd);
  const Scalar bound = std::sqrt(std::max(k_gg, Scalar(0)) * std::max(k_dd, Scalar(0)));
  if (std::abs(k_gd) > bound * (Scalar(1) + kArgTolerance<Scalar>) + kArgTolerance<Scalar>)
    throw Error(ErrorCode::NonPsdInput, "covariance is not positive semidefinite (|correlation| > 1)");
}

// Elementwise arcsin arguments u K_ab / sqrt((1 + u K_aa)(1 + u K_bb)), exactly symmetric and clamped.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> correlation_arguments(const Eigen::MatrixBase<Derived>& K,
                                                                          const VectorX<Scalar>& inv_sd) {
  constexpr Scalar u = std::numbers::pi_v<Scalar> / 2;
  const Eigen::Index n = K.rows();
  Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> x(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i <= j; ++i) x(i, j) = x(j, i) = u * K(i, j) * inv_sd(i) * inv_sd(j);
  if (!(x.abs().maxCoeff() <= Scalar(1) + kArgTolerance<Scalar>))
    throw Error(ErrorCode::NonPsdInput, "covariance is not positive semidefinite (|correlation| > 1)");
  return x.max(Scalar(-1)).min(Scalar(1));
}

template <typename Scalar>
Scalar fd_step(Scalar at) {
  return Scalar(1e-5) * std::max(Scalar(1), std::abs(at));
}

}  // namespace detail

/// C_{gd} for a pair of distinct nodes with variances k_gg, k_dd and covariance k_gd.
template <typename Scalar>
Scalar pair_expectation(Scalar k_gg, Scalar k_dd, Scalar k_gd, const KernelSpec<Scalar>& spec) {
  if (spec.kind == KernelSpec<Scalar>::Kind::AnalyticErf) {
    detail::check_variance(k_gg);
    detail::check_variance(k_dd);
    constexpr Scalar u = std::numbers::pi_v<Scalar> / 2;
    const Scalar x = u * k_gd / std::sqrt((1 + u * k_gg) * (1 + u * k_dd));
    return std::asin(detail::clamp_unit(x)) / u;
  }
  detail::check_pair(k_gg, k_dd, k_gd);
  return detail::quad_pair(k_gg, k_dd, k_gd, spec);
}

/// C_{gg} = <phi(h)^2> for a single node with variance k.
template <typename Scalar>
Scalar self_expectation(Scalar k, const KernelSpec<Scalar>& spec) {
  detail::check_variance(k);
  if (spec.kind == KernelSpec<Scalar>::Kind::AnalyticErf) {
    constexpr Scalar u = std::numbers::pi_v<Scalar> / 2;
    return std::asin(u * k / (1 + u * k)) / u;
  }
  return detail::quad_self(k, spec);
}

template <typename Scalar>
PairDerivatives<Scalar> pair_expectation_derivatives(Scalar k_gg, Scalar k_dd, Scalar k_gd,
                                                     const KernelSpec<Scalar>& spec) {
  PairDerivatives<Scalar> d;
  if (spec.kind == KernelSpec<Scalar>::Kind::AnalyticErf) {
    detail::check_variance(k_gg);
    detail::check_variance(k_dd);
    constexpr Scalar u = std::numbers::pi_v<Scalar> / 2;
    const Scalar a = 1 + u * k_gg;
    const Scalar b = 1 + u * k_dd;
    const Scalar x = detail::clamp_unit(u * k_gd / std::sqrt(a * b));
    const Scalar outer = 1 / (u * std::sqrt(1 - x * x));
    d.cross = outer * u / std::sqrt(a * b);
    d.first = -outer * x * u / (2 * a);
    d.second = -outer * x * u / (2 * b);
    return d;
  }
  detail::check_pair(k_gg, k_dd, k_gd);
  auto c = [&](Scalar a, Scalar b, Scalar s) { return detail::quad_pair(a, b, s, spec); };
  const Scalar hs = detail::fd_step(k_gd), ha = detail::fd_step(k_gg), hb = detail::fd_step(k_dd);
  d.cross = (c(k_gg, k_dd, k_gd + hs) - c(k_gg, k_dd, k_gd - hs)) / (2 * hs);
  d.first = (c(k_gg + ha, k_dd, k_gd) - c(k_gg - ha, k_dd, k_gd)) / (2 * ha);
  d.second = (c(k_gg, k_dd + hb, k_gd) - c(k_gg, k_dd - hb, k_gd)) / (2 * hb);
  return d;
}

template <typename Scalar>
Scalar self_expectation_derivative(Scalar k, const KernelSpec<Scalar>& spec) {
  detail::check_variance(k);
  if (spec.kind == KernelSpec<Scalar>::Kind::AnalyticErf) {
    constexpr Scalar u = std::numbers::pi_v<Scalar> / 2;
    const Scalar x = u * k / (1 + u * k);
    return 1 / (std::sqrt(1 - x * x) * (1 + u * k) * (1 + u * k));
  }
  const Scalar h = detail::fd_step(k);
  return (detail::quad_self(k + h, spec) - detail::quad_self(k - h, spec)) / (2 * h);
}

/// C_{gd} evaluated from the covariance matrix K.
template <typename Derived>
typename Derived::Scalar c_value(const Eigen::MatrixBase<Derived>& K, Eigen::Index g, Eigen::Index d,
                                 const KernelSpec<typename Derived::Scalar>& spec) {
  if (g == d) return self_expectation(K(g, g), spec);
  return pair_expectation(K(g, g), K(d, d), K(g, d), spec);
}

/// dC_{tp} / dK_{gd}, with {g, d} an unordered pair: K_{gd} and K_{dg} move together.
template <typename Derived>
typename Derived::Scalar c_derivative(const Eigen::MatrixBase<Derived>& K, Eigen::Index t, Eigen::Index p,
                                      Eigen::Index g, Eigen::Index d,
                                      const KernelSpec<typename Derived::Scalar>& spec) {
  using Scalar = typename Derived::Scalar;
  if (g > d) std::swap(g, d);
  if (t > p) std::swap(t, p);
  if (t == p) return (g == t && d == t) ? self_expectation_derivative(K(t, t), spec) : Scalar(0);
  if (g == t && d == p) return pair_expectation_derivatives(K(t, t), K(p, p), K(t, p), spec).cross;
  if (g == d && g == t) return pair_expectation_derivatives(K(t, t), K(p, p), K(t, p), spec).first;
  if (g == d && g == p) return pair_expectation_derivatives(K(t, t), K(p, p), K(t, p), spec).second;
  return Scalar(0);
}

/// Elementwise C(K).
template <typename Derived>
MatrixX<typename Derived::Scalar> kernel_matrix(const Eigen::MatrixBase<Derived>& K,
                                                const KernelSpec<typename Derived::Scalar>& spec) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = K.rows();
  if (K.cols() != n) throw Error(ErrorCode::DimensionMismatch, "covariance must be square");
  if (spec.kind == KernelSpec<Scalar>::Kind::AnalyticErf) {
    constexpr Scalar u = std::numbers::pi_v<Scalar> / 2;
    for (Eigen::Index i = 0; i < n; ++i) detail::check_variance(K(i, i));
    const VectorX<Scalar> inv_sd = (Scalar(1) + u * K.diagonal().array()).rsqrt().matrix();
    const auto x = detail::correlation_arguments(K, inv_sd);
    return (x.asin() / u).matrix();
  }
  MatrixX<Scalar> C(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    C(i, i) = self_expectation(K(i, i), spec);
    for (Eigen::Index j = i + 1; j < n; ++j) C(i, j) = C(j, i) = pair_expectation(K(i, i), K(j, j), K(i, j), spec);
  }
  return C;
}

/// First-order response of C(K). For a symmetric perturbation D with diagonal d:
///   dC = cross .* D + diag(d) * first + (diag(d) * first)^T.
/// cross(i, i) holds dC_ii/dK_ii; first(i, j) = dC_ij/dK_ii for i != j, zero on the diagonal.
template <typename Scalar>
struct KernelJacobian {
  MatrixX<Scalar> cross;
  MatrixX<Scalar> first;

  template <typename Derived>
  MatrixX<Scalar> apply(const Eigen::MatrixBase<Derived>& delta) const {
    const VectorX<Scalar> d = delta.diagonal();
    MatrixX<Scalar> row_part = d.asDiagonal() * first;
    MatrixX<Scalar> out = cross.cwiseProduct(delta.derived());
    out += row_part;
    out += row_part.transpose();
    return out;
  }
};

template <typename Derived>
KernelJacobian<typename Derived::Scalar> kernel_jacobian(const Eigen::MatrixBase<Derived>& K,
                                                         const KernelSpec<typename Derived::Scalar>& spec) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = K.rows();
  KernelJacobian<Scalar> jac;
  if (spec.kind == KernelSpec<Scalar>::Kind::AnalyticErf) {
    constexpr Scalar u = std::numbers::pi_v<Scalar> / 2;
    for (Eigen::Index i = 0; i < n; ++i) detail::check_variance(K(i, i));
    const VectorX<Scalar> inv_sd = (Scalar(1) + u * K.diagonal().array()).rsqrt().matrix();
    const auto x = detail::correlation_arguments(K, inv_sd);
    const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> outer = (Scalar(1) - x.square()).rsqrt() / u;
    const VectorX<Scalar> inv_var = inv_sd.array().square().matrix();  // 1 / (1 + u K_ii)
    jac.cross = u * (outer * (inv_sd * inv_sd.transpose()).array()).matrix();
    jac.first = (-u / 2) * (inv_var.asDiagonal() * (outer * x).matrix());
    for (Eigen::Index i = 0; i < n; ++i) {
      jac.cross(i, i) = outer(i, i) * u * inv_var(i) * inv_var(i);
      jac.first(i, i) = 0;
    }
    return jac;
  }
  jac.cross.resize(n, n);
  jac.first = MatrixX<Scalar>::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    jac.cross(i, i) = self_expectation_derivative(K(i, i), spec);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto d = pair_expectation_derivatives(K(i, i), K(j, j), K(i, j), spec);
      jac.cross(i, j) = jac.cross(j, i) = d.cross;
      jac.first(i, j) = d.first;
      jac.first(j, i) = d.second;
    }
  }
  return jac;
}

}  // namespace gcngp

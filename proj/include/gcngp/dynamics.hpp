#pragma once

// Layer-to-layer covariance recursion of the infinite-width GCN and
// feature-distance observables.

#include "gcngp/graph.hpp"
#include "gcngp/kernel.hpp"

#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

namespace gcngp {

template <typename Scalar = double>
struct GpHyper {
  Scalar sigma_w2 = 1;
  Scalar sigma_b2 = 0;
  Scalar sigma_ro = Scalar(0.01);
  KernelSpec<Scalar> kernel = KernelSpec<Scalar>::analytic_erf();

  void validate() const {
    if (!(sigma_w2 >= 0) || !std::isfinite(double(sigma_w2)))
      throw Error(ErrorCode::InvalidArgument, "sigma_w2 must be a finite nonnegative number");
    if (!(sigma_b2 >= 0) || !std::isfinite(double(sigma_b2)))
      throw Error(ErrorCode::InvalidArgument, "sigma_b2 must be a finite nonnegative number");
    if (!(sigma_ro >= 0)) throw Error(ErrorCode::InvalidArgument, "sigma_ro must be nonnegative");
  }
};

template <typename Scalar = double>
struct GpState {
  int layer = 0;
  MatrixX<Scalar> K;
};

/// sigma_b2 11^T + sigma_w2 A C(K) A^T, symmetrized.
template <typename Scalar, typename DerivedK, typename DerivedA>
MatrixX<Scalar> covariance_step(const Eigen::MatrixBase<DerivedK>& K, const Eigen::MatrixBase<DerivedA>& A,
                                const GpHyper<Scalar>& hyper) {
  if (K.rows() != A.rows() || K.cols() != A.cols())
    throw Error(ErrorCode::DimensionMismatch, "covariance and shift operator sizes differ");
  const MatrixX<Scalar> C = kernel_matrix(K, hyper.kernel);
  const MatrixX<Scalar> AC = A * C;
  MatrixX<Scalar> out = AC * A.transpose();
  out = Scalar(0.5) * (out + out.transpose()).eval();
  out *= hyper.sigma_w2;
  out.array() += hyper.sigma_b2;
  return out;
}

template <typename Scalar>
GpState<Scalar> step(const GpState<Scalar>& state, const ShiftOperator<Scalar>& A, const GpHyper<Scalar>& hyper) {
  return GpState<Scalar>{state.layer + 1, covariance_step(state.K, A.matrix, hyper)};
}

/// Layer-1 preactivation covariance sigma_b2 + sigma_w2 A (X X^T / d0) A^T.
template <typename Scalar, typename Derived>
GpState<Scalar> input_covariance(const Eigen::MatrixBase<Derived>& features, const ShiftOperator<Scalar>& A,
                                 const GpHyper<Scalar>& hyper) {
  if (features.rows() != A.size())
    throw Error(ErrorCode::DimensionMismatch, "feature rows must match the number of nodes");
  if (features.cols() < 1) throw Error(ErrorCode::DimensionMismatch, "features need at least one column");
  const MatrixX<Scalar> X = features.template cast<Scalar>();
  const MatrixX<Scalar> AX = A.matrix * X;
  MatrixX<Scalar> K = (AX * AX.transpose()) * (hyper.sigma_w2 / Scalar(X.cols()));
  K = Scalar(0.5) * (K + K.transpose()).eval();
  K.array() += hyper.sigma_b2;
  return GpState<Scalar>{1, std::move(K)};
}

/// Applies n_layers steps; the observer (if any) sees every intermediate state, including the first.
template <typename Scalar>
GpState<Scalar> iterate(GpState<Scalar> state, const ShiftOperator<Scalar>& A, const GpHyper<Scalar>& hyper,
                        int n_layers, const std::function<void(const GpState<Scalar>&)>& observer = {}) {
  if (observer) observer(state);
  for (int l = 0; l < n_layers; ++l) {
    state = step(state, A, hyper);
    if (observer) observer(state);
  }
  return state;
}

template <typename Scalar>
struct Equilibrium {
  MatrixX<Scalar> K;
  int layers_used = 0;
  Scalar residual = 0;
};

/// Iterates until the max-norm change drops below tol. Throws NotConverged otherwise.
template <typename Scalar>
Equilibrium<Scalar> find_equilibrium(const ShiftOperator<Scalar>& A, const GpHyper<Scalar>& hyper,
                                     const MatrixX<Scalar>& K0, int max_layers = 4000, Scalar tol = Scalar(1e-12)) {
  if (max_layers < 1) throw Error(ErrorCode::InvalidArgument, "max_layers must be at least 1");
  MatrixX<Scalar> K = K0;
  Scalar residual = std::numeric_limits<Scalar>::infinity();
  for (int l = 1; l <= max_layers; ++l) {
    MatrixX<Scalar> next = covariance_step(K, A.matrix, hyper);
    residual = (next - K).cwiseAbs().maxCoeff();
    K = std::move(next);
    if (residual < tol) return Equilibrium<Scalar>{std::move(K), l, residual};
  }
  throw NotConverged(double(residual), max_layers,
                     "covariance recursion did not converge within " + std::to_string(max_layers) + " layers");
}

template <typename Scalar = double>
struct DistanceReport {
  MatrixX<Scalar> pairwise;
  Scalar mu = 0;
  Scalar min_offdiag = 0;
  Scalar max_offdiag = 0;
};

namespace detail {

template <typename Scalar>
void summarize_distances(DistanceReport<Scalar>& report) {
  const Eigen::Index n = report.pairwise.rows();
  if (n < 2) return;
  Scalar sum = 0;
  Scalar lo = std::numeric_limits<Scalar>::infinity(), hi = -lo;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const Scalar d = report.pairwise(a, b);
      sum += d;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  report.mu = sum / (Scalar(2) * Scalar(n) * Scalar(n - 1));
  report.min_offdiag = lo;
  report.max_offdiag = hi;
}

}  // namespace detail

/// Distances C_aa + C_bb - 2 C_ab from a (normalized) Gram matrix.
template <typename Derived>
DistanceReport<typename Derived::Scalar> distance_report_from_gram(const Eigen::MatrixBase<Derived>& C) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = C.rows();
  DistanceReport<Scalar> report;
  report.pairwise = MatrixX<Scalar>::Zero(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b)
      report.pairwise(a, b) = report.pairwise(b, a) = C(a, a) + C(b, b) - 2 * C(a, b);
  detail::summarize_distances(report);
  return report;
}

/// GP mode: distances of the post-activation kernel C(K).
template <typename Derived>
DistanceReport<typename Derived::Scalar> gp_distance_report(const Eigen::MatrixBase<Derived>& K,
                                                            const KernelSpec<typename Derived::Scalar>& kernel) {
  return distance_report_from_gram(kernel_matrix(K, kernel));
}

/// Empirical mode: rows are node features, d = |x_a - x_b|^2 / width.
template <typename Derived>
DistanceReport<typename Derived::Scalar> feature_distance_report(const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = X.rows();
  DistanceReport<Scalar> report;
  report.pairwise = MatrixX<Scalar>::Zero(n, n);
  const Scalar width = Scalar(std::max<Eigen::Index>(1, X.cols()));
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b)
      report.pairwise(a, b) = report.pairwise(b, a) = (X.row(a) - X.row(b)).squaredNorm() / width;
  detail::summarize_distances(report);
  return report;
}

struct TrajectoryRow {
  int layer = 0;
  double mu = 0;
  double min_offdiag_distance = 0;
  double max_offdiag_distance = 0;
};

/// Distance summary at layers first.layer .. first.layer + n_layers.
template <typename Scalar>
std::vector<TrajectoryRow> gp_trajectory(const GpState<Scalar>& first, const ShiftOperator<Scalar>& A,
                                         const GpHyper<Scalar>& hyper, int n_layers) {
  std::vector<TrajectoryRow> rows;
  rows.reserve(n_layers + 1);
  iterate<Scalar>(first, A, hyper, n_layers, [&](const GpState<Scalar>& s) {
    const auto r = gp_distance_report(s.K, hyper.kernel);
    rows.push_back({s.layer, double(r.mu), double(r.min_offdiag), double(r.max_offdiag)});
  });
  return rows;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectoryRow>& rows);

}  // namespace gcngp

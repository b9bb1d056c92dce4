#pragma once

// Linearization of the covariance recursion around a fixed point, acting on
// symmetric perturbations stored in the upper-triangular "pair space".

#include "gcngp/dynamics.hpp"

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace gcngp {

/// Bijection {(a, b): a <= b} <-> [0, n(n+1)/2), row-major over the upper triangle.
class PairIndex {
 public:
  explicit PairIndex(Eigen::Index n_nodes) : n_(n_nodes) {
    pairs_.reserve(size());
    for (Eigen::Index a = 0; a < n_; ++a)
      for (Eigen::Index b = a; b < n_; ++b) pairs_.emplace_back(a, b);
  }

  Eigen::Index n_nodes() const { return n_; }
  Eigen::Index size() const { return n_ * (n_ + 1) / 2; }

  Eigen::Index operator()(Eigen::Index a, Eigen::Index b) const {
    if (a > b) std::swap(a, b);
    return a * n_ - a * (a - 1) / 2 + (b - a);
  }
  std::pair<Eigen::Index, Eigen::Index> pair(Eigen::Index idx) const { return pairs_[idx]; }

 private:
  Eigen::Index n_;
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs_;
};

template <typename Derived>
VectorX<typename Derived::Scalar> to_pair_vector(const Eigen::MatrixBase<Derived>& M) {
  const Eigen::Index n = M.rows();
  VectorX<typename Derived::Scalar> v(n * (n + 1) / 2);
  Eigen::Index idx = 0;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) v(idx++) = M(a, b);
  return v;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> from_pair_vector(const Eigen::MatrixBase<Derived>& v, Eigen::Index n) {
  if (v.size() != n * (n + 1) / 2) throw Error(ErrorCode::DimensionMismatch, "pair vector has wrong length");
  MatrixX<typename Derived::Scalar> M(n, n);
  Eigen::Index idx = 0;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a; b < n; ++b) {
      M(a, b) = M(b, a) = v(idx++);
    }
  return M;
}

/// Matrix-free H: Delta -> sigma_w2 A dC[Delta] A^T. The column of H for an
/// off-diagonal pair is the response to moving K_ab and K_ba together.
template <typename Scalar = double>
struct LinearizedOperator {
  MatrixX<Scalar> A;
  Scalar sigma_w2 = 0;
  KernelJacobian<Scalar> jacobian;

  Eigen::Index n_nodes() const { return A.rows(); }
  Eigen::Index pair_size() const { return n_nodes() * (n_nodes() + 1) / 2; }

  template <typename Derived>
  MatrixX<Scalar> apply(const Eigen::MatrixBase<Derived>& delta) const {
    const MatrixX<Scalar> dC = jacobian.apply(delta);
    const MatrixX<Scalar> AdC = A * dC;
    return sigma_w2 * (AdC * A.transpose());
  }

  VectorX<Scalar> apply_pair(const VectorX<Scalar>& v) const {
    return to_pair_vector(apply(from_pair_vector(v, n_nodes())));
  }

  /// Dense M x M matrix; each column is a rank-two update, O(M N^2) total.
  MatrixX<Scalar> dense() const {
    const Eigen::Index n = n_nodes();
    const PairIndex index(n);
    const Eigen::Index m = index.size();
    MatrixX<Scalar> H(m, m);
    VectorX<Scalar> w(n), r(n);
    for (Eigen::Index col = 0; col < m; ++col) {
      const auto [g, d] = index.pair(col);
      if (g == d) {
        r = jacobian.first.row(g).transpose();
        r(g) += jacobian.cross(g, g) / 2;
        w = A * r;
        for (Eigen::Index row = 0; row < m; ++row) {
          const auto [a, b] = index.pair(row);
          H(row, col) = sigma_w2 * (A(a, g) * w(b) + w(a) * A(b, g));
        }
      } else {
        const Scalar c = sigma_w2 * jacobian.cross(g, d);
        for (Eigen::Index row = 0; row < m; ++row) {
          const auto [a, b] = index.pair(row);
          H(row, col) = c * (A(a, g) * A(b, d) + A(a, d) * A(b, g));
        }
      }
    }
    return H;
  }
};

template <typename Scalar, typename Derived>
LinearizedOperator<Scalar> linearize(const ShiftOperator<Scalar>& A, const GpHyper<Scalar>& hyper,
                                     const Eigen::MatrixBase<Derived>& K) {
  if (K.rows() != A.size()) throw Error(ErrorCode::DimensionMismatch, "fixed point and shift operator sizes differ");
  return LinearizedOperator<Scalar>{A.matrix, hyper.sigma_w2, kernel_jacobian(K, hyper.kernel)};
}

/// -1 / ln|lambda|; infinite for |lambda| >= 1, zero for lambda = 0.
double propagation_depth(double abs_lambda);

struct LinearizedMap {
  Eigen::MatrixXd H;
  Eigen::MatrixXd fixed_point;
  Eigen::VectorXcd eigenvalues;   // sorted by decreasing modulus
  Eigen::MatrixXcd eigenvectors;  // columns match eigenvalues
  Eigen::VectorXd depths;

  double spectral_radius() const { return eigenvalues.size() ? std::abs(eigenvalues(0)) : 0.0; }
};

/// Throws NotAFixedPoint if step(fixed_point) differs from fixed_point by more than 1e-8.
LinearizedMap build_linearized_map(const ShiftOperator<double>& A, const GpHyper<double>& hyper,
                                   const Eigen::MatrixXd& fixed_point);

/// Largest nonnegative k with k = sigma_b2 + sigma_w2 C(k).
double zero_distance_variance(const GpHyper<double>& hyper);
Eigen::MatrixXd zero_distance_fixed_point(const ShiftOperator<double>& A, const GpHyper<double>& hyper);

struct SpectralOptions {
  Eigen::Index dense_limit = 5000;  // pair-space size up to which the dense solver is used
  int krylov_dim = 40;
  int max_restarts = 500;
  double rel_tol = 1e-12;
  std::uint64_t seed = 0x5eed;
};

/// Dense nonsymmetric solve for small pair spaces, restarted Arnoldi otherwise.
double spectral_radius(const LinearizedOperator<double>& op, const SpectralOptions& options = {});

struct ChaosIndicator {
  double rho_p = 0;
  bool is_chaotic = false;
  double k_star = 0;
};

/// Spectral radius of H at the zero-distance fixed point. A single node is
/// analysed as two uncoupled copies so that distances are defined.
ChaosIndicator chaos_indicator(const ShiftOperator<double>& A, const GpHyper<double>& hyper,
                               const SpectralOptions& options = {});

struct Bracket {
  double lo = 0.1;
  double hi = 20.0;
};

double critical_sigma(const ShiftOperator<double>& A, double sigma_b2, const KernelSpec<double>& kernel,
                      Bracket bracket = {}, double tol = 1e-4, const SpectralOptions& options = {});

struct ProbeOptions {
  int max_layers = 100000;
  double threshold = 1e-5;
  double initial_mu = 1e-7;
  std::uint64_t seed = 0x9e0be;
};

struct ProbeResult {
  bool is_chaotic = false;
  int layers = 0;
  double final_mu = 0;
};

/// Runs the recursion from a slightly perturbed zero-distance state. Chaotic once
/// mu exceeds the threshold; regular once mu has shrunk by 1e4. If the budget
/// runs out first, the sign of the late-time trend decides.
ProbeResult equilibrium_probe(const ShiftOperator<double>& A, const GpHyper<double>& hyper,
                              const ProbeOptions& options = {});

double critical_sigma_by_probe(const ShiftOperator<double>& A, double sigma_b2, const KernelSpec<double>& kernel,
                               Bracket bracket = {}, double tol = 1e-4, const ProbeOptions& options = {});

struct RhoScanPoint {
  double sigma_w2 = 0;
  double rho_p = 0;
};

std::vector<RhoScanPoint> rho_scan(const ShiftOperator<double>& A, double sigma_b2, const KernelSpec<double>& kernel,
                                   const std::vector<double>& grid, const SpectralOptions& options = {});

/// Indices i where rho_p drops between grid[i-1] and grid[i] by more than slack.
std::vector<std::size_t> monotonicity_violations(const std::vector<RhoScanPoint>& scan, double slack = 1e-9);

/// Mode overlaps U^(i) . Delta; throws DefectiveSpectrum when the eigenbasis is ill conditioned.
Eigen::VectorXcd decompose_perturbation(const LinearizedMap& map, const Eigen::MatrixXd& delta);

/// Columns: index, re, im, abs, xi.
void write_spectrum_csv(std::ostream& out, const LinearizedMap& map);

}  // namespace gcngp

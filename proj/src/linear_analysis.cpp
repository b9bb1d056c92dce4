#include "gcngp/linear_analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>

#include "gcngp/csv.hpp"

namespace gcngp {

double propagation_depth(double abs_lambda) {
  if (abs_lambda >= 1.0) return std::numeric_limits<double>::infinity();
  if (abs_lambda <= 0.0) return 0.0;
  return -1.0 / std::log(abs_lambda);
}

LinearizedMap build_linearized_map(const ShiftOperator<double>& A, const GpHyper<double>& hyper,
                                   const Eigen::MatrixXd& fixed_point) {
  const Eigen::MatrixXd next = covariance_step(fixed_point, A.matrix, hyper);
  const double scale = std::max(1.0, fixed_point.cwiseAbs().maxCoeff());
  const double residual = (next - fixed_point).cwiseAbs().maxCoeff();
  if (!(residual <= 1e-8 * scale))
    throw Error(ErrorCode::NotAFixedPoint,
                "state is not a fixed point of the recursion (residual " + format_double(residual) + ")");

  LinearizedMap map;
  map.fixed_point = fixed_point;
  map.H = linearize(A, hyper, fixed_point).dense();

  Eigen::EigenSolver<Eigen::MatrixXd> solver(map.H, true);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "eigen-decomposition of H failed");
  const Eigen::VectorXcd values = solver.eigenvalues();
  const Eigen::MatrixXcd vectors = solver.eigenvectors();

  std::vector<Eigen::Index> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return std::abs(values(a)) > std::abs(values(b)); });
  map.eigenvalues.resize(values.size());
  map.eigenvectors.resize(vectors.rows(), vectors.cols());
  map.depths.resize(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    map.eigenvalues(i) = values(order[i]);
    map.eigenvectors.col(i) = vectors.col(order[i]);
    map.depths(i) = propagation_depth(std::abs(values(order[i])));
  }
  return map;
}

double zero_distance_variance(const GpHyper<double>& hyper) {
  hyper.validate();
  if (hyper.sigma_w2 == 0.0) return hyper.sigma_b2;
  auto f = [&](double k) { return hyper.sigma_b2 + hyper.sigma_w2 * self_expectation(k, hyper.kernel) - k; };
  // Without bias the origin is a root; it is the largest one when the map is not expanding there.
  if (hyper.sigma_b2 == 0.0 && hyper.sigma_w2 * self_expectation_derivative(0.0, hyper.kernel) <= 1.0) return 0.0;

  double hi = std::max(1.0, hyper.sigma_b2 + hyper.sigma_w2);
  for (int i = 0; f(hi) >= 0.0; ++i) {
    if (i > 200) throw Error(ErrorCode::NoConvergence, "no upper bound for the zero-distance variance");
    hi *= 2.0;
  }
  // Walk down from hi until f turns positive; the largest root lies in (lo, 2 lo].
  double lo = hi;
  for (;;) {
    const double below = lo * 0.5;
    if (below < 1e-150) {
      if (hyper.sigma_b2 > 0.0) throw Error(ErrorCode::NoConvergence, "zero-distance variance search failed");
      return 0.0;
    }
    const double value = f(below);
    if (value == 0.0) return below;
    if (value > 0.0) {
      hi = lo;
      lo = below;
      break;
    }
    lo = below;
  }
  for (int i = 0; i < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Eigen::MatrixXd zero_distance_fixed_point(const ShiftOperator<double>& A, const GpHyper<double>& hyper) {
  return Eigen::MatrixXd::Constant(A.size(), A.size(), zero_distance_variance(hyper));
}

namespace {

double arnoldi_spectral_radius(const LinearizedOperator<double>& op, const SpectralOptions& options) {
  const Eigen::Index m_size = op.pair_size();
  const int dim = static_cast<int>(std::min<Eigen::Index>(options.krylov_dim, m_size));

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd start(m_size);
  for (Eigen::Index i = 0; i < m_size; ++i) start(i) = normal(rng);
  start.normalize();

  double previous = std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd V(m_size, dim + 1);
  Eigen::MatrixXd Hh(dim + 1, dim);
  for (int restart = 0; restart < options.max_restarts; ++restart) {
    V.col(0) = start;
    Hh.setZero();
    int used = dim;
    bool invariant = false;
    for (int j = 0; j < dim; ++j) {
      Eigen::VectorXd w = op.apply_pair(V.col(j));
      const double w_norm = w.norm();
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) {
          const double h = V.col(i).dot(w);
          Hh(i, j) += h;
          w -= h * V.col(i);
        }
      const double beta = w.norm();
      Hh(j + 1, j) = beta;
      if (beta <= 1e-13 * std::max(w_norm, 1e-300)) {
        used = j + 1;
        invariant = true;
        break;
      }
      V.col(j + 1) = w / beta;
    }

    Eigen::EigenSolver<Eigen::MatrixXd> ritz(Hh.topLeftCorner(used, used), true);
    const Eigen::VectorXcd values = ritz.eigenvalues();
    Eigen::Index best = 0;
    values.cwiseAbs().maxCoeff(&best);
    const double rho = std::abs(values(best));
    if (invariant) return rho;

    Eigen::VectorXcd y = ritz.eigenvectors().col(best);
    y /= y.norm();
    const double residual = std::abs(Hh(used, used - 1) * y(used - 1));
    if (residual <= 1e-10 * std::max(rho, 1e-300) ||
        (std::isfinite(previous) && std::abs(rho - previous) <= options.rel_tol * rho))
      return rho;
    previous = rho;

    start = V.leftCols(used) * (y.real() + y.imag());
    const double norm = start.norm();
    if (!(norm > 0.0)) return rho;
    start /= norm;
  }
  throw Error(ErrorCode::NoConvergence, "Arnoldi iteration for the spectral radius did not converge");
}

// A lone node has no pairs; two uncoupled copies give the usual two-input analysis.
ShiftOperator<double> lift_single_node(const ShiftOperator<double>& A) {
  if (A.size() != 1) return A;
  return ShiftOperator<double>{A.matrix(0, 0) * Eigen::MatrixXd::Identity(2, 2), A.g, {}};
}

template <typename Predicate>
double bisect_transition(Bracket bracket, double tol, Predicate&& is_chaotic) {
  if (!(bracket.lo < bracket.hi) || !(tol > 0.0))
    throw Error(ErrorCode::InvalidArgument, "bracket must satisfy lo < hi and tol > 0");
  if (is_chaotic(bracket.lo))
    throw Error(ErrorCode::InvalidBracket,
                "lower end of the bracket is already chaotic; decrease lo (sigma_w2 = " + format_double(bracket.lo) + ")");
  if (!is_chaotic(bracket.hi))
    throw Error(ErrorCode::InvalidBracket,
                "upper end of the bracket is still regular; increase hi (sigma_w2 = " + format_double(bracket.hi) + ")");
  double lo = bracket.lo, hi = bracket.hi;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (is_chaotic(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double spectral_radius(const LinearizedOperator<double>& op, const SpectralOptions& options) {
  if (op.pair_size() <= options.dense_limit) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(op.dense(), false);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::NoConvergence, "eigenvalue solve failed");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  return arnoldi_spectral_radius(op, options);
}

ChaosIndicator chaos_indicator(const ShiftOperator<double>& A, const GpHyper<double>& hyper,
                               const SpectralOptions& options) {
  const ShiftOperator<double> lifted = lift_single_node(A);
  ChaosIndicator result;
  result.k_star = zero_distance_variance(hyper);
  const Eigen::MatrixXd K = Eigen::MatrixXd::Constant(lifted.size(), lifted.size(), result.k_star);
  result.rho_p = spectral_radius(linearize(lifted, hyper, K), options);
  result.is_chaotic = result.rho_p > 1.0;
  return result;
}

double critical_sigma(const ShiftOperator<double>& A, double sigma_b2, const KernelSpec<double>& kernel,
                      Bracket bracket, double tol, const SpectralOptions& options) {
  GpHyper<double> hyper;
  hyper.sigma_b2 = sigma_b2;
  hyper.kernel = kernel;
  return bisect_transition(bracket, tol, [&](double s) {
    hyper.sigma_w2 = s;
    return chaos_indicator(A, hyper, options).is_chaotic;
  });
}

ProbeResult equilibrium_probe(const ShiftOperator<double>& A_in, const GpHyper<double>& hyper,
                              const ProbeOptions& options) {
  const ShiftOperator<double> A = lift_single_node(A_in);
  const Eigen::Index n = A.size();
  const double k_star = zero_distance_variance(hyper);

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd G(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) G(i, j) = normal(rng);
  const Eigen::MatrixXd P = G * G.transpose() / double(n);

  auto mu_of = [&](const Eigen::MatrixXd& C) { return distance_report_from_gram(C).mu; };
  const Eigen::MatrixXd base = Eigen::MatrixXd::Constant(n, n, k_star);
  double eps = options.initial_mu;
  for (int i = 0; i < 3; ++i) {
    const double mu = mu_of(kernel_matrix(Eigen::MatrixXd(base + eps * P), hyper.kernel));
    if (!(mu > 0.0)) break;
    eps *= options.initial_mu / mu;
  }

  Eigen::MatrixXd K = base + eps * P;
  const double mu0 = mu_of(kernel_matrix(K, hyper.kernel));
  const int checkpoint = std::max(1, options.max_layers * 3 / 4);
  double mu_checkpoint = mu0;
  ProbeResult result;
  for (int l = 0; l <= options.max_layers; ++l) {
    const Eigen::MatrixXd C = kernel_matrix(K, hyper.kernel);
    const double mu = mu_of(C);
    result.layers = l;
    result.final_mu = mu;
    if (mu > options.threshold) {
      result.is_chaotic = true;
      return result;
    }
    if (mu < mu0 * 1e-4) return result;
    if (l == checkpoint) mu_checkpoint = mu;
    if (l == options.max_layers) break;
    Eigen::MatrixXd next = hyper.sigma_w2 * (A.matrix * C * A.matrix.transpose());
    next = 0.5 * (next + next.transpose()).eval();
    next.array() += hyper.sigma_b2;
    K = std::move(next);
  }
  result.is_chaotic = result.final_mu > mu_checkpoint;
  return result;
}

double critical_sigma_by_probe(const ShiftOperator<double>& A, double sigma_b2, const KernelSpec<double>& kernel,
                               Bracket bracket, double tol, const ProbeOptions& options) {
  GpHyper<double> hyper;
  hyper.sigma_b2 = sigma_b2;
  hyper.kernel = kernel;
  return bisect_transition(bracket, tol, [&](double s) {
    hyper.sigma_w2 = s;
    return equilibrium_probe(A, hyper, options).is_chaotic;
  });
}

std::vector<RhoScanPoint> rho_scan(const ShiftOperator<double>& A, double sigma_b2, const KernelSpec<double>& kernel,
                                   const std::vector<double>& grid, const SpectralOptions& options) {
  GpHyper<double> hyper;
  hyper.sigma_b2 = sigma_b2;
  hyper.kernel = kernel;
  std::vector<RhoScanPoint> out;
  out.reserve(grid.size());
  for (double s : grid) {
    hyper.sigma_w2 = s;
    out.push_back({s, chaos_indicator(A, hyper, options).rho_p});
  }
  return out;
}

std::vector<std::size_t> monotonicity_violations(const std::vector<RhoScanPoint>& scan, double slack) {
  std::vector<std::size_t> bad;
  for (std::size_t i = 1; i < scan.size(); ++i)
    if (scan[i].rho_p < scan[i - 1].rho_p - slack) bad.push_back(i);
  return bad;
}

Eigen::VectorXcd decompose_perturbation(const LinearizedMap& map, const Eigen::MatrixXd& delta) {
  const Eigen::Index n = map.fixed_point.rows();
  if (delta.rows() != n || delta.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "perturbation size does not match the fixed point");
  const Eigen::MatrixXcd& V = map.eigenvectors;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(V);
  const auto& s = svd.singularValues();
  const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12))
    throw Error(ErrorCode::DefectiveSpectrum, "eigenvector matrix is ill conditioned (cond " + format_double(cond) + ")");

  const Eigen::VectorXcd target = to_pair_vector(delta).cast<std::complex<double>>();
  Eigen::VectorXcd overlaps = V.partialPivLu().solve(target);
  const double err = (V * overlaps - target).norm();
  if (!(err <= 1e-8 * std::max(1.0, target.norm())))
    throw Error(ErrorCode::DefectiveSpectrum, "mode reconstruction failed (residual " + format_double(err) + ")");
  return overlaps;
}

void write_spectrum_csv(std::ostream& out, const LinearizedMap& map) {
  CsvWriter csv(out, {"index", "re", "im", "abs", "xi"});
  for (Eigen::Index i = 0; i < map.eigenvalues.size(); ++i) {
    const auto lambda = map.eigenvalues(i);
    csv << static_cast<long long>(i) << lambda.real() << lambda.imag() << std::abs(lambda) << map.depths(i);
    csv.end_row();
  }
}

}  // namespace gcngp

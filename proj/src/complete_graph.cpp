#include "gcngp/complete_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gcngp {

namespace {

constexpr double kTwoOverPi = 2.0 / std::numbers::pi;

// erf self-expectation and its slope, kept local so this module stays an
// independent check on the general machinery.
double erf_self(double k) { return kTwoOverPi * std::asin(k / (kTwoOverPi + k)); }
double erf_self_slope(double k) { return 1.0 / ((1.0 + k / kTwoOverPi) * std::sqrt(1.0 + std::numbers::pi * k)); }

// Largest root of k = sigma_b2 + sigma_w2 C(k). f is concave, so Newton from the
// right converges monotonically.
double scalar_fixed_point(double sigma_w2, double sigma_b2) {
  double k = sigma_b2 + sigma_w2 + 1.0;
  for (int i = 0; i < 500; ++i) {
    const double f = sigma_b2 + sigma_w2 * erf_self(k) - k;
    const double df = sigma_w2 * erf_self_slope(k) - 1.0;
    if (!(df < 0.0)) break;
    const double next = std::max(0.0, k - f / df);
    if (std::abs(next - k) <= 1e-16 * std::max(k, 1e-300)) return next;
    k = next;
  }
  return k;
}

}  // namespace

CompleteGraphReduction reduction_constants(int n_nodes, double g, double sigma_w2, double sigma_b2) {
  if (n_nodes < 2) throw Error(ErrorCode::InvalidArgument, "complete-graph reduction needs N >= 2");
  const double off = g / (n_nodes - 1);
  const double diag = 1.0 - g;  // off + (1 - N g / (N - 1))
  CompleteGraphReduction red;
  red.n_nodes = n_nodes;
  red.g = g;
  red.sigma_w2 = sigma_w2;
  red.sigma_b2 = sigma_b2;
  // Row alpha: sum_gamma A^2, and the remaining mass of (sum_gamma A)^2 = 1.
  red.g_a = sigma_w2 * (diag * diag + (n_nodes - 1) * off * off);
  red.g_c = sigma_w2 * (1.0 - (diag * diag + (n_nodes - 1) * off * off));
  // Rows alpha != beta: sum_gamma A_{alpha gamma} A_{beta gamma}.
  const double overlap = 2.0 * diag * off + (n_nodes - 2) * off * off;
  red.h_a = sigma_w2 * overlap;
  red.h_c = sigma_w2 * (1.0 - overlap);
  return red;
}

std::pair<double, double> reduced_step(double K_a, double K_c, const CompleteGraphReduction& red) {
  const double C_a = erf_self(K_a);
  const double x = std::clamp(K_c / (kTwoOverPi + K_a), -1.0, 1.0);
  const double C_c = kTwoOverPi * std::asin(x);
  return {red.sigma_b2 + red.g_a * C_a + red.g_c * C_c, red.sigma_b2 + red.h_a * C_a + red.h_c * C_c};
}

double reduced_stability_slope(const CompleteGraphReduction& red) {
  const double k = scalar_fixed_point(red.sigma_w2, red.sigma_b2);
  const double x = k / (kTwoOverPi + k);
  return (red.h_c - red.g_c) * kTwoOverPi / std::sqrt(1.0 - x * x) / (kTwoOverPi + k);
}

double analytic_transition(int n_nodes, double g, double sigma_b2, double tol) {
  if (!(g > 0.0 && g < 1.0)) throw Error(ErrorCode::InvalidG, "g must lie in (0, 1)");
  auto excess = [&](double s) { return reduced_stability_slope(reduction_constants(n_nodes, g, s, sigma_b2)) - 1.0; };
  double lo = 0.1, hi = 20.0;
  if (!(excess(lo) < 0.0) || !(excess(hi) > 0.0))
    throw Error(ErrorCode::NoRoot, "no stability transition for sigma_w2 in (0.1, 20)");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace gcngp

#pragma once

// Two-variable reduction of the covariance recursion on the complete graph:
// every diagonal entry equals K_a and every off-diagonal entry equals K_c.

#include "gcngp/dynamics.hpp"

#include <utility>

namespace gcngp {

struct CompleteGraphReduction {
  int n_nodes = 0;
  double g = 0;
  double sigma_w2 = 0;
  double sigma_b2 = 0;
  double g_a = 0;  // weight of C_a in K_a'
  double g_c = 0;  // weight of C_c in K_a'
  double h_a = 0;  // weight of C_a in K_c'
  double h_c = 0;  // weight of C_c in K_c'
};

/// Constants summed directly from A = g/(N-1) 11^T + (1 - N g/(N-1)) I.
CompleteGraphReduction reduction_constants(int n_nodes, double g, double sigma_w2, double sigma_b2 = 0.0);

/// One layer of the reduced recursion with the erf kernel.
std::pair<double, double> reduced_step(double K_a, double K_c, const CompleteGraphReduction& red);

/// Slope of the normalized off-diagonal correlation map at the zero-distance state.
double reduced_stability_slope(const CompleteGraphReduction& red);

/// sigma_w2 at which the zero-distance state loses stability (bisection on (0.1, 20)).
double analytic_transition(int n_nodes, double g, double sigma_b2, double tol = 1e-6);

}  // namespace gcngp

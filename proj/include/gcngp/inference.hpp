#pragma once

// GP regression on node labels using the readout-layer covariance.

#include "gcngp/dynamics.hpp"

#include <cstdint>
#include <vector>

namespace gcngp {

struct SplitLabels {
  std::vector<int> train_nodes;
  std::vector<int> test_nodes;
  Eigen::VectorXd y_train;

  /// Disjoint, covering [0, n_nodes), one label per training node.
  void validate(int n_nodes) const;
};

/// per_class training nodes drawn from each community; everything else is test.
SplitLabels make_balanced_split(const std::vector<int>& communities, int per_class, std::uint64_t seed);

/// Labels of the given nodes as a vector.
Eigen::VectorXd labels_of(const std::vector<int>& communities, const std::vector<int>& nodes);

struct GpPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Conditions on the training block of K_out with readout noise sigma_ro^2 on
/// the training diagonal. Throws SingularSystem above condition number 1e14.
GpPosterior posterior(const Eigen::MatrixXd& K_out, const SplitLabels& split, double sigma_ro);

double mean_squared_error(const Eigen::VectorXd& prediction, const Eigen::VectorXd& target);
double generalization_error(const GpPosterior& post, const Eigen::VectorXd& y_test);

struct DepthError {
  int depth = 0;
  double mse = 0;
};

/// For each depth L (ascending): L - 1 hidden steps from K^(1), one readout
/// step, posterior and test MSE. One pass over the recursion serves all depths.
std::vector<DepthError> depth_error_profile(const ShiftOperator<double>& A, const Eigen::MatrixXd& features,
                                            const SplitLabels& split, const Eigen::VectorXd& y_test,
                                            const GpHyper<double>& hyper, const std::vector<int>& depths);

}  // namespace gcngp

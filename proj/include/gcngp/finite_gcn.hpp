#pragma once

// Finite-width GCN with Gaussian random weights, used as a Monte Carlo check
// on the GP description.

#include "gcngp/graph.hpp"
#include "gcngp/inference.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace gcngp {

/// Weights are regenerated on demand from (seed, layer), so a sample is cheap to
/// copy and its layers never depend on evaluation order.
struct GcnSample {
  std::vector<int> widths;  // d_0 .. d_L
  double sigma_w2 = 1.0;
  double sigma_b2 = 0.0;
  double sigma_ro = 0.01;
  std::uint64_t seed = 0;
  std::function<double(double)> activation = erf_activation<double>;

  int n_layers() const { return static_cast<int>(widths.size()) - 1; }

  /// Layer l in 1..L: W is d_l x d_{l-1} with variance sigma_w2 / d_{l-1}; b has variance sigma_b2.
  void layer_parameters(int layer, Eigen::MatrixXd& W, Eigen::VectorXd& b) const;
  /// Readout row vector (variance sigma_w2 / d_L) and bias.
  void readout_parameters(Eigen::RowVectorXd& w, double& b) const;
};

/// Uniform hidden width: widths = {d0, width, ..., width} with n_layers hidden layers.
GcnSample make_sample(int d0, int width, int n_layers, double sigma_w2, double sigma_b2, std::uint64_t seed);

struct ForwardResult {
  Eigen::MatrixXd last_features;  // X^(L)
  Eigen::VectorXd output;         // y = A X^(L) w^T + b + noise
};

/// Observer receives (layer, X^(layer)) for layers 1..L.
ForwardResult forward(const GcnSample& sample, const ShiftOperator<double>& A, const Eigen::MatrixXd& X0,
                      const std::function<void(int, const Eigen::MatrixXd&)>& observer = {});

struct Readout {
  Eigen::VectorXd weights;
  double bias = 0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& A, const Eigen::MatrixXd& hidden) const;
};

/// Ridge least squares on the aggregated features A X^(L) of the training nodes,
/// with an unpenalized bias.
Readout train_readout(const Eigen::MatrixXd& hidden, const ShiftOperator<double>& A, const SplitLabels& split,
                      double ridge = 1e-4);

}  // namespace gcngp

#include "gcngp/finite_gcn.hpp"

#include <Eigen/Cholesky>

#include <random>

namespace gcngp {

namespace {

void fill_normal(std::mt19937_64& rng, double stddev, double* data, Eigen::Index count) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index i = 0; i < count; ++i) data[i] = normal(rng);
}

}  // namespace

void GcnSample::layer_parameters(int layer, Eigen::MatrixXd& W, Eigen::VectorXd& b) const {
  if (layer < 1 || layer > n_layers()) throw Error(ErrorCode::InvalidArgument, "layer index out of range");
  const int fan_in = widths[layer - 1], fan_out = widths[layer];
  std::mt19937_64 rng(split_seed(seed, static_cast<std::uint64_t>(layer)));
  W.resize(fan_out, fan_in);
  b.resize(fan_out);
  fill_normal(rng, std::sqrt(sigma_w2 / fan_in), W.data(), W.size());
  fill_normal(rng, std::sqrt(sigma_b2), b.data(), b.size());
}

void GcnSample::readout_parameters(Eigen::RowVectorXd& w, double& b) const {
  std::mt19937_64 rng(split_seed(seed, static_cast<std::uint64_t>(n_layers() + 1)));
  w.resize(widths.back());
  fill_normal(rng, std::sqrt(sigma_w2 / widths.back()), w.data(), w.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  b = std::sqrt(sigma_b2) * normal(rng);
}

GcnSample make_sample(int d0, int width, int n_layers, double sigma_w2, double sigma_b2, std::uint64_t seed) {
  if (d0 < 1 || width < 1 || n_layers < 1) throw Error(ErrorCode::InvalidArgument, "widths and depth must be positive");
  GcnSample sample;
  sample.widths.assign(n_layers + 1, width);
  sample.widths[0] = d0;
  sample.sigma_w2 = sigma_w2;
  sample.sigma_b2 = sigma_b2;
  sample.seed = seed;
  return sample;
}

ForwardResult forward(const GcnSample& sample, const ShiftOperator<double>& A, const Eigen::MatrixXd& X0,
                      const std::function<void(int, const Eigen::MatrixXd&)>& observer) {
  if (sample.widths.size() < 2) throw Error(ErrorCode::InvalidArgument, "network needs at least one layer");
  if (X0.rows() != A.size() || X0.cols() != sample.widths[0])
    throw Error(ErrorCode::DimensionMismatch, "input features do not match the graph or the input width");

  Eigen::MatrixXd X = X0;
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  for (int l = 1; l <= sample.n_layers(); ++l) {
    sample.layer_parameters(l, W, b);
    Eigen::MatrixXd H = (A.matrix * X) * W.transpose();
    H.rowwise() += b.transpose();
    X = H.unaryExpr(sample.activation);
    if (observer) observer(l, X);
  }

  Eigen::RowVectorXd w;
  double bias = 0;
  sample.readout_parameters(w, bias);
  ForwardResult result;
  result.output = (A.matrix * X) * w.transpose();
  result.output.array() += bias;
  std::mt19937_64 rng(split_seed(sample.seed, static_cast<std::uint64_t>(sample.n_layers() + 2)));
  std::normal_distribution<double> noise(0.0, sample.sigma_ro);
  if (sample.sigma_ro > 0)
    for (Eigen::Index i = 0; i < result.output.size(); ++i) result.output(i) += noise(rng);
  result.last_features = std::move(X);
  return result;
}

Eigen::VectorXd Readout::predict(const Eigen::MatrixXd& A, const Eigen::MatrixXd& hidden) const {
  Eigen::VectorXd y = (A * hidden) * weights;
  y.array() += bias;
  return y;
}

Readout train_readout(const Eigen::MatrixXd& hidden, const ShiftOperator<double>& A, const SplitLabels& split,
                      double ridge) {
  if (hidden.rows() != A.size()) throw Error(ErrorCode::DimensionMismatch, "hidden features do not match the graph");
  split.validate(static_cast<int>(A.size()));
  if (!hidden.allFinite()) throw Error(ErrorCode::InvalidArgument, "hidden features are not finite");
  if (split.train_nodes.empty()) throw Error(ErrorCode::InvalidArgument, "no training nodes");

  const Eigen::MatrixXd F = (A.matrix * hidden)(split.train_nodes, Eigen::all);
  const Eigen::RowVectorXd f_mean = F.colwise().mean();
  const double y_mean = split.y_train.mean();
  const Eigen::MatrixXd Fc = F.rowwise() - f_mean;
  const Eigen::VectorXd yc = split.y_train.array() - y_mean;

  // Dual form: w = Fc^T (Fc Fc^T + ridge I)^{-1} yc, small when training nodes are few.
  Eigen::MatrixXd gram = Fc * Fc.transpose();
  gram.diagonal().array() += ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !(1.0 / ldlt.rcond() <= 1e14))
    throw Error(ErrorCode::SingularSystem, "readout system is singular");
  Readout readout;
  readout.weights = Fc.transpose() * ldlt.solve(yc);
  readout.bias = y_mean - f_mean.dot(readout.weights);
  return readout;
}

}  // namespace gcngp

#include "gcngp/inference.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <random>

namespace gcngp {

void SplitLabels::validate(int n_nodes) const {
  std::vector<int> seen(n_nodes, 0);
  for (const auto* nodes : {&train_nodes, &test_nodes})
    for (int v : *nodes) {
      if (v < 0 || v >= n_nodes) throw Error(ErrorCode::InvalidArgument, "split node out of range");
      if (seen[v]++) throw Error(ErrorCode::InvalidArgument, "train and test nodes must be disjoint");
    }
  if (train_nodes.size() + test_nodes.size() != static_cast<std::size_t>(n_nodes))
    throw Error(ErrorCode::InvalidArgument, "split must cover every node");
  if (y_train.size() != static_cast<Eigen::Index>(train_nodes.size()))
    throw Error(ErrorCode::DimensionMismatch, "one training label per training node required");
}

SplitLabels make_balanced_split(const std::vector<int>& communities, int per_class, std::uint64_t seed) {
  std::vector<int> pos, neg;
  for (int i = 0; i < static_cast<int>(communities.size()); ++i) (communities[i] > 0 ? pos : neg).push_back(i);
  if (per_class < 1 || static_cast<int>(pos.size()) < per_class || static_cast<int>(neg.size()) < per_class)
    throw Error(ErrorCode::InvalidArgument, "not enough nodes per community for the requested split");

  std::mt19937_64 rng(seed);
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  SplitLabels split;
  split.train_nodes.assign(pos.begin(), pos.begin() + per_class);
  split.train_nodes.insert(split.train_nodes.end(), neg.begin(), neg.begin() + per_class);
  std::sort(split.train_nodes.begin(), split.train_nodes.end());

  std::vector<char> is_train(communities.size(), 0);
  for (int v : split.train_nodes) is_train[v] = 1;
  for (int i = 0; i < static_cast<int>(communities.size()); ++i)
    if (!is_train[i]) split.test_nodes.push_back(i);
  split.y_train = labels_of(communities, split.train_nodes);
  return split;
}

Eigen::VectorXd labels_of(const std::vector<int>& communities, const std::vector<int>& nodes) {
  Eigen::VectorXd y(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) y(i) = communities.at(nodes[i]);
  return y;
}

GpPosterior posterior(const Eigen::MatrixXd& K_out, const SplitLabels& split, double sigma_ro) {
  if (K_out.rows() != K_out.cols()) throw Error(ErrorCode::DimensionMismatch, "covariance must be square");
  split.validate(static_cast<int>(K_out.rows()));
  const auto& tr = split.train_nodes;
  const auto& te = split.test_nodes;

  const Eigen::MatrixXd K_dd = K_out(tr, tr);
  const Eigen::MatrixXd K_sd = K_out(te, tr);
  const Eigen::MatrixXd K_ss = K_out(te, te);
  Eigen::MatrixXd system = K_dd;
  system.diagonal().array() += sigma_ro * sigma_ro;

  GpPosterior post;
  if (tr.empty()) {
    post.mean = Eigen::VectorXd::Zero(te.size());
    post.covariance = K_ss;
    return post;
  }
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success || !(1.0 / llt.rcond() <= 1e14))
    throw Error(ErrorCode::SingularSystem, "training covariance is singular or too ill conditioned");

  post.mean = K_sd * llt.solve(split.y_train);
  post.covariance = K_ss - K_sd * llt.solve(K_sd.transpose());
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose()).eval();
  return post;
}

double mean_squared_error(const Eigen::VectorXd& prediction, const Eigen::VectorXd& target) {
  if (prediction.size() != target.size()) throw Error(ErrorCode::DimensionMismatch, "prediction and target sizes differ");
  if (prediction.size() == 0) return 0.0;
  return (prediction - target).squaredNorm() / double(prediction.size());
}

double generalization_error(const GpPosterior& post, const Eigen::VectorXd& y_test) {
  return mean_squared_error(post.mean, y_test);
}

std::vector<DepthError> depth_error_profile(const ShiftOperator<double>& A, const Eigen::MatrixXd& features,
                                            const SplitLabels& split, const Eigen::VectorXd& y_test,
                                            const GpHyper<double>& hyper, const std::vector<int>& depths) {
  if (!std::is_sorted(depths.begin(), depths.end()) || depths.empty() || depths.front() < 1)
    throw Error(ErrorCode::InvalidArgument, "depths must be a nonempty ascending list of positive integers");
  GpState<double> state = input_covariance(features, A, hyper);
  std::vector<DepthError> out;
  out.reserve(depths.size());
  for (int depth : depths) {
    while (state.layer < depth) state = step(state, A, hyper);
    const Eigen::MatrixXd K_out = covariance_step(state.K, A.matrix, hyper);
    out.push_back({depth, generalization_error(posterior(K_out, split, hyper.sigma_ro), y_test)});
  }
  return out;
}

}  // namespace gcngp

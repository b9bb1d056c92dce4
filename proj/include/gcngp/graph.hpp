#pragma once

#include "gcngp/core.hpp"

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gcngp {

/// Undirected simple graph on nodes [0, n_nodes). Edges are stored as (lo, hi)
/// pairs, sorted and unique. Communities, when present, are +1/-1 per node.
class Graph {
 public:
  Graph() = default;

  /// Validates endpoints, rejects self loops, deduplicates.
  static Graph from_edges(int n_nodes, std::vector<std::pair<int, int>> edges,
                          std::optional<std::vector<int>> communities = std::nullopt);

  int n_nodes() const { return n_nodes_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }
  const std::optional<std::vector<int>>& communities() const { return communities_; }

  std::vector<int> degrees() const;
  int max_degree() const;
  Eigen::MatrixXd adjacency() const;
  bool is_connected() const;
  std::vector<int> isolated_nodes() const;

 private:
  int n_nodes_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::optional<std::vector<int>> communities_;
};

Graph complete_graph(int n_nodes);

/// Row-stochastic mixing matrix A = I - (g / d_max) (D - adjacency).
template <typename Scalar = double>
struct ShiftOperator {
  MatrixX<Scalar> matrix;
  Scalar g = 0;
  std::vector<int> isolated_nodes;

  Eigen::Index size() const { return matrix.rows(); }

  /// Wraps an explicit matrix; rows must sum to one within 1e-12.
  static ShiftOperator from_matrix(MatrixX<Scalar> m, Scalar g = 0) {
    if (m.rows() != m.cols() || m.rows() == 0)
      throw Error(ErrorCode::DimensionMismatch, "shift operator must be square and nonempty");
    const VectorX<Scalar> sums = m.rowwise().sum();
    for (Eigen::Index i = 0; i < sums.size(); ++i)
      if (std::abs(sums(i) - Scalar(1)) > Scalar(1e-12))
        throw Error(ErrorCode::InvalidArgument, "shift operator rows must sum to 1");
    return ShiftOperator{std::move(m), g, {}};
  }

  template <typename Other>
  ShiftOperator<Other> cast() const {
    return ShiftOperator<Other>{matrix.template cast<Other>(), Other(g), isolated_nodes};
  }
};

ShiftOperator<double> build_shift_operator(const Graph& graph, double g);

struct CsbmParams {
  int n_nodes = 100;
  double avg_degree = 5.0;
  double snr = 1.0;
  double feature_strength = 0.0;
  double aspect = 1.0;
  std::uint64_t seed = 0;
  /// Resample (with derived seeds) until the realized graph is connected.
  bool require_connected = false;

  double p_in() const { return (avg_degree + snr * std::sqrt(avg_degree)) / n_nodes; }
  double p_out() const { return (avg_degree - snr * std::sqrt(avg_degree)) / n_nodes; }
  int feature_dim() const;
};

struct CsbmInstance {
  Graph graph;
  Eigen::MatrixXd features;  // n_nodes x feature_dim
};

/// Two balanced communities (first half +1, second half -1), intra-community
/// edges with probability p_in, inter-community with p_out, and features
/// X = sqrt(mu / N) v u^T + Z.
CsbmInstance generate_csbm(const CsbmParams& params);

Graph parse_edge_list(std::istream& in);
Graph load_edge_list(const std::string& path);
void write_edge_list(std::ostream& out, const Graph& graph);
void write_features_csv(std::ostream& out, const Eigen::MatrixXd& features);

}  // namespace gcngp

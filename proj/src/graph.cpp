#include "gcngp/graph.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "gcngp/csv.hpp"

namespace gcngp {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::InvalidG: return "InvalidG";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SelfLoop: return "SelfLoopError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPsdInput: return "NonPsdInput";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::NotAFixedPoint: return "NotAFixedPoint";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::InvalidBracket: return "InvalidBracket";
    case ErrorCode::DefectiveSpectrum: return "DefectiveSpectrum";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::SingularSystem: return "SingularSystem";
  }
  return "Unknown";
}

Graph Graph::from_edges(int n_nodes, std::vector<std::pair<int, int>> edges,
                        std::optional<std::vector<int>> communities) {
  if (n_nodes <= 0) throw Error(ErrorCode::InvalidArgument, "graph needs at least one node");
  for (auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n_nodes || b >= n_nodes)
      throw Error(ErrorCode::InvalidArgument, "edge endpoint out of range");
    if (a == b)
      throw Error(ErrorCode::SelfLoop, "self loop on node " + std::to_string(a));
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (communities) {
    if (static_cast<int>(communities->size()) != n_nodes)
      throw Error(ErrorCode::DimensionMismatch, "one community label per node required");
    for (int c : *communities)
      if (c != 1 && c != -1) throw Error(ErrorCode::InvalidArgument, "community labels must be +1 or -1");
  }
  Graph graph;
  graph.n_nodes_ = n_nodes;
  graph.edges_ = std::move(edges);
  graph.communities_ = std::move(communities);
  return graph;
}

std::vector<int> Graph::degrees() const {
  std::vector<int> deg(n_nodes_, 0);
  for (const auto& [a, b] : edges_) {
    ++deg[a];
    ++deg[b];
  }
  return deg;
}

int Graph::max_degree() const {
  const auto deg = degrees();
  return deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
}

Eigen::MatrixXd Graph::adjacency() const {
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n_nodes_, n_nodes_);
  for (const auto& [a, b] : edges_) adj(a, b) = adj(b, a) = 1.0;
  return adj;
}

bool Graph::is_connected() const {
  std::vector<int> parent(n_nodes_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  int components = n_nodes_;
  for (const auto& [a, b] : edges_) {
    const int ra = find(a), rb = find(b);
    if (ra != rb) {
      parent[ra] = rb;
      --components;
    }
  }
  return components == 1;
}

std::vector<int> Graph::isolated_nodes() const {
  std::vector<int> out;
  const auto deg = degrees();
  for (int i = 0; i < n_nodes_; ++i)
    if (deg[i] == 0) out.push_back(i);
  return out;
}

Graph complete_graph(int n_nodes) {
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < n_nodes; ++a)
    for (int b = a + 1; b < n_nodes; ++b) edges.emplace_back(a, b);
  return Graph::from_edges(n_nodes, std::move(edges));
}

ShiftOperator<double> build_shift_operator(const Graph& graph, double g) {
  if (!(g > 0.0 && g < 1.0)) throw Error(ErrorCode::InvalidG, "g must lie in (0, 1)");
  const int d_max = graph.max_degree();
  // a lone node has nothing to mix with
  if (graph.n_nodes() == 1) return ShiftOperator<double>{Eigen::MatrixXd::Ones(1, 1), g, {0}};
  if (d_max == 0) throw Error(ErrorCode::EmptyGraph, "graph has no edges");

  const Eigen::MatrixXd adj = graph.adjacency();
  const Eigen::VectorXd deg = adj.rowwise().sum();
  Eigen::MatrixXd laplacian = -adj;
  laplacian.diagonal() += deg;

  ShiftOperator<double> op;
  op.g = g;
  op.matrix = Eigen::MatrixXd::Identity(graph.n_nodes(), graph.n_nodes()) - (g / d_max) * laplacian;
  op.isolated_nodes = graph.isolated_nodes();
  return op;
}

int CsbmParams::feature_dim() const {
  return std::max(1, static_cast<int>(std::lround(aspect * n_nodes)));
}

namespace {

Graph sample_sbm_graph(const CsbmParams& params, std::mt19937_64& rng, const std::vector<int>& labels) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double p_in = params.p_in(), p_out = params.p_out();
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < params.n_nodes; ++a)
    for (int b = a + 1; b < params.n_nodes; ++b) {
      const double p = labels[a] == labels[b] ? p_in : p_out;
      if (uniform(rng) < p) edges.emplace_back(a, b);
    }
  return Graph::from_edges(params.n_nodes, std::move(edges), labels);
}

}  // namespace

CsbmInstance generate_csbm(const CsbmParams& params) {
  if (params.n_nodes <= 0 || params.n_nodes % 2 != 0)
    throw Error(ErrorCode::InvalidArgument, "CSBM needs an even, positive node count");
  const double p_in = params.p_in(), p_out = params.p_out();
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0))
    throw Error(ErrorCode::InvalidProbability, "CSBM edge probabilities outside [0, 1]");

  std::vector<int> labels(params.n_nodes);
  for (int i = 0; i < params.n_nodes; ++i) labels[i] = i < params.n_nodes / 2 ? 1 : -1;

  constexpr int kMaxAttempts = 1000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::mt19937_64 rng(split_seed(params.seed, static_cast<std::uint64_t>(attempt)));
    Graph graph = sample_sbm_graph(params, rng, labels);
    if (params.require_connected && !graph.is_connected()) continue;

    std::normal_distribution<double> normal(0.0, 1.0);
    const int d0 = params.feature_dim();
    Eigen::VectorXd u(d0);
    for (int j = 0; j < d0; ++j) u(j) = normal(rng);
    Eigen::MatrixXd features(params.n_nodes, d0);
    for (int i = 0; i < params.n_nodes; ++i)
      for (int j = 0; j < d0; ++j) features(i, j) = normal(rng);

    const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXi>(labels.data(), params.n_nodes).cast<double>();
    features += std::sqrt(params.feature_strength / params.n_nodes) * v * u.transpose();
    return CsbmInstance{std::move(graph), std::move(features)};
  }
  throw Error(ErrorCode::InvalidArgument, "no connected CSBM sample found; degree too low");
}

namespace {

bool parse_int(const std::string& token, long long& value) {
  std::istringstream ss(token);
  ss >> value;
  return !ss.fail() && ss.eof();
}

}  // namespace

Graph parse_edge_list(std::istream& in) {
  std::vector<std::pair<int, int>> edges;
  std::vector<std::pair<int, int>> community_lines;
  int declared_nodes = 0;
  int max_node = -1;
  std::string line;
  int line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::vector<std::string> words;
    for (std::string w; tokens >> w;) words.push_back(w);
    if (words.empty()) continue;

    if (words[0][0] == '#') {
      // "# community <node> <+-1>" and "# nodes <n>" carry data; anything else is a comment.
      if (words[0] != "#" || words.size() < 2) continue;
      long long a = 0, b = 0;
      if (words[1] == "community") {
        if (words.size() != 4 || !parse_int(words[2], a) || !parse_int(words[3], b) || a < 0 ||
            (b != 1 && b != -1))
          throw ParseError(line_no, "expected '# community <node> <+1|-1>'");
        community_lines.emplace_back(static_cast<int>(a), static_cast<int>(b));
        max_node = std::max(max_node, static_cast<int>(a));
      } else if (words[1] == "nodes") {
        if (words.size() != 3 || !parse_int(words[2], a) || a <= 0)
          throw ParseError(line_no, "expected '# nodes <count>'");
        declared_nodes = static_cast<int>(a);
      }
      continue;
    }

    long long a = 0, b = 0;
    if (words.size() != 2 || !parse_int(words[0], a) || !parse_int(words[1], b))
      throw ParseError(line_no, "expected two integer node ids");
    if (a < 0 || b < 0) throw ParseError(line_no, "node ids must be nonnegative");
    if (a > 100000000 || b > 100000000) throw ParseError(line_no, "node id too large");
    if (a == b)
      throw Error(ErrorCode::SelfLoop, "line " + std::to_string(line_no) + ": self loop on node " +
                                           std::to_string(a));
    edges.emplace_back(static_cast<int>(a), static_cast<int>(b));
    max_node = std::max<int>(max_node, static_cast<int>(std::max(a, b)));
  }

  const int n_nodes = std::max(declared_nodes, max_node + 1);
  if (n_nodes <= 0) throw ParseError(line_no, "edge list defines no nodes");
  if (max_node >= n_nodes) throw ParseError(line_no, "node id exceeds declared node count");

  std::optional<std::vector<int>> communities;
  if (!community_lines.empty()) {
    std::vector<int> labels(n_nodes, 0);
    for (const auto& [node, label] : community_lines) labels[node] = label;
    if (std::find(labels.begin(), labels.end(), 0) != labels.end())
      throw ParseError(line_no, "community labels given for some nodes but not all");
    communities = std::move(labels);
  }
  return Graph::from_edges(n_nodes, std::move(edges), std::move(communities));
}

Graph load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open edge list '" + path + "'");
  return parse_edge_list(in);
}

void write_edge_list(std::ostream& out, const Graph& graph) {
  out << "# nodes " << graph.n_nodes() << '\n';
  if (const auto& comm = graph.communities())
    for (int i = 0; i < graph.n_nodes(); ++i)
      out << "# community " << i << ' ' << ((*comm)[i] > 0 ? "1" : "-1") << '\n';
  for (const auto& [a, b] : graph.edges()) out << a << ' ' << b << '\n';
}

void write_features_csv(std::ostream& out, const Eigen::MatrixXd& features) {
  std::vector<std::string> header{"node"};
  for (Eigen::Index j = 0; j < features.cols(); ++j) header.push_back("f" + std::to_string(j));
  CsvWriter csv(out, header);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    csv << static_cast<long long>(i);
    for (Eigen::Index j = 0; j < features.cols(); ++j) csv << features(i, j);
    csv.end_row();
  }
}

}  // namespace gcngp

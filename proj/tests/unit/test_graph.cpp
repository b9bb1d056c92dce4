#include "doctest.h"

#include "gcngp/graph.hpp"

#include <algorithm>
#include <random>
#include <sstream>

using namespace gcngp;

namespace {

Graph path_graph(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < n; ++i) edges.emplace_back(i, i + 1);
  return Graph::from_edges(n, edges);
}

Graph random_graph(int n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<std::pair<int, int>> edges;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (u(rng) < p) edges.emplace_back(a, b);
  if (edges.empty()) edges.emplace_back(0, 1);
  return Graph::from_edges(n, edges);
}

}  // namespace

TEST_CASE("two-node path with g = 0.5 mixes evenly") {
  const auto A = build_shift_operator(path_graph(2), 0.5);
  CHECK(A.matrix.isApprox(Eigen::MatrixXd::Constant(2, 2, 0.5), 1e-15));
}

TEST_CASE("complete graph shift operator has the closed form") {
  const int n = 5;
  const double g = 0.3;
  const auto A = build_shift_operator(complete_graph(n), g);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double expected = g / (n - 1) + (a == b ? 1.0 - n * g / (n - 1) : 0.0);
      CHECK(A.matrix(a, b) == doctest::Approx(expected).epsilon(1e-14));
    }
  CHECK(A.matrix(0, 1) == doctest::Approx(0.075));
  CHECK(A.matrix(0, 0) == doctest::Approx(0.7));
}

TEST_CASE("g must lie strictly inside (0, 1)") {
  const auto star = Graph::from_edges(3, {{0, 1}, {0, 2}});
  for (double g : {0.0, 1.0, -0.1, 1.5}) {
    try {
      build_shift_operator(star, g);
      FAIL("expected InvalidG");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidG);
    }
  }
  const auto A = build_shift_operator(star, 0.99);
  CHECK((A.matrix.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
}

TEST_CASE("graph without edges is rejected") {
  const auto empty = Graph::from_edges(4, {});
  try {
    build_shift_operator(empty, 0.5);
    FAIL("expected EmptyGraph");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyGraph);
  }
}

TEST_CASE("single node gives the scalar operator") {
  const auto A = build_shift_operator(complete_graph(1), 0.5);
  CHECK(A.size() == 1);
  CHECK(A.matrix(0, 0) == 1.0);
  CHECK(A.isolated_nodes == std::vector<int>{0});
}

TEST_CASE("isolated nodes keep an identity row") {
  const auto graph = Graph::from_edges(4, {{0, 1}, {1, 2}});
  const auto A = build_shift_operator(graph, 0.4);
  REQUIRE(A.isolated_nodes == std::vector<int>{3});
  CHECK(A.matrix.row(3).isApprox(Eigen::RowVector4d(0, 0, 0, 1)));
}

TEST_CASE("shift operator invariants on random graphs") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const int n = 3 + static_cast<int>(seed % 12);
    const double g = 0.05 + 0.03 * double(seed);
    const auto A = build_shift_operator(random_graph(n, 0.4, seed), g);
    CHECK((A.matrix.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((A.matrix - A.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        if (a == b) {
          CHECK(A.matrix(a, a) > 0.0);
          CHECK(A.matrix(a, a) <= 1.0);
        } else {
          CHECK(A.matrix(a, b) >= 0.0);
        }
      }
  }
}

TEST_CASE("explicit shift operators must be row stochastic") {
  Eigen::MatrixXd m(2, 2);
  m << 0.5, 0.5, 0.2, 0.7;
  CHECK_THROWS_AS(ShiftOperator<double>::from_matrix(m), Error);
  m(1, 1) = 0.8;
  CHECK(ShiftOperator<double>::from_matrix(m).size() == 2);
}

TEST_CASE("CSBM edge probabilities") {
  CsbmParams p;
  p.n_nodes = 100;
  p.avg_degree = 5;
  p.snr = 1;
  CHECK(p.p_in() == doctest::Approx((5 + std::sqrt(5.0)) / 100));
  CHECK(p.p_out() == doctest::Approx((5 - std::sqrt(5.0)) / 100));
  CHECK(p.p_in() == doctest::Approx(0.07236).epsilon(1e-4));
  CHECK(p.p_out() == doctest::Approx(0.02764).epsilon(1e-3));
  p.snr = 0;
  CHECK(p.p_in() == p.p_out());
  CHECK(p.p_in() == doctest::Approx(0.05));
}

TEST_CASE("CSBM rejects impossible probabilities and odd sizes") {
  CsbmParams p;
  p.n_nodes = 10;
  p.avg_degree = 5;
  p.snr = 4;
  try {
    generate_csbm(p);
    FAIL("expected InvalidProbability");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidProbability);
  }
  p.snr = 1;
  p.n_nodes = 11;
  CHECK_THROWS_AS(generate_csbm(p), Error);
}

TEST_CASE("CSBM is deterministic and balanced") {
  CsbmParams p;
  p.n_nodes = 40;
  p.feature_strength = 2;
  p.aspect = 0.5;
  p.seed = 123;
  const auto a = generate_csbm(p);
  const auto b = generate_csbm(p);
  CHECK(a.graph.edges() == b.graph.edges());
  CHECK(a.features.cols() == 20);
  CHECK((a.features.array() == b.features.array()).all());
  const auto& comm = *a.graph.communities();
  CHECK(std::count(comm.begin(), comm.end(), 1) == 20);
  CHECK(std::count(comm.begin(), comm.begin() + 20, 1) == 20);
  p.seed = 124;
  CHECK(generate_csbm(p).graph.edges() != a.graph.edges());
}

TEST_CASE("CSBM without signal gives pure noise features") {
  CsbmParams p;
  p.n_nodes = 200;
  p.feature_strength = 0;
  p.aspect = 1;
  p.seed = 9;
  const auto inst = generate_csbm(p);
  const double mean = inst.features.mean();
  const double var = (inst.features.array() - mean).square().mean();
  const double count = double(inst.features.size());
  CHECK(std::abs(mean) < 3.0 / std::sqrt(count));
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / count));
}

TEST_CASE("CSBM intra-community edge frequency matches p_in") {
  CsbmParams p;
  p.n_nodes = 40;
  p.avg_degree = 5;
  p.snr = 1;
  long long hits = 0, trials = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    p.seed = seed;
    const auto inst = generate_csbm(p);
    const auto& comm = *inst.graph.communities();
    for (const auto& [a, b] : inst.graph.edges())
      if (comm[a] == comm[b]) ++hits;
    trials += 2 * (20 * 19 / 2);
  }
  const double freq = double(hits) / double(trials);
  const double se = std::sqrt(p.p_in() * (1 - p.p_in()) / double(trials));
  CHECK(std::abs(freq - p.p_in()) < 3 * se);
}

TEST_CASE("connected CSBM samples are connected") {
  CsbmParams p;
  p.n_nodes = 100;
  p.require_connected = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    p.seed = seed;
    CHECK(generate_csbm(p).graph.is_connected());
  }
}

TEST_CASE("edge list parsing") {
  std::istringstream path("0 1\n1 2");
  const auto g = parse_edge_list(path);
  CHECK(g.n_nodes() == 3);
  CHECK(g.edges().size() == 2);

  std::istringstream dup("0 1\n0 1\n1 0\n");
  CHECK(parse_edge_list(dup).edges().size() == 1);

  std::istringstream loop("0 1\n0 0\n");
  try {
    parse_edge_list(loop);
    FAIL("expected SelfLoop");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SelfLoop);
  }

  std::istringstream bad("0 1\n\n# comment\n2 x\n");
  try {
    parse_edge_list(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(e.code() == ErrorCode::ParseError);
  }

  std::istringstream three("0 1 2\n");
  CHECK_THROWS_AS(parse_edge_list(three), ParseError);
  std::istringstream negative("0 -1\n");
  CHECK_THROWS_AS(parse_edge_list(negative), ParseError);
}

TEST_CASE("edge list communities and round trip") {
  std::istringstream in("# community 0 1\n# community 1 -1\n# community 2 1\n0 1\n1 2\n");
  const auto g = parse_edge_list(in);
  REQUIRE(g.communities());
  CHECK(*g.communities() == std::vector<int>{1, -1, 1});

  std::istringstream partial("# community 0 1\n0 1\n");
  CHECK_THROWS_AS(parse_edge_list(partial), ParseError);
  std::istringstream malformed("# community 0 2\n0 1\n");
  CHECK_THROWS_AS(parse_edge_list(malformed), ParseError);

  CsbmParams p;
  p.n_nodes = 20;
  p.seed = 4;
  const auto inst = generate_csbm(p);
  std::stringstream buffer;
  write_edge_list(buffer, inst.graph);
  const auto back = parse_edge_list(buffer);
  CHECK(back.n_nodes() == inst.graph.n_nodes());
  CHECK(back.edges() == inst.graph.edges());
  CHECK(*back.communities() == *inst.graph.communities());
}

TEST_CASE("feature CSV header") {
  Eigen::MatrixXd x(2, 3);
  x << 1, 2, 3, 4, 5, 6.5;
  std::ostringstream out;
  write_features_csv(out, x);
  CHECK(out.str() == "node,f0,f1,f2\n0,1,2,3\n1,4,5,6.5\n");
}

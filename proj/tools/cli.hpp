#pragma once

// Config-driven command-line front end. Everything here is also used by the
// CLI tests, so commands write to caller-supplied streams.

#include "gcngp/finite_gcn.hpp"
#include "gcngp/linear_analysis.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gcngp::cli {

enum class GraphKind { Complete, Csbm, EdgeList };

struct GraphConfig {
  GraphKind kind = GraphKind::Complete;
  int n_nodes = 5;
  CsbmParams csbm;
  std::filesystem::path path;     // edge list, resolved against the config directory
  std::vector<int> communities;   // optional labels for an edge list
};

struct SweepConfig {
  GraphConfig graph;
  std::vector<double> g{0.1};
  std::vector<double> sigma_w2{2.0};
  std::vector<int> depths{1, 4, 16, 64};
  bool sigma_w2_relative = false;  // depth-profile: grid is an offset from each instance's critical value

  double sigma_b2 = 0.0;
  double sigma_ro = 0.01;
  std::string kernel = "erf";
  int quadrature_points = 64;

  int input_dim = 10;  // random input features for graphs without their own
  int width = 200;
  bool finite_network = false;
  int n_seeds = 1;
  int layers = 4000;
  double threshold = 1e-5;

  Bracket bracket;
  double tol = 1e-4;
  double probe_tol = 1e-3;
  int probe_layers = 100000;
  std::string fixed_point = "zero_distance";

  int per_class = 5;
  double ridge = 1e-4;

  std::filesystem::path out = "out";
  std::uint64_t seed = 0;
  int threads = 1;

  GpHyper<double> hyper(double sigma_w2) const;
  nlohmann::json to_json() const;
};

/// Accepts a number, an array, or {"start", "stop", "step"} (stop inclusive).
std::vector<double> parse_grid(const nlohmann::json& value, const std::string& key);

/// Unknown keys and empty grids are input errors. base_dir resolves relative paths.
SweepConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
SweepConfig load_config(const std::filesystem::path& file);

struct Instance {
  Graph graph;
  Eigen::MatrixXd features;
};

/// Graph and input features for one realization; only CSBM graphs depend on the seed.
Instance make_instance(const SweepConfig& config, std::uint64_t seed);

int cmd_phase_diagram(const SweepConfig& config, std::ostream& log);
int cmd_critical(const SweepConfig& config, std::ostream& log);
int cmd_depth_profile(const SweepConfig& config, std::ostream& log);
int cmd_validate(const SweepConfig& config, std::ostream& log);
int cmd_spectrum(const SweepConfig& config, std::ostream& log);
int cmd_csbm(const SweepConfig& config, std::ostream& log);

/// Full entry point; returns 0 ok, 1 numerical failure, 2 input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gcngp::cli

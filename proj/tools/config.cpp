#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

namespace gcngp::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::InvalidArgument, "config: " + what); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) bad(where + " must be an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key())) bad("unknown key '" + item.key() + "' in " + where);
}

template <typename T>
void read(const json& obj, const char* key, T& target) {
  if (!obj.contains(key)) return;
  try {
    target = obj.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("wrong type for '") + key + "'");
  }
}

std::vector<int> to_depths(const std::vector<double>& grid) {
  std::vector<int> out;
  for (double v : grid) {
    if (v < 1 || v != std::floor(v)) bad("depths must be positive integers");
    out.push_back(static_cast<int>(v));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

GraphConfig parse_graph(const json& g, const std::filesystem::path& base_dir) {
  GraphConfig out;
  if (!g.is_object() || !g.contains("type")) bad("graph needs a 'type'");
  const std::string type = g.at("type").get<std::string>();
  if (type == "complete") {
    check_keys(g, {"type", "n_nodes"}, "graph");
    out.kind = GraphKind::Complete;
    read(g, "n_nodes", out.n_nodes);
  } else if (type == "csbm") {
    check_keys(g, {"type", "n_nodes", "avg_degree", "snr", "feature_strength", "aspect", "require_connected"}, "graph");
    out.kind = GraphKind::Csbm;
    auto& p = out.csbm;
    read(g, "n_nodes", p.n_nodes);
    read(g, "avg_degree", p.avg_degree);
    read(g, "snr", p.snr);
    read(g, "feature_strength", p.feature_strength);
    read(g, "aspect", p.aspect);
    read(g, "require_connected", p.require_connected);
    out.n_nodes = p.n_nodes;
  } else if (type == "edge_list") {
    check_keys(g, {"type", "path", "communities"}, "graph");
    out.kind = GraphKind::EdgeList;
    std::string path;
    read(g, "path", path);
    if (path.empty()) bad("edge_list graph needs a 'path'");
    out.path = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : base_dir / path;
    read(g, "communities", out.communities);
  } else {
    bad("graph type must be complete, csbm or edge_list");
  }
  if (out.kind != GraphKind::EdgeList && out.n_nodes < 1) bad("n_nodes must be positive");
  return out;
}

}  // namespace

std::vector<double> parse_grid(const json& value, const std::string& key) {
  std::vector<double> out;
  if (value.is_number()) {
    out.push_back(value.get<double>());
  } else if (value.is_array()) {
    for (const auto& v : value) {
      if (!v.is_number()) bad("grid '" + key + "' must hold numbers");
      out.push_back(v.get<double>());
    }
  } else if (value.is_object()) {
    check_keys(value, {"start", "stop", "step"}, key);
    double start = 0, stop = 0, step = 0;
    read(value, "start", start);
    read(value, "stop", stop);
    read(value, "step", step);
    if (!(step > 0) || !(stop >= start)) bad("grid '" + key + "' needs step > 0 and stop >= start");
    // index-based so rounding does not accumulate; stop counts if within 1e-9 steps
    const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    if (count > 1000000) bad("grid '" + key + "' is too large");
    for (long i = 0; i < count; ++i) out.push_back(start + double(i) * step);
  } else {
    bad("grid '" + key + "' must be a number, an array or {start, stop, step}");
  }
  if (out.empty()) bad("grid '" + key + "' is empty");
  for (double v : out)
    if (!std::isfinite(v)) bad("grid '" + key + "' has a non-finite value");
  return out;
}

SweepConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  check_keys(doc,
             {"graph", "g", "sigma_w2", "depths", "sigma_w2_relative", "sigma_b2", "sigma_ro", "kernel",
              "quadrature_points", "input_dim", "width", "finite_network", "n_seeds", "layers", "threshold", "bracket",
              "tol", "probe_tol", "probe_layers", "fixed_point", "per_class", "ridge", "out", "seed", "threads"},
             "config");
  SweepConfig c;
  if (doc.contains("graph")) c.graph = parse_graph(doc.at("graph"), base_dir);
  if (doc.contains("g")) c.g = parse_grid(doc.at("g"), "g");
  if (doc.contains("sigma_w2")) c.sigma_w2 = parse_grid(doc.at("sigma_w2"), "sigma_w2");
  if (doc.contains("depths")) c.depths = to_depths(parse_grid(doc.at("depths"), "depths"));
  read(doc, "sigma_w2_relative", c.sigma_w2_relative);
  read(doc, "sigma_b2", c.sigma_b2);
  read(doc, "sigma_ro", c.sigma_ro);
  read(doc, "kernel", c.kernel);
  read(doc, "quadrature_points", c.quadrature_points);
  read(doc, "input_dim", c.input_dim);
  read(doc, "width", c.width);
  read(doc, "finite_network", c.finite_network);
  read(doc, "n_seeds", c.n_seeds);
  read(doc, "layers", c.layers);
  read(doc, "threshold", c.threshold);
  if (doc.contains("bracket")) {
    std::vector<double> b;
    read(doc, "bracket", b);
    if (b.size() != 2) bad("bracket must be [lo, hi]");
    c.bracket = {b[0], b[1]};
  }
  read(doc, "tol", c.tol);
  read(doc, "probe_tol", c.probe_tol);
  read(doc, "probe_layers", c.probe_layers);
  read(doc, "fixed_point", c.fixed_point);
  read(doc, "per_class", c.per_class);
  read(doc, "ridge", c.ridge);
  if (doc.contains("out")) {
    std::string out;
    read(doc, "out", out);
    c.out = std::filesystem::path(out).is_absolute() ? std::filesystem::path(out) : base_dir / out;
  }
  read(doc, "seed", c.seed);
  read(doc, "threads", c.threads);

  if (c.kernel != "erf" && c.kernel != "quadrature") bad("kernel must be erf or quadrature");
  if (c.fixed_point != "zero_distance" && c.fixed_point != "equilibrium")
    bad("fixed_point must be zero_distance or equilibrium");
  if (c.quadrature_points < 2 || c.input_dim < 1 || c.width < 1 || c.n_seeds < 1 || c.layers < 1 ||
      c.probe_layers < 1 || c.per_class < 1 || c.threads < 1)
    bad("counts must be positive");
  if (!(c.threshold > 0) || !(c.tol > 0) || !(c.probe_tol > 0) || !(c.ridge >= 0)) bad("tolerances must be positive");
  c.hyper(1.0).validate();
  return c;
}

SweepConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) bad("cannot open " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "config " + file.string() + ": " + e.what());
  }
  return parse_config(doc, file.parent_path());
}

GpHyper<double> SweepConfig::hyper(double sw) const {
  GpHyper<double> h;
  h.sigma_w2 = sw;
  h.sigma_b2 = sigma_b2;
  h.sigma_ro = sigma_ro;
  h.kernel = kernel == "erf" ? KernelSpec<double>::analytic_erf()
                             : KernelSpec<double>::quadrature(erf_activation<double>, quadrature_points);
  return h;
}

json SweepConfig::to_json() const {
  json g;
  switch (graph.kind) {
    case GraphKind::Complete:
      g = {{"type", "complete"}, {"n_nodes", graph.n_nodes}};
      break;
    case GraphKind::Csbm:
      g = {{"type", "csbm"},
           {"n_nodes", graph.csbm.n_nodes},
           {"avg_degree", graph.csbm.avg_degree},
           {"snr", graph.csbm.snr},
           {"feature_strength", graph.csbm.feature_strength},
           {"aspect", graph.csbm.aspect},
           {"require_connected", graph.csbm.require_connected}};
      break;
    case GraphKind::EdgeList:
      g = {{"type", "edge_list"}, {"path", graph.path.generic_string()}};
      if (!graph.communities.empty()) g["communities"] = graph.communities;
      break;
  }
  return {{"graph", g},
          {"g", this->g},
          {"sigma_w2", sigma_w2},
          {"depths", depths},
          {"sigma_w2_relative", sigma_w2_relative},
          {"sigma_b2", sigma_b2},
          {"sigma_ro", sigma_ro},
          {"kernel", kernel},
          {"quadrature_points", quadrature_points},
          {"input_dim", input_dim},
          {"width", width},
          {"finite_network", finite_network},
          {"n_seeds", n_seeds},
          {"layers", layers},
          {"threshold", threshold},
          {"bracket", {bracket.lo, bracket.hi}},
          {"tol", tol},
          {"probe_tol", probe_tol},
          {"probe_layers", probe_layers},
          {"fixed_point", fixed_point},
          {"per_class", per_class},
          {"ridge", ridge},
          {"seed", seed}};
}

Instance make_instance(const SweepConfig& config, std::uint64_t seed) {
  Instance inst;
  const auto& gc = config.graph;
  if (gc.kind == GraphKind::Csbm) {
    CsbmParams p = gc.csbm;
    p.seed = seed;
    auto csbm = generate_csbm(p);
    inst.graph = std::move(csbm.graph);
    inst.features = std::move(csbm.features);
    return inst;
  }
  if (gc.kind == GraphKind::Complete) {
    inst.graph = complete_graph(gc.n_nodes);
  } else {
    Graph g = load_edge_list(gc.path.string());
    if (!gc.communities.empty()) {
      if (static_cast<int>(gc.communities.size()) != g.n_nodes())
        throw Error(ErrorCode::DimensionMismatch, "config: one community label per node required");
      g = Graph::from_edges(g.n_nodes(), g.edges(), gc.communities);
    }
    inst.graph = std::move(g);
  }
  std::mt19937_64 rng(split_seed(seed, 1));
  std::normal_distribution<double> normal(0.0, 1.0);
  inst.features.resize(inst.graph.n_nodes(), config.input_dim);
  for (Eigen::Index i = 0; i < inst.features.size(); ++i) inst.features.data()[i] = normal(rng);
  return inst;
}

}  // namespace gcngp::cli

#include "cli.hpp"

#include "gcngp/complete_graph.hpp"
#include "gcngp/csv.hpp"
#include "gcngp/parallel.hpp"

#include <CLI11.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <set>

namespace gcngp::cli {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::ofstream open_output(const SweepConfig& c, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(c.out, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, "cannot create output directory " + c.out.string() + ": " + ec.message());
  std::ofstream f(c.out / name, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + (c.out / name).string());
  return f;
}

void write_json(const SweepConfig& c, const std::string& name, json doc) {
  doc["config"] = c.to_json();
  open_output(c, name) << doc.dump(2) << '\n';
}

bool has_analytic_boundary(const SweepConfig& c) { return c.graph.kind == GraphKind::Complete && c.graph.n_nodes >= 2; }

double analytic_or_nan(const SweepConfig& c, double g) {
  try {
    return analytic_transition(c.graph.n_nodes, g, c.sigma_b2);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoRoot) throw;
    return kNaN;
  }
}

struct MeanSe {
  double mean = 0;
  double se = kNaN;
};

MeanSe mean_se(const std::vector<double>& v) {
  MeanSe r;
  if (v.empty()) return r;
  for (double x : v) r.mean += x;
  r.mean /= double(v.size());
  if (v.size() < 2) return r;
  double ss = 0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / double(v.size() - 1) / double(v.size()));
  return r;
}

const std::vector<int>& communities_of(const Instance& inst) {
  if (!inst.graph.communities())
    throw Error(ErrorCode::InvalidArgument, "this command needs community labels (csbm graph or edge_list communities)");
  return *inst.graph.communities();
}

}  // namespace

int cmd_phase_diagram(const SweepConfig& c, std::ostream& log) {
  const auto t0 = Clock::now();
  const Instance inst = make_instance(c, split_seed(c.seed, 0));
  struct Cell {
    double g, sigma_w2, mu = 0, max_distance = 0, rho = 0;
  };
  std::vector<Cell> cells;
  for (double g : c.g)
    for (double sw : c.sigma_w2) cells.push_back({g, sw});

  parallel_for(cells.size(), c.threads, [&](std::size_t i) {
    auto& cell = cells[i];
    const auto A = build_shift_operator(inst.graph, cell.g);
    const auto h = c.hyper(cell.sigma_w2);
    const auto last = iterate<double>(input_covariance(inst.features, A, h), A, h, c.layers - 1);
    const auto report = gp_distance_report(last.K, h.kernel);
    cell.mu = report.mu;
    cell.max_distance = report.max_offdiag;
    cell.rho = chaos_indicator(A, h).rho_p;
  });

  int n_over = 0;
  {
    auto f = open_output(c, "phase_diagram.csv");
    CsvWriter csv(f, {"g", "sigma_w2", "mu_eq", "max_distance", "rho_p", "is_oversmoothing"});
    for (const auto& cell : cells) {
      const bool over = cell.mu < c.threshold;
      n_over += over;
      csv << cell.g << cell.sigma_w2 << cell.mu << cell.max_distance << cell.rho << int(over);
      csv.end_row();
    }
  }
  json boundary = json::array();
  if (has_analytic_boundary(c)) {
    auto f = open_output(c, "boundary.csv");
    CsvWriter csv(f, {"g", "sigma_w2_crit"});
    for (double g : c.g) {
      const double crit = analytic_or_nan(c, g);
      if (std::isnan(crit)) {
        log << "no transition below sigma_w2 = 20 at g = " << g << "\n";
        continue;
      }
      csv << g << crit;
      csv.end_row();
      boundary.push_back({{"g", g}, {"sigma_w2_crit", crit}});
    }
  }
  write_json(c, "phase_diagram.json",
             {{"command", "phase-diagram"}, {"cells", cells.size()}, {"oversmoothing_cells", n_over},
              {"boundary", boundary}});
  log << "phase-diagram: " << cells.size() << " cells, " << n_over << " oversmoothing, " << seconds_since(t0) << " s\n";
  return 0;
}

int cmd_critical(const SweepConfig& c, std::ostream& log) {
  const Instance inst = make_instance(c, split_seed(c.seed, 0));
  const auto kernel = c.hyper(1.0).kernel;
  struct Row {
    double g, eigen = 0, probe = 0, analytic = kNaN, t_eigen = 0, t_probe = 0;
  };
  std::vector<Row> rows;
  for (double g : c.g) rows.push_back({g});

  parallel_for(rows.size(), c.threads, [&](std::size_t i) {
    auto& r = rows[i];
    const auto A = build_shift_operator(inst.graph, r.g);
    auto t = Clock::now();
    r.eigen = critical_sigma(A, c.sigma_b2, kernel, c.bracket, c.tol);
    r.t_eigen = seconds_since(t);
    ProbeOptions po;
    po.max_layers = c.probe_layers;
    po.threshold = c.threshold;
    po.seed = split_seed(c.seed, 2 + i);
    t = Clock::now();
    r.probe = critical_sigma_by_probe(A, c.sigma_b2, kernel, c.bracket, c.probe_tol, po);
    r.t_probe = seconds_since(t);
    if (has_analytic_boundary(c)) r.analytic = analytic_or_nan(c, r.g);
  });

  auto f = open_output(c, "critical.csv");
  CsvWriter csv(f, {"g", "crit_eigen", "crit_probe", "gap", "crit_analytic"});
  json results = json::array();
  for (const auto& r : rows) {
    csv << r.g << r.eigen << r.probe << std::abs(r.eigen - r.probe) << r.analytic;
    csv.end_row();
    json item = {{"g", r.g}, {"crit_eigen", r.eigen}, {"crit_probe", r.probe}, {"gap", std::abs(r.eigen - r.probe)}};
    if (!std::isnan(r.analytic)) item["crit_analytic"] = r.analytic;
    results.push_back(item);
    // wall-times go to the log only so output files stay reproducible
    log << "g = " << format_double(r.g) << ": eigen " << format_double(r.eigen) << " (" << r.t_eigen << " s), probe "
        << format_double(r.probe) << " (" << r.t_probe << " s), gap " << format_double(std::abs(r.eigen - r.probe))
        << "\n";
  }
  write_json(c, "critical.json", {{"command", "critical"}, {"results", results}});
  return 0;
}

int cmd_depth_profile(const SweepConfig& c, std::ostream& log) {
  const auto t0 = Clock::now();
  const auto kernel = c.hyper(1.0).kernel;
  const int max_depth = c.depths.back();
  const std::set<int> depth_set(c.depths.begin(), c.depths.end());

  struct SeedResult {
    std::vector<double> crit;                 // per g
    std::vector<std::vector<double>> gp;      // [g * n_sigma + s][depth index]
    std::vector<std::vector<double>> finite;  // same layout, when enabled
    std::vector<std::vector<double>> sigma;   // absolute sigma_w2 [g][s]
  };
  std::vector<SeedResult> results(c.n_seeds);
  const std::size_t n_sigma = c.sigma_w2.size();

  parallel_for(results.size(), c.threads, [&](std::size_t seed_idx) {
    const std::uint64_t inst_seed = split_seed(c.seed, seed_idx);
    const Instance inst = make_instance(c, inst_seed);
    const auto& comm = communities_of(inst);
    const auto split = make_balanced_split(comm, c.per_class, split_seed(inst_seed, 2));
    const Eigen::VectorXd y_test = labels_of(comm, split.test_nodes);
    auto& res = results[seed_idx];

    for (std::size_t gi = 0; gi < c.g.size(); ++gi) {
      const auto A = build_shift_operator(inst.graph, c.g[gi]);
      double crit = kNaN;
      try {
        crit = critical_sigma(A, c.sigma_b2, kernel, c.bracket, c.tol);
      } catch (const Error& e) {
        if (c.sigma_w2_relative || e.code() != ErrorCode::InvalidBracket) throw;
      }
      res.crit.push_back(crit);
      res.sigma.emplace_back();
      for (std::size_t si = 0; si < n_sigma; ++si) {
        const double sw = c.sigma_w2_relative ? crit + c.sigma_w2[si] : c.sigma_w2[si];
        if (!(sw >= 0)) throw Error(ErrorCode::InvalidArgument, "sigma_w2 offset gives a negative weight variance");
        res.sigma.back().push_back(sw);
        const auto h = c.hyper(sw);

        std::vector<double> gp;
        for (const auto& row : depth_error_profile(A, inst.features, split, y_test, h, c.depths)) gp.push_back(row.mse);
        res.gp.push_back(std::move(gp));

        if (!c.finite_network) continue;
        auto sample = make_sample(static_cast<int>(inst.features.cols()), c.width, max_depth, sw, c.sigma_b2,
                                  split_seed(inst_seed, 100 + gi * n_sigma + si));
        sample.sigma_ro = c.sigma_ro;
        std::vector<double> fin;
        forward(sample, A, inst.features, [&](int l, const Eigen::MatrixXd& X) {
          if (!depth_set.count(l)) return;
          const auto readout = train_readout(X, A, split, c.ridge);
          const Eigen::VectorXd pred = readout.predict(A.matrix, X);
          fin.push_back(mean_squared_error(pred(split.test_nodes), y_test));
        });
        res.finite.push_back(std::move(fin));
      }
    }
  });

  const std::string grid_name = c.sigma_w2_relative ? "sigma_w2_offset" : "sigma_w2";
  auto write_tables = [&](const std::string& stem, auto pick) {
    {
      auto f = open_output(c, stem + ".csv");
      CsvWriter csv(f, {"seed", "g", "sigma_w2", "L", "mse"});
      for (int s = 0; s < c.n_seeds; ++s)
        for (std::size_t gi = 0; gi < c.g.size(); ++gi)
          for (std::size_t si = 0; si < n_sigma; ++si)
            for (std::size_t di = 0; di < c.depths.size(); ++di) {
              csv << s << c.g[gi] << results[s].sigma[gi][si] << c.depths[di]
                  << pick(results[s])[gi * n_sigma + si][di];
              csv.end_row();
            }
    }
    auto f = open_output(c, stem + "_mean.csv");
    CsvWriter csv(f, std::vector<std::string>{"g", grid_name, "L", "mse_mean", "mse_se"});
    for (std::size_t gi = 0; gi < c.g.size(); ++gi)
      for (std::size_t si = 0; si < n_sigma; ++si)
        for (std::size_t di = 0; di < c.depths.size(); ++di) {
          std::vector<double> v;
          for (const auto& r : results) v.push_back(pick(r)[gi * n_sigma + si][di]);
          const auto m = mean_se(v);
          csv << c.g[gi] << c.sigma_w2[si] << c.depths[di] << m.mean << m.se;
          csv.end_row();
        }
  };
  write_tables("depth_profile", [](const SeedResult& r) -> const auto& { return r.gp; });
  if (c.finite_network) write_tables("finite_profile", [](const SeedResult& r) -> const auto& { return r.finite; });

  json crits = json::array();
  {
    auto f = open_output(c, "critical_values.csv");
    CsvWriter csv(f, {"seed", "g", "sigma_w2_crit"});
    for (int s = 0; s < c.n_seeds; ++s)
      for (std::size_t gi = 0; gi < c.g.size(); ++gi) {
        csv << s << c.g[gi] << results[s].crit[gi];
        csv.end_row();
        crits.push_back(results[s].crit[gi]);
      }
  }
  write_json(c, "depth_profile.json",
             {{"command", "depth-profile"}, {"critical_values", crits}, {"finite_network", c.finite_network}});
  log << "depth-profile: " << c.n_seeds << " seeds, " << seconds_since(t0) << " s\n";
  return 0;
}

int cmd_validate(const SweepConfig& c, std::ostream& log) {
  const auto t0 = Clock::now();
  const Instance inst = make_instance(c, split_seed(c.seed, 0));
  const int d0 = static_cast<int>(inst.features.cols());
  auto f = open_output(c, "validate.csv");
  CsvWriter csv(f, {"g", "sigma_w2", "layer", "mu_gp", "mu_mean", "mu_se", "z"});
  json cells = json::array();
  double worst = 0;
  long within = 0, total = 0;
  std::size_t cell_idx = 0;
  for (double g : c.g)
    for (double sw : c.sigma_w2) {
      const auto A = build_shift_operator(inst.graph, g);
      const auto h = c.hyper(sw);
      std::vector<double> gp;
      iterate<double>(input_covariance(inst.features, A, h), A, h, c.layers - 1,
                      [&](const GpState<double>& s) { gp.push_back(gp_distance_report(s.K, h.kernel).mu); });

      const std::uint64_t cell_seed = split_seed(c.seed, 1000 + cell_idx++);
      std::vector<std::vector<double>> emp(c.n_seeds);
      parallel_for(emp.size(), c.threads, [&](std::size_t s) {
        emp[s].reserve(c.layers);
        forward(make_sample(d0, c.width, c.layers, sw, c.sigma_b2, split_seed(cell_seed, s)), A, inst.features,
                [&](int, const Eigen::MatrixXd& X) { emp[s].push_back(feature_distance_report(X).mu); });
      });

      double cell_worst = 0;
      for (int l = 0; l < c.layers; ++l) {
        std::vector<double> v;
        for (const auto& e : emp) v.push_back(e[l]);
        const auto m = mean_se(v);
        const double diff = m.mean - gp[l];
        double z = 0;
        if (m.se > 0) z = diff / m.se;
        else if (diff != 0) z = std::numeric_limits<double>::infinity();
        cell_worst = std::max(cell_worst, std::abs(z));
        within += std::abs(z) <= 3.0;
        ++total;
        csv << g << sw << l + 1 << gp[l] << m.mean << m.se << z;
        csv.end_row();
      }
      worst = std::max(worst, cell_worst);
      cells.push_back({{"g", g}, {"sigma_w2", sw}, {"max_abs_z", cell_worst}});
    }
  write_json(c, "validate.json",
             {{"command", "validate"}, {"cells", cells}, {"max_abs_z", worst},
              {"fraction_within_3se", double(within) / double(total)}});
  log << "validate: max |z| = " << worst << ", " << within << "/" << total << " layers within 3 SE, "
      << seconds_since(t0) << " s\n";
  return 0;
}

int cmd_spectrum(const SweepConfig& c, std::ostream& log) {
  const Instance inst = make_instance(c, split_seed(c.seed, 0));
  const Eigen::Index n = inst.graph.n_nodes();
  if (n * (n + 1) / 2 > 5000)
    throw Error(ErrorCode::InvalidArgument, "spectrum needs the dense pair-space operator; use at most 99 nodes");
  struct Cell {
    double g, sigma_w2;
    LinearizedMap map;
  };
  std::vector<Cell> cells;
  for (double g : c.g)
    for (double sw : c.sigma_w2) cells.push_back({g, sw, {}});

  parallel_for(cells.size(), c.threads, [&](std::size_t i) {
    auto& cell = cells[i];
    const auto A = build_shift_operator(inst.graph, cell.g);
    const auto h = c.hyper(cell.sigma_w2);
    const Eigen::MatrixXd K = c.fixed_point == "zero_distance"
                                  ? zero_distance_fixed_point(A, h)
                                  : find_equilibrium<double>(A, h, input_covariance(inst.features, A, h).K, c.layers).K;
    cell.map = build_linearized_map(A, h, K);
  });

  auto f = open_output(c, "spectrum.csv");
  CsvWriter csv(f, {"g", "sigma_w2", "index", "re", "im", "abs", "xi"});
  json summary = json::array();
  for (const auto& cell : cells) {
    const auto& ev = cell.map.eigenvalues;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      csv << cell.g << cell.sigma_w2 << static_cast<long long>(i) << ev(i).real() << ev(i).imag() << std::abs(ev(i))
          << cell.map.depths(i);
      csv.end_row();
    }
    summary.push_back({{"g", cell.g}, {"sigma_w2", cell.sigma_w2}, {"spectral_radius", cell.map.spectral_radius()}});
  }
  write_json(c, "spectrum.json", {{"command", "spectrum"}, {"cells", summary}});
  log << "spectrum: " << cells.size() << " operators\n";
  return 0;
}

int cmd_csbm(const SweepConfig& c, std::ostream& log) {
  const Instance inst = make_instance(c, split_seed(c.seed, 0));
  {
    auto f = open_output(c, "graph.edges");
    write_edge_list(f, inst.graph);
  }
  {
    auto f = open_output(c, "features.csv");
    write_features_csv(f, inst.features);
  }
  if (inst.graph.communities()) {
    auto f = open_output(c, "communities.csv");
    CsvWriter csv(f, {"node", "community"});
    for (int i = 0; i < inst.graph.n_nodes(); ++i) {
      csv << i << (*inst.graph.communities())[i];
      csv.end_row();
    }
  }
  write_json(c, "csbm.json",
             {{"command", "csbm"}, {"n_nodes", inst.graph.n_nodes()}, {"n_edges", inst.graph.edges().size()},
              {"connected", inst.graph.is_connected()}});
  log << "csbm: " << inst.graph.n_nodes() << " nodes, " << inst.graph.edges().size() << " edges\n";
  return 0;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gaussian-process analysis of deep graph convolutional networks"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int threads = 1;

  const std::map<std::string, std::pair<std::string, int (*)(const SweepConfig&, std::ostream&)>> commands = {
      {"phase-diagram", {"equilibrium distance over the (g, sigma_w2) grid", cmd_phase_diagram}},
      {"critical", {"critical weight variance by spectrum and by probe", cmd_critical}},
      {"depth-profile", {"generalization error against depth on CSBM instances", cmd_depth_profile}},
      {"validate", {"GP distances against finite-width networks", cmd_validate}},
      {"spectrum", {"eigenvalues and propagation depths of the linearized map", cmd_spectrum}},
      {"csbm", {"write one CSBM instance", cmd_csbm}},
  };
  std::map<std::string, std::array<CLI::Option*, 3>> overrides;
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", config_path, "JSON config file");
    overrides[name] = {sub->add_option("--seed", seed, "master seed"),
                       sub->add_option("--out", out_dir, "output directory"),
                       sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber)};
  }

  std::vector<const char*> argv{"gcngp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    SweepConfig config = config_path.empty() ? parse_config(json::object()) : load_config(config_path);
    const auto& opt = overrides.at(name);
    if (opt[0]->count()) config.seed = seed;
    if (opt[1]->count()) config.out = out_dir;
    if (opt[2]->count()) config.threads = threads;
    return commands.at(name).second(config, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return is_input_error(e.code()) ? 2 : 1;
  } catch (const json::exception& e) {
    err << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error (io): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gcngp::cli

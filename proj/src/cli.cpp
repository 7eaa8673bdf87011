#include "eigengap/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "eigengap/egtest.hpp"
#include "eigengap/ingest.hpp"
#include "eigengap/netmodel.hpp"
#include "eigengap/random.hpp"
#include "eigengap/simlab.hpp"

namespace eigengap::cli {

namespace fs = std::filesystem;

fs::path default_cache_dir() {
  if (const char* env = std::getenv("EIGENGAP_CACHE_DIR"); env && *env) return env;
  if (const char* xdg = std::getenv("XDG_DATA_HOME"); xdg && *xdg) return fs::path(xdg) / "eigengap" / "calibration";
  if (const char* home = std::getenv("HOME"); home && *home)
    return fs::path(home) / ".local" / "share" / "eigengap" / "calibration";
  return ".eigengap-cache";
}

namespace {

struct TestOptions {
  std::string input;
  double alpha = 0.05;
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  double tol = spectra::kDefaultTol;
  unsigned workers = 0;
  bool lcc = false;
  std::string cache_dir;
  bool no_cache = false;
  bool json = false;

  egtest::TestConfig config() const {
    egtest::TestConfig c;
    c.alpha = alpha;
    c.replicates = replicates;
    c.seed = seed;
    c.tol = tol;
    c.workers = workers;
    c.validate();
    return c;
  }

  std::optional<fs::path> cache() const {
    if (no_cache) return std::nullopt;
    return cache_dir.empty() ? default_cache_dir() : fs::path(cache_dir);
  }
};

void add_test_options(CLI::App* sub, TestOptions& o) {
  sub->add_option("--input,-i", o.input, "Edge list (two node ids per line)")->required()->check(CLI::ExistingFile);
  sub->add_option("--alpha", o.alpha, "Nominal level")->capture_default_str();
  sub->add_option("--replicates,-B", o.replicates, "Wigner draws for the null calibration")->capture_default_str();
  sub->add_option("--seed", o.seed, "Calibration seed")->capture_default_str();
  sub->add_option("--tol", o.tol, "Eigensolver residual tolerance")->capture_default_str();
  sub->add_option("--workers", o.workers, "Calibration threads (0 = all cores)")->capture_default_str();
  sub->add_flag("--lcc", o.lcc, "Restrict to the largest connected component");
  sub->add_option("--cache-dir", o.cache_dir, "Calibration cache directory");
  sub->add_flag("--no-cache", o.no_cache, "Do not read or write the calibration cache");
  sub->add_flag("--json", o.json, "Machine-readable output");
}

ingest::IngestResult load_graph(const TestOptions& o) {
  auto result = ingest::read_edge_list(o.input);
  if (o.lcc) result = ingest::restrict_to_lcc(std::move(result));
  return result;
}

nlohmann::json graph_json(const ingest::IngestResult& g) {
  return {{"nodes", g.graph.num_nodes()}, {"edges", g.graph.num_edges()}, {"ingest", ingest::to_json(g.report)}};
}

void print_graph(std::ostream& out, const ingest::IngestResult& g) {
  const auto& r = g.report;
  out << "graph: " << g.graph.num_nodes() << " nodes, " << g.graph.num_edges() << " edges\n"
      << "read: " << r.nodes_read << " node ids, " << r.edges_read << " edge lines, " << r.duplicates_dropped
      << " duplicates and " << r.self_loops_dropped << " self-loops dropped\n"
      << "largest component: " << r.lcc_nodes << " nodes, " << r.lcc_edges << " edges, density " << r.density << '\n';
}

void print_report(std::ostream& out, const egtest::TestReport& r) {
  out << "H0: K = " << r.k0 << "  vs  H1: " << r.k0 << " < K <= " << r.kmax << "   (Kmax = " << r.kmax
      << ", n = " << r.n << ")\n"
      << "T        = " << r.statistic << '\n'
      << "c_alpha  = " << r.critical_value << "   (alpha = " << r.alpha << ", B = " << r.replicates
      << ", seed = " << r.seed << ")\n"
      << "p-value  = " << r.p_value << '\n'
      << "lambda_" << r.k0 + 1 << " = " << r.eigenvalues_used[0] << ", lambda_" << r.kmax + 1 << " = "
      << r.eigenvalues_used[1] << ", lambda_" << r.kmax + 2 << " = " << r.eigenvalues_used[2] << '\n'
      << "decision: " << (r.reject ? "reject" : "do not reject") << " H0\n";
}

int cmd_test(const TestOptions& o, std::size_t k0, std::optional<std::size_t> kmax, std::ostream& out) {
  auto config = o.config();
  config.kmax_override = kmax;
  const auto graph = load_graph(o);
  egtest::resolve_kmax(graph.graph.num_nodes(), k0, kmax);
  egtest::Calibrator calibrator(o.cache(), config.workers, config.tol);
  const auto report = egtest::test_k(graph.graph, k0, config, calibrator);
  if (o.json) {
    out << nlohmann::json{{"graph", graph_json(graph)}, {"report", egtest::to_json(report)}}.dump(2) << '\n';
  } else {
    print_graph(out, graph);
    print_report(out, report);
  }
  return report.reject ? kReject : kOk;
}

int cmd_estimate(const TestOptions& o, std::optional<std::size_t> cap, std::ostream& out) {
  const auto config = o.config();
  const auto graph = load_graph(o);
  if (cap && *cap < 1) throw std::invalid_argument("--cap must be at least 1");
  egtest::Calibrator calibrator(o.cache(), config.workers, config.tol);
  const auto estimate = egtest::estimate_k(graph.graph, config, cap, calibrator);
  if (o.json) {
    out << nlohmann::json{{"graph", graph_json(graph)}, {"estimate", egtest::to_json(estimate)}}.dump(2) << '\n';
    return kOk;
  }
  print_graph(out, graph);
  out << std::setw(4) << "K0" << std::setw(6) << "Kmax" << std::setw(14) << "T" << std::setw(14) << "c_alpha"
      << std::setw(12) << "p_value" << "  decision\n";
  for (const auto& r : estimate.trail)
    out << std::setw(4) << r.k0 << std::setw(6) << r.kmax << std::setw(14) << r.statistic << std::setw(14)
        << r.critical_value << std::setw(12) << r.p_value << "  " << (r.reject ? "reject" : "do not reject") << '\n';
  if (estimate.at_cap)
    out << "k_hat >= " << estimate.cap << " (every K0 up to the cap was rejected)\n";
  else
    out << "k_hat = " << estimate.k_hat << '\n';
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Eigengap-ratio test for the number of communities in a network"};
  app.require_subcommand(1);

  TestOptions test_opts;
  std::size_t k0 = 0;
  std::optional<std::size_t> kmax;
  auto* test = app.add_subcommand("test", "Test H0: K = K0 on an edge list");
  add_test_options(test, test_opts);
  test->add_option("--k0", k0, "Hypothesized number of communities")->required()->check(CLI::PositiveNumber);
  test->add_option("--kmax", kmax, "Override the default Kmax = max(K0 + 4, ceil(n^0.4))");

  TestOptions est_opts;
  std::optional<std::size_t> cap;
  auto* estimate = app.add_subcommand("estimate-k", "Sequentially test K0 = 1, 2, ... and report the first non-rejection");
  add_test_options(estimate, est_opts);
  estimate->add_option("--cap", cap, "Largest K0 to test (default Kmax for K0 = 1)");

  std::string sim_config, sim_out, sim_cache;
  std::optional<unsigned> sim_workers;
  auto* simulate = app.add_subcommand("simulate", "Run a size/power experiment grid");
  simulate->add_option("--config", sim_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", sim_out, "Output CSV (a .json sidecar is written next to it)")->required();
  simulate->add_option("--workers", sim_workers, "Worker threads (overrides the config)");
  simulate->add_option("--cache-dir", sim_cache, "Calibration cache directory (overrides the config)");

  std::size_t cal_n = 0, cal_d = 0, cal_b = 1000;
  std::uint64_t cal_seed = 1;
  unsigned cal_workers = 0;
  std::string cal_cache;
  auto* calibrate = app.add_subcommand("calibrate", "Build a null calibration table in the cache");
  calibrate->add_option("--n", cal_n, "Matrix dimension")->required();
  calibrate->add_option("--d", cal_d, "Kmax - K0")->required()->check(CLI::PositiveNumber);
  calibrate->add_option("--replicates,-B", cal_b, "Wigner draws")->capture_default_str();
  calibrate->add_option("--seed", cal_seed, "Seed")->capture_default_str();
  calibrate->add_option("--workers", cal_workers, "Threads (0 = all cores)")->capture_default_str();
  calibrate->add_option("--cache-dir", cal_cache, "Cache directory");

  std::string gen_model, gen_q, gen_out, gen_spec_out;
  std::size_t gen_n = 0, gen_k = 0;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen", "Sample a block-model network and write it as an edge list");
  gen->add_option("--model", gen_model, "sbm | dcsbm | dcmm")->required();
  gen->add_option("--n", gen_n, "Number of nodes")->required()->check(CLI::PositiveNumber);
  gen->add_option("--k", gen_k, "Number of communities")->required()->check(CLI::PositiveNumber);
  gen->add_option("--q", gen_q, "planted-dense | planted-sparse | decay-dense | decay-sparse")->required();
  gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output edge list ('-' for stdout)")->required();
  gen->add_option("--spec-out", gen_spec_out, "Also write the model spec as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kUsage;
  }

  try {
    if (*test) return cmd_test(test_opts, k0, kmax, out);
    if (*estimate) return cmd_estimate(est_opts, cap, out);

    if (*simulate) {
      auto config = simlab::load_config(sim_config);
      if (sim_workers) config.workers = *sim_workers;
      if (!sim_cache.empty()) config.cache_dir = sim_cache;
      config.validate();
      const auto table = simlab::run_experiment(config, [&err](const simlab::Cell& c) {
        err << "cell K0=" << c.K0 << " K=" << c.K << ": rejection rate " << c.rejection_rate << " ("
            << c.replicates << " replicates, " << c.failures << " failures" << (c.flagged() ? ", FLAGGED" : "")
            << ")\n";
      });
      simlab::export_table(table, sim_out);
      out << simlab::table_csv(table);
      return kOk;
    }

    if (*calibrate) {
      const fs::path dir = cal_cache.empty() ? default_cache_dir() : fs::path(cal_cache);
      if (cal_b < 100) throw std::invalid_argument("need at least 100 replicates");
      if (cal_d + 2 > cal_n) throw std::invalid_argument("--d + 2 must not exceed --n");
      egtest::Calibrator calibrator(dir, cal_workers);
      const egtest::CalibrationKey key{cal_n, cal_d, cal_b, cal_seed};
      const auto& table = calibrator.get(key);
      out << "table: " << (dir / egtest::calibration_file_name(key)).string() << '\n'
          << "degenerate draws: " << table.degenerate_count << '\n'
          << "c_0.10 = " << egtest::critical_value(table, 0.10) << ", c_0.05 = " << egtest::critical_value(table, 0.05)
          << ", c_0.01 = " << egtest::critical_value(table, 0.01) << '\n';
      return kOk;
    }

    if (*gen) {
      const auto model = simlab::parse_model(gen_model);
      const auto family = simlab::parse_q_family(gen_q);
      const auto design = simlab::build_design(model, family, gen_n, gen_k, derive_seed(gen_seed, {1}));
      const auto p = netmodel::build_probability_matrix(design.spec, design.options);
      const auto graph = netmodel::sample_adjacency(p, derive_seed(gen_seed, {2}));
      if (gen_out == "-") {
        write_edge_list(graph, out);
      } else {
        std::ofstream file(gen_out, std::ios::binary | std::ios::trunc);
        if (!file) throw std::runtime_error("cannot write " + gen_out);
        write_edge_list(graph, file);
        err << "wrote " << graph.num_edges() << " edges on " << graph.num_nodes() << " nodes to " << gen_out << '\n';
      }
      if (!gen_spec_out.empty()) {
        std::ofstream file(gen_spec_out, std::ios::binary | std::ios::trunc);
        if (!file) throw std::runtime_error("cannot write " + gen_spec_out);
        file << netmodel::spec_to_json(design.spec, gen_seed).dump() << '\n';
      }
      return kOk;
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kError;
  }
  return kUsage;
}

}  // namespace eigengap::cli

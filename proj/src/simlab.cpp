#include "eigengap/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "eigengap/parallel.hpp"
#include "eigengap/random.hpp"

namespace eigengap::simlab {

namespace {

std::string lowercase(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return c == '-' ? '_' : std::tolower(c); });
  return s;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, end);
}

}  // namespace

std::string_view to_string(Model model) {
  switch (model) {
    case Model::sbm: return "sbm";
    case Model::dcsbm: return "dcsbm";
    case Model::dcmm: return "dcmm";
  }
  return "unknown";
}

std::string_view to_string(QFamily family) {
  switch (family) {
    case QFamily::planted_dense: return "planted_dense";
    case QFamily::planted_sparse: return "planted_sparse";
    case QFamily::decay_dense: return "decay_dense";
    case QFamily::decay_sparse: return "decay_sparse";
  }
  return "unknown";
}

Model parse_model(std::string_view text) {
  const auto s = lowercase(text);
  if (s == "sbm") return Model::sbm;
  if (s == "dcsbm") return Model::dcsbm;
  if (s == "dcmm") return Model::dcmm;
  throw std::invalid_argument("unknown model '" + std::string(text) + "'");
}

QFamily parse_q_family(std::string_view text) {
  const auto s = lowercase(text);
  if (s == "planted_dense") return QFamily::planted_dense;
  if (s == "planted_sparse") return QFamily::planted_sparse;
  if (s == "decay_dense") return QFamily::decay_dense;
  if (s == "decay_sparse") return QFamily::decay_sparse;
  throw std::invalid_argument("unknown Q family '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (replicates < 1) throw std::invalid_argument("need at least one replicate per cell");
  if (calibration_replicates < 100) throw std::invalid_argument("need at least 100 calibration replicates");
  if (alpha * static_cast<double>(calibration_replicates) < 1.0)
    throw std::invalid_argument("alpha below the calibration resolution 1/B");
  for (auto K : K_grid) {
    if (K < 1) throw std::invalid_argument("K must be positive");
    if (model == Model::dcmm) {
      if (K < 2 || static_cast<double>(n) * (1.0 / static_cast<double>(K) - 0.03) < 1.0)
        throw std::invalid_argument("K = " + std::to_string(K) + " violates the DCMM allocation for n = " +
                                    std::to_string(n));
    } else if (n % K != 0) {
      throw std::invalid_argument("K = " + std::to_string(K) + " does not divide n = " + std::to_string(n));
    }
  }
  for (auto K0 : K0_grid) egtest::kmax_rule(n, K0);
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {{"model", to_string(c.model)},
          {"q_family", to_string(c.q_family)},
          {"n", c.n},
          {"K_grid", c.K_grid},
          {"K0_grid", c.K0_grid},
          {"replicates", c.replicates},
          {"alpha", c.alpha},
          {"seed", c.seed},
          {"calibration_replicates", c.calibration_replicates},
          {"tol", c.tol},
          {"renormalize_weights", c.renormalize_weights}};
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  ExperimentConfig c;
  try {
    if (doc.contains("model")) c.model = parse_model(doc.at("model").get<std::string>());
    if (doc.contains("q_family")) c.q_family = parse_q_family(doc.at("q_family").get<std::string>());
    c.n = doc.value("n", c.n);
    c.K_grid = doc.value("K_grid", c.K_grid);
    c.K0_grid = doc.value("K0_grid", c.K0_grid);
    c.replicates = doc.value("replicates", c.replicates);
    c.alpha = doc.value("alpha", c.alpha);
    c.seed = doc.value("seed", c.seed);
    c.calibration_replicates = doc.value("calibration_replicates", c.calibration_replicates);
    c.tol = doc.value("tol", c.tol);
    c.workers = doc.value("workers", c.workers);
    c.renormalize_weights = doc.value("renormalize_weights", c.renormalize_weights);
    if (doc.contains("cache_dir") && !doc.at("cache_dir").is_null())
      c.cache_dir = doc.at("cache_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

Design build_design(Model model, QFamily family, std::size_t n, std::size_t K, std::uint64_t seed,
                    bool renormalize_weights) {
  using namespace netmodel;
  Membership membership = model == Model::dcmm ? make_membership_dcmm(n, K) : make_membership_pure(n, K);
  DegreeWeights weights = model == Model::sbm ? DegreeWeights::ones(n) : sample_degree_weights(n, seed);
  if (renormalize_weights && model == Model::dcsbm) weights = renormalize_per_community(weights, membership);

  const double sparse = sparse_edge_scale(n);
  CommunityMatrix q = [&] {
    switch (family) {
      case QFamily::planted_dense: return make_q_planted(K, 0.5, 0.1);
      case QFamily::planted_sparse: return make_q_planted(K, 5.0 * sparse, sparse);
      case QFamily::decay_dense: return make_q_decay(K, 1.0);
      case QFamily::decay_sparse: return make_q_decay(K, 5.0 * sparse);
    }
    throw std::invalid_argument("unknown Q family");
  }();

  const ModelKind kind = model == Model::sbm ? ModelKind::sbm : model == Model::dcsbm ? ModelKind::dcsbm : ModelKind::dcmm;
  BuildOptions options;
  options.clip_to_unit = model != Model::sbm && family == QFamily::decay_dense;
  return {BlockModelSpec{kind, std::move(q), std::move(membership), std::move(weights)}, options};
}

const Cell* RejectionTable::find(std::size_t K0, std::size_t K) const {
  for (const auto& c : cells)
    if (c.K0 == K0 && c.K == K) return &c;
  return nullptr;
}

RejectionTable run_experiment(const ExperimentConfig& config, egtest::Calibrator& calibrator,
                              const Progress& progress) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  RejectionTable table;
  table.config = to_json(config);
  std::vector<std::size_t> k0s = config.K0_grid;
  std::vector<std::size_t> ks = config.K_grid;
  std::sort(k0s.begin(), k0s.end());
  k0s.erase(std::unique(k0s.begin(), k0s.end()), k0s.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (auto K0 : k0s)
    for (auto K : ks)
      if (K0 <= K) table.cells.push_back({K0, K, 0.0, config.replicates, 0});

  egtest::TestConfig test;
  test.alpha = config.alpha;
  test.replicates = config.calibration_replicates;
  test.seed = config.seed;
  test.tol = config.tol;
  test.workers = config.workers;

  // Tables depend only on (n, d): build them up front, each internally parallel.
  for (auto K0 : k0s) {
    if (std::none_of(table.cells.begin(), table.cells.end(), [&](const Cell& c) { return c.K0 == K0; })) continue;
    const auto kmax = egtest::kmax_rule(config.n, K0);
    calibrator.get({config.n, kmax - K0, test.replicates, test.seed});
  }

  enum Outcome : char { accept = 0, reject = 1, failure = 2 };
  const std::size_t R = config.replicates;
  std::vector<char> outcomes(table.cells.size() * R, failure);
  std::vector<std::atomic<std::size_t>> done(table.cells.size());
  std::mutex progress_mutex;
  const auto tally = [&](std::size_t c, Cell& cell) {
    std::size_t rejections = 0;
    cell.failures = 0;
    for (std::size_t r = 0; r < R; ++r) {
      rejections += outcomes[c * R + r] == reject;
      cell.failures += outcomes[c * R + r] == failure;
    }
    cell.rejection_rate = cell.failures == R ? std::numeric_limits<double>::quiet_NaN()
                                             : static_cast<double>(rejections) / static_cast<double>(R - cell.failures);
  };

  parallel_for(outcomes.size(), config.workers, [&](std::size_t task) {
    const std::size_t c = task / R;
    const std::size_t r = task % R;
    const Cell& cell = table.cells[c];
    const std::uint64_t base = derive_seed(config.seed, {cell.K, cell.K0, r});
    try {
      const auto design =
          build_design(config.model, config.q_family, config.n, cell.K, derive_seed(base, {1}), config.renormalize_weights);
      const auto p = netmodel::build_probability_matrix(design.spec, design.options);
      const auto graph = netmodel::sample_adjacency(p, derive_seed(base, {2}));
      outcomes[task] = egtest::test_k(graph, cell.K0, test, calibrator).reject ? reject : accept;
    } catch (const std::exception&) {
      outcomes[task] = failure;
    }
    if (done[c].fetch_add(1) + 1 == R && progress) {
      Cell snapshot = cell;
      tally(c, snapshot);
      std::lock_guard lock(progress_mutex);
      progress(snapshot);
    }
  });

  for (std::size_t c = 0; c < table.cells.size(); ++c) tally(c, table.cells[c]);
  table.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return table;
}

RejectionTable run_experiment(const ExperimentConfig& config, const Progress& progress) {
  egtest::Calibrator calibrator(config.cache_dir, config.workers, config.tol);
  return run_experiment(config, calibrator, progress);
}

std::string table_csv(const RejectionTable& table) {
  std::ostringstream out;
  out << "K0,K,rejection_rate,replicates,failures\n";
  for (const auto& c : table.cells)
    out << c.K0 << ',' << c.K << ',' << format_double(c.rejection_rate) << ',' << c.replicates << ',' << c.failures
        << '\n';
  return out.str();
}

void export_table(const RejectionTable& table, const std::filesystem::path& csv_path) {
  {
    std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + csv_path.string());
    out << table_csv(table);
    if (!out) throw std::runtime_error("failed writing " + csv_path.string());
  }
  nlohmann::json cells = nlohmann::json::array();
  std::size_t failures = 0;
  for (const auto& c : table.cells) {
    failures += c.failures;
    cells.push_back({{"K0", c.K0},
                     {"K", c.K},
                     {"rejection_rate", std::isnan(c.rejection_rate) ? nlohmann::json(nullptr) : nlohmann::json(c.rejection_rate)},
                     {"replicates", c.replicates},
                     {"failures", c.failures},
                     {"flagged", c.flagged()}});
  }
  const nlohmann::json sidecar = {
      {"config", table.config}, {"cells", cells}, {"wall_seconds", table.wall_seconds}, {"total_failures", failures}};
  auto json_path = csv_path;
  json_path.replace_extension(".json");
  std::ofstream out(json_path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + json_path.string());
  out << sidecar.dump(2) << '\n';
}

std::vector<Cell> parse_table_csv(std::string_view text) {
  std::vector<Cell> cells;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "K0,K,rejection_rate,replicates,failures")
    throw std::invalid_argument("missing rejection-table CSV header");
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    for (std::string f; std::getline(row, f, ',');) fields.push_back(f);
    if (fields.size() != 5) throw std::invalid_argument("line " + std::to_string(number) + ": expected 5 fields");
    try {
      Cell c;
      c.K0 = std::stoull(fields[0]);
      c.K = std::stoull(fields[1]);
      c.rejection_rate = fields[2] == "nan" ? std::numeric_limits<double>::quiet_NaN() : std::stod(fields[2]);
      c.replicates = std::stoull(fields[3]);
      c.failures = std::stoull(fields[4]);
      cells.push_back(c);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("line " + std::to_string(number) + ": malformed number");
    }
  }
  return cells;
}

}  // namespace eigengap::simlab

#include "eigengap/egtest.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "eigengap/parallel.hpp"
#include "eigengap/random.hpp"

namespace eigengap::egtest {

namespace fs = std::filesystem;

void TestConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (replicates < 100) throw std::invalid_argument("need at least 100 calibration replicates");
  if (!(tol > 0.0)) throw std::invalid_argument("eigensolver tolerance must be positive");
}

std::size_t kmax_rule(std::size_t n, std::size_t k0) {
  if (n < 8) throw std::invalid_argument("n = " + std::to_string(n) + " is too small for the eigengap test");
  if (k0 < 1) throw std::invalid_argument("K0 must be at least 1");
  if (k0 + 6 > n) throw std::invalid_argument("K0 = " + std::to_string(k0) + " leaves too few eigenvalues for n = " +
                                              std::to_string(n));
  // ceil(n^{2/5}) is the least k with k^5 >= n^2; exact in integers.
  const auto n2 = static_cast<unsigned __int128>(n) * n;
  auto k = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 0.4)));
  k = k > 2 ? k - 2 : 0;
  const auto fifth = [](std::size_t v) {
    unsigned __int128 r = 1;
    for (int i = 0; i < 5; ++i) r *= v;
    return r;
  };
  while (fifth(k) < n2) ++k;
  return std::min(std::max(k0 + 4, k), n - 2);
}

namespace {

// (eigs[first] - eigs[last]) / (eigs[last] - eigs[last + 1]), 0-based.
double gap_ratio(std::span<const double> eigs, std::size_t first, std::size_t last) {
  const double head = eigs[first];
  const double middle = eigs[last];
  const double tail = eigs[last + 1];
  const double denominator = middle - tail;
  if (!(std::abs(denominator) > 1e-14 * std::max(1.0, std::abs(middle))))
    throw DegenerateGapError("eigengap lambda_{Kmax+1} - lambda_{Kmax+2} vanishes");
  return (head - middle) / denominator;
}

}  // namespace

double eigengap_ratio(std::span<const double> eigs, std::size_t k0, std::size_t kmax) {
  if (k0 < 1) throw std::invalid_argument("K0 must be at least 1");
  if (k0 >= kmax) throw std::invalid_argument("need K0 < Kmax");
  if (eigs.size() < kmax + 2) throw std::invalid_argument("need at least Kmax + 2 eigenvalues");
  // 1-based lambda_k is eigs[k - 1].
  return gap_ratio(eigs, k0, kmax);
}

// ---------------------------------------------------------------------------

CalibrationTable calibrate_null(std::size_t n, std::size_t d, std::size_t replicates, std::uint64_t seed,
                                unsigned workers, double tol) {
  if (d < 1) throw std::invalid_argument("calibration needs d >= 1");
  if (d + 2 > n) throw std::invalid_argument("calibration needs d + 2 <= n");
  if (replicates < 1) throw std::invalid_argument("calibration needs at least one replicate");

  CalibrationTable table;
  table.key = {n, d, replicates, seed};
  table.samples.resize(replicates);
  std::vector<std::size_t> redraws(replicates, 0);
  std::atomic<std::size_t> total_redraws{0};
  const std::size_t budget = replicates / 10;

  spectra::SolverOptions options;
  options.tol = tol;
  parallel_for(replicates, workers, [&](std::size_t b) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      try {
        const auto top = spectra::sample_wigner_top(n, d + 2, derive_seed(seed, {b, attempt}), options);
        table.samples[b] = gap_ratio(top.values, 0, d);
        return;
      } catch (const DegenerateGapError&) {
      } catch (const spectra::ConvergenceError&) {
      }
      ++redraws[b];
      if (total_redraws.fetch_add(1) + 1 > budget)
        throw std::runtime_error("calibration aborted: more than B/10 degenerate Wigner draws");
    }
  });
  std::sort(table.samples.begin(), table.samples.end());
  for (auto r : redraws) table.degenerate_count += r;
  return table;
}

double critical_value(const CalibrationTable& table, double alpha) {
  const auto b = table.samples.size();
  if (b == 0) throw std::invalid_argument("empty calibration table");
  if (!(alpha < 1.0) || alpha * static_cast<double>(b) < 1.0 - 1e-9)
    throw std::invalid_argument("alpha below the Monte-Carlo resolution 1/B or not below 1");
  const double position = (1.0 - alpha) * static_cast<double>(b);
  auto k = static_cast<std::size_t>(std::ceil(position - 1e-9 * static_cast<double>(b)));
  k = std::clamp<std::size_t>(k, 1, b);
  return table.samples[k - 1];
}

double p_value(const CalibrationTable& table, double statistic) {
  const auto& s = table.samples;
  if (s.empty()) throw std::invalid_argument("empty calibration table");
  const auto at_least = static_cast<double>(s.end() - std::lower_bound(s.begin(), s.end(), statistic));
  return (1.0 + at_least) / (static_cast<double>(s.size()) + 1.0);
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const CalibrationTable& table) {
  return {{"key", {{"n", table.key.n}, {"d", table.key.d}, {"B", table.key.replicates}, {"seed", table.key.seed}}},
          {"samples", table.samples},
          {"degenerate_count", table.degenerate_count}};
}

CalibrationTable calibration_from_json(const nlohmann::json& doc) {
  CalibrationTable t;
  const auto& key = doc.at("key");
  t.key = {key.at("n").get<std::size_t>(), key.at("d").get<std::size_t>(), key.at("B").get<std::size_t>(),
           key.at("seed").get<std::uint64_t>()};
  t.samples = doc.at("samples").get<std::vector<double>>();
  t.degenerate_count = doc.at("degenerate_count").get<std::size_t>();
  if (t.samples.size() != t.key.replicates || !std::is_sorted(t.samples.begin(), t.samples.end()))
    throw std::invalid_argument("calibration table is not a sorted sample of length B");
  return t;
}

std::string calibration_file_name(const CalibrationKey& key) {
  std::ostringstream name;
  name << "calib_n" << key.n << "_d" << key.d << "_B" << key.replicates << "_s" << key.seed << ".json";
  return name.str();
}

void save_calibration(const CalibrationTable& table, const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path target = dir / calibration_file_name(table.key);
  const fs::path temp = dir / (target.filename().string() + ".tmp." + std::to_string(::getpid()) + "." +
                               std::to_string(reinterpret_cast<std::uintptr_t>(&table)));
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write calibration cache file " + temp.string());
    out << to_json(table).dump() << '\n';
    if (!out) throw std::runtime_error("failed writing " + temp.string());
  }
  fs::rename(temp, target);
}

std::optional<CalibrationTable> load_calibration(const CalibrationKey& key, const fs::path& dir) {
  const fs::path file = dir / calibration_file_name(key);
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    auto table = calibration_from_json(nlohmann::json::parse(in));
    if (table.key != key) return std::nullopt;
    return table;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are rebuilt
  }
}

Calibrator::Calibrator(std::optional<fs::path> cache_dir, unsigned workers, double tol)
    : cache_dir_(std::move(cache_dir)), workers_(workers), tol_(tol) {}

const CalibrationTable& Calibrator::get(const CalibrationKey& key) {
  std::shared_ptr<std::once_flag> flag;
  {
    std::lock_guard lock(mutex_);
    if (auto it = tables_.find(key); it != tables_.end()) return *it->second;
    auto& slot = pending_[key];
    if (!slot) slot = std::make_shared<std::once_flag>();
    flag = slot;
  }
  std::call_once(*flag, [&] {
    std::optional<CalibrationTable> table;
    if (cache_dir_) table = load_calibration(key, *cache_dir_);
    if (!table) {
      table = calibrate_null(key.n, key.d, key.replicates, key.seed, workers_, tol_);
      if (cache_dir_) save_calibration(*table, *cache_dir_);
    }
    std::lock_guard lock(mutex_);
    tables_[key] = std::make_unique<CalibrationTable>(std::move(*table));
  });
  std::lock_guard lock(mutex_);
  return *tables_.at(key);
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const TestReport& r) {
  return {{"K0", r.k0},
          {"Kmax", r.kmax},
          {"n", r.n},
          {"T", r.statistic},
          {"c_alpha", r.critical_value},
          {"p_value", r.p_value},
          {"alpha", r.alpha},
          {"reject", r.reject},
          {"eigenvalues_used", r.eigenvalues_used},
          {"replicates", r.replicates},
          {"seed", r.seed}};
}

nlohmann::json to_json(const KEstimate& e) {
  nlohmann::json trail = nlohmann::json::array();
  for (const auto& r : e.trail) trail.push_back(to_json(r));
  return {{"k_hat", e.k_hat}, {"at_cap", e.at_cap}, {"cap", e.cap}, {"trail", std::move(trail)}};
}

spectra::Spectrum adjacency_top(const SymmetricGraph& graph, std::size_t count, double tol) {
  spectra::SolverOptions options;
  options.tol = tol;
  return spectra::top_eigenvalues(spectra::SymmetricOperator::from_graph(graph), count, options);
}

std::size_t resolve_kmax(std::size_t n, std::size_t k0, const std::optional<std::size_t>& kmax_override) {
  if (k0 < 1) throw std::invalid_argument("K0 must be at least 1");
  if (!kmax_override) return kmax_rule(n, k0);
  const std::size_t kmax = *kmax_override;
  if (k0 >= kmax) throw std::invalid_argument("K0 must be smaller than Kmax");
  if (kmax + 2 > n) throw std::invalid_argument("Kmax + 2 exceeds the number of nodes");
  return kmax;
}

TestReport test_k(const SymmetricGraph& graph, std::size_t k0, const TestConfig& config, Calibrator& calibrator) {
  config.validate();
  if (graph.empty()) throw std::invalid_argument("cannot test an empty graph");
  const std::size_t n = graph.num_nodes();
  const std::size_t kmax = resolve_kmax(n, k0, config.kmax_override);

  const auto spectrum = adjacency_top(graph, kmax + 2, config.tol);
  TestReport report;
  report.k0 = k0;
  report.kmax = kmax;
  report.n = n;
  report.alpha = config.alpha;
  report.replicates = config.replicates;
  report.seed = config.seed;
  report.statistic = eigengap_ratio(spectrum.values, k0, kmax);
  report.eigenvalues_used = {spectrum.values[k0], spectrum.values[kmax], spectrum.values[kmax + 1]};

  const auto& table = calibrator.get({n, kmax - k0, config.replicates, config.seed});
  report.critical_value = critical_value(table, config.alpha);
  report.p_value = p_value(table, report.statistic);
  report.reject = report.statistic > report.critical_value;
  return report;
}

TestReport test_k(const SymmetricGraph& graph, std::size_t k0, const TestConfig& config) {
  Calibrator calibrator(std::nullopt, config.workers, config.tol);
  return test_k(graph, k0, config, calibrator);
}

KEstimate estimate_k(const SymmetricGraph& graph, const TestConfig& config, std::optional<std::size_t> cap,
                     Calibrator& calibrator) {
  KEstimate estimate;
  if (graph.empty()) throw std::invalid_argument("cannot test an empty graph");
  estimate.cap = cap ? *cap : kmax_rule(graph.num_nodes(), 1);
  if (estimate.cap < 1) throw std::invalid_argument("cap must be at least 1");
  for (std::size_t k0 = 1; k0 <= estimate.cap; ++k0) {
    try {
      estimate.trail.push_back(test_k(graph, k0, config, calibrator));
    } catch (const std::exception& e) {
      throw EstimateError("test at K0 = " + std::to_string(k0) + " failed: " + e.what(), estimate.trail);
    }
    if (!estimate.trail.back().reject) {
      estimate.k_hat = k0;
      return estimate;
    }
  }
  estimate.k_hat = estimate.cap;
  estimate.at_cap = true;
  return estimate;
}

}  // namespace eigengap::egtest

#pragma once

// Eigengap-ratio test for the rank of the edge-probability matrix (the number
// of communities K) of a block-model network.
//
// For H0: K = K0 against K0 < K <= Kmax, with lambda_k the k-th largest
// eigenvalue of the adjacency matrix A (signed ordering),
//
//   T = (lambda_{K0+1} - lambda_{Kmax+1}) / (lambda_{Kmax+1} - lambda_{Kmax+2}).
//
// Under H0, T behaves like the same ratio built from the top d + 2 eigenvalues
// of an n x n Gaussian Wigner matrix with entry variance 1/n, d = Kmax - K0.
// That null law is tabulated by Monte Carlo and H0 is rejected when T exceeds
// its upper alpha quantile.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "eigengap/graph.hpp"
#include "eigengap/spectra.hpp"

namespace eigengap::egtest {

/// Zero (or numerically zero) denominator gap.
class DegenerateGapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TestConfig {
  double alpha = 0.05;
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
  std::optional<std::size_t> kmax_override;
  double tol = spectra::kDefaultTol;
  /// Calibration threads; 0 means hardware concurrency.
  unsigned workers = 0;

  /// Throws std::invalid_argument unless 0 < alpha < 1 and replicates >= 100.
  void validate() const;
};

struct CalibrationKey {
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;

  auto operator<=>(const CalibrationKey&) const = default;
};

/// Sorted Monte-Carlo draws of the Wigner eigengap ratio.
struct CalibrationTable {
  CalibrationKey key;
  std::vector<double> samples;
  std::size_t degenerate_count = 0;
};

nlohmann::json to_json(const CalibrationTable& table);
CalibrationTable calibration_from_json(const nlohmann::json& doc);
/// "calib_n<n>_d<d>_B<B>_s<seed>.json"
std::string calibration_file_name(const CalibrationKey& key);

/// max(K0 + 4, ceil(n^{2/5})), capped at n - 2. Requires n >= 8, K0 >= 1 and
/// K0 + 6 <= n.
std::size_t kmax_rule(std::size_t n, std::size_t k0);

/// (eigs[K0+1] - eigs[Kmax+1]) / (eigs[Kmax+1] - eigs[Kmax+2]) with 1-based
/// indices into a descending list. Throws DegenerateGapError when the
/// denominator vanishes.
double eigengap_ratio(std::span<const double> eigs, std::size_t k0, std::size_t kmax);

/// B draws of (l_1 - l_{d+1}) / (l_{d+1} - l_{d+2}) from n x n Wigner
/// matrices. Draw b uses substreams of (seed, b); degenerate draws are redrawn
/// on a fresh substream and counted. Independent of `workers`.
CalibrationTable calibrate_null(std::size_t n, std::size_t d, std::size_t replicates, std::uint64_t seed,
                                unsigned workers = 0, double tol = spectra::kDefaultTol);

/// ceil((1 - alpha) B)-th order statistic. Requires 1/B <= alpha < 1.
double critical_value(const CalibrationTable& table, double alpha);

/// (1 + #{samples >= T}) / (B + 1).
double p_value(const CalibrationTable& table, double statistic);

/// Shares calibration tables across tests: an in-memory map, optionally backed
/// by a directory of JSON files written atomically. Thread-safe.
class Calibrator {
 public:
  explicit Calibrator(std::optional<std::filesystem::path> cache_dir = std::nullopt, unsigned workers = 0,
                      double tol = spectra::kDefaultTol);

  const CalibrationTable& get(const CalibrationKey& key);
  const std::optional<std::filesystem::path>& cache_dir() const noexcept { return cache_dir_; }

 private:
  std::optional<std::filesystem::path> cache_dir_;
  unsigned workers_;
  double tol_;
  std::mutex mutex_;
  std::map<CalibrationKey, std::shared_ptr<std::once_flag>> pending_;
  std::map<CalibrationKey, std::unique_ptr<CalibrationTable>> tables_;
};

void save_calibration(const CalibrationTable& table, const std::filesystem::path& dir);
std::optional<CalibrationTable> load_calibration(const CalibrationKey& key, const std::filesystem::path& dir);

struct TestReport {
  std::size_t k0 = 0;
  std::size_t kmax = 0;
  std::size_t n = 0;
  double statistic = 0.0;
  double critical_value = 0.0;
  double p_value = 1.0;
  double alpha = 0.05;
  bool reject = false;
  /// lambda_{K0+1}, lambda_{Kmax+1}, lambda_{Kmax+2}.
  std::array<double, 3> eigenvalues_used{};
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const TestReport& report);

/// Top Kmax + 2 adjacency eigenvalues of `graph`.
spectra::Spectrum adjacency_top(const SymmetricGraph& graph, std::size_t count, double tol);

/// Resolves Kmax for (n, K0) from the override or kmax_rule and checks that
/// K0 < Kmax and Kmax + 2 <= n.
std::size_t resolve_kmax(std::size_t n, std::size_t k0, const std::optional<std::size_t>& kmax_override);

TestReport test_k(const SymmetricGraph& graph, std::size_t k0, const TestConfig& config, Calibrator& calibrator);
TestReport test_k(const SymmetricGraph& graph, std::size_t k0, const TestConfig& config);

struct KEstimate {
  /// First non-rejected K0; equals `cap` with at_cap set when every tested
  /// K0 up to cap was rejected ("K >= cap").
  std::size_t k_hat = 0;
  bool at_cap = false;
  std::size_t cap = 0;
  std::vector<TestReport> trail;
};

nlohmann::json to_json(const KEstimate& estimate);

/// Raised by estimate_k; keeps the reports completed before the failure.
class EstimateError : public std::runtime_error {
 public:
  EstimateError(const std::string& what, std::vector<TestReport> trail)
      : std::runtime_error(what), trail_(std::move(trail)) {}
  const std::vector<TestReport>& trail() const noexcept { return trail_; }

 private:
  std::vector<TestReport> trail_;
};

/// Runs test_k for K0 = 1, 2, ... up to cap (default kmax_rule(n, 1)).
KEstimate estimate_k(const SymmetricGraph& graph, const TestConfig& config, std::optional<std::size_t> cap,
                     Calibrator& calibrator);

}  // namespace eigengap::egtest

#pragma once

// Size/power experiments for the eigengap-ratio test: for every (K, K0) cell
// of a grid, simulate networks with K communities from one of the standard
// block-model designs and record how often H0: K = K0 is rejected.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eigengap/egtest.hpp"
#include "eigengap/netmodel.hpp"

namespace eigengap::simlab {

enum class Model { sbm, dcsbm, dcmm };
enum class QFamily { planted_dense, planted_sparse, decay_dense, decay_sparse };

std::string_view to_string(Model model);
std::string_view to_string(QFamily family);
/// Accepts "sbm"/"dcsbm"/"dcmm" (any case).
Model parse_model(std::string_view text);
/// Accepts underscores or dashes: "planted_dense", "planted-dense", ...
QFamily parse_q_family(std::string_view text);

struct ExperimentConfig {
  Model model = Model::sbm;
  QFamily q_family = QFamily::planted_dense;
  std::size_t n = 600;
  std::vector<std::size_t> K_grid{3, 5};
  std::vector<std::size_t> K0_grid{3};
  std::size_t replicates = 200;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  /// Wigner draws per calibration table.
  std::size_t calibration_replicates = 1000;
  double tol = spectra::kDefaultTol;
  unsigned workers = 0;
  std::optional<std::filesystem::path> cache_dir;
  /// Rescale degree weights to sum to community sizes (pure designs only).
  bool renormalize_weights = false;

  /// Throws std::invalid_argument on an unusable grid.
  void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// One simulated design: spec plus the build options it needs.
struct Design {
  netmodel::BlockModelSpec spec;
  netmodel::BuildOptions options;
};

/// Membership by model (pure blocks, or the DCMM allocation), degree weights
/// (ones for SBM, sampled from `seed` otherwise) and Q by family. Decay
/// families with degree correction can exceed 1 on the leading block; those
/// designs clip P at 1.
Design build_design(Model model, QFamily family, std::size_t n, std::size_t K, std::uint64_t seed,
                    bool renormalize_weights = false);

struct Cell {
  std::size_t K0 = 0;
  std::size_t K = 0;
  /// Rejections over successful replicates; NaN when every replicate failed.
  double rejection_rate = 0.0;
  std::size_t replicates = 0;
  std::size_t failures = 0;

  bool flagged() const noexcept { return failures * 10 > replicates; }
  friend bool operator==(const Cell&, const Cell&) = default;
};

struct RejectionTable {
  /// Sorted by (K0, K); present iff K0 <= K.
  std::vector<Cell> cells;
  nlohmann::json config;
  double wall_seconds = 0.0;

  const Cell* find(std::size_t K0, std::size_t K) const;
};

using Progress = std::function<void(const Cell&)>;

/// Replicate r of cell (K, K0) draws everything from substreams of
/// (seed, K, K0, r); tables are identical for any worker count.
RejectionTable run_experiment(const ExperimentConfig& config, egtest::Calibrator& calibrator,
                              const Progress& progress = {});
RejectionTable run_experiment(const ExperimentConfig& config, const Progress& progress = {});

/// Writes "K0,K,rejection_rate,replicates,failures" CSV to `csv_path` and the
/// metadata to the same path with a .json extension.
void export_table(const RejectionTable& table, const std::filesystem::path& csv_path);
std::string table_csv(const RejectionTable& table);
std::vector<Cell> parse_table_csv(std::string_view text);

}  // namespace eigengap::simlab

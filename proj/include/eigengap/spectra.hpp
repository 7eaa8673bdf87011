#pragma once

// Partial eigendecomposition of large symmetric operators: the m algebraically
// largest eigenvalues via thick-restart Lanczos with full reorthogonalization,
// and a dense direct solver used both as fallback and as validation oracle.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "eigengap/graph.hpp"

namespace eigengap::spectra {

inline constexpr double kDefaultTol = 1e-8;

/// A symmetric linear map given by its matrix-vector product. Apply must be
/// safe to call concurrently from several threads.
class SymmetricOperator {
 public:
  using Apply = std::function<void(std::span<const double> x, std::span<double> y)>;

  SymmetricOperator(std::size_t dim, Apply apply, std::optional<double> nnz_hint = std::nullopt);

  /// Owns the matrix.
  static SymmetricOperator from_matrix(Eigen::MatrixXd matrix);
  /// Non-owning; `matrix` must outlive the operator.
  static SymmetricOperator from_matrix_view(const Eigen::MatrixXd& matrix);
  /// Non-owning adjacency operator; `graph` must outlive the operator.
  static SymmetricOperator from_graph(const SymmetricGraph& graph);

  std::size_t dim() const noexcept { return dim_; }
  std::optional<double> nnz_hint() const noexcept { return nnz_hint_; }
  void apply(std::span<const double> x, std::span<double> y) const { apply_(x, y); }

  /// The backing dense matrix, when there is one.
  const Eigen::MatrixXd* dense() const noexcept { return dense_; }
  /// Dense matrix, materialized column by column if needed.
  Eigen::MatrixXd materialize() const;

 private:
  std::size_t dim_;
  Apply apply_;
  std::optional<double> nnz_hint_;
  std::shared_ptr<const Eigen::MatrixXd> owned_;
  const Eigen::MatrixXd* dense_ = nullptr;
};

/// Eigenvalues in descending order with per-pair residual norms |Av - lv|.
struct Spectrum {
  std::vector<double> values;
  std::vector<double> residuals;
  bool converged = false;
};

nlohmann::json to_json(const Spectrum& spectrum);
Spectrum spectrum_from_json(const nlohmann::json& doc);

/// Carries the best Ritz values and residuals reached before giving up.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Spectrum best) : std::runtime_error(what), best_(std::move(best)) {}
  const Spectrum& best() const noexcept { return best_; }

 private:
  Spectrum best_;
};

struct SolverOptions {
  /// Residual tolerance relative to max(1, |lambda_1|).
  double tol = kDefaultTol;
  std::size_t max_restarts = 30;
  /// Use the dense solver when dim <= 512 or m > dim/4.
  bool dense_fallback = true;
  std::uint64_t start_seed = 0x5eedULL;
};

/// The m algebraically largest eigenvalues of `op`, descending. Throws
/// ConvergenceError when the restart budget is exhausted.
Spectrum top_eigenvalues(const SymmetricOperator& op, std::size_t m, const SolverOptions& options = {});

/// All eigenvalues of a dense symmetric matrix (n <= 4096), descending.
/// Throws std::invalid_argument on asymmetric input.
Spectrum dense_eigenvalues(const Eigen::MatrixXd& matrix);

/// Symmetric matrix with independent N(0, 1/n) entries for i <= j, mirrored.
Eigen::MatrixXd sample_wigner(std::size_t n, std::uint64_t seed);

/// Top m eigenvalues of sample_wigner(n, seed).
Spectrum sample_wigner_top(std::size_t n, std::size_t m, std::uint64_t seed, const SolverOptions& options = {});

}  // namespace eigengap::spectra

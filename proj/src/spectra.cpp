#include "eigengap/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "eigengap/random.hpp"

namespace eigengap::spectra {

SymmetricOperator::SymmetricOperator(std::size_t dim, Apply apply, std::optional<double> nnz_hint)
    : dim_(dim), apply_(std::move(apply)), nnz_hint_(nnz_hint) {
  if (!apply_) throw std::invalid_argument("operator needs an apply function");
}

SymmetricOperator SymmetricOperator::from_matrix(Eigen::MatrixXd matrix) {
  auto owned = std::make_shared<const Eigen::MatrixXd>(std::move(matrix));
  auto op = from_matrix_view(*owned);
  op.owned_ = std::move(owned);
  return op;
}

SymmetricOperator SymmetricOperator::from_matrix_view(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("operator matrix must be square");
  const auto n = static_cast<std::size_t>(matrix.rows());
  const Eigen::MatrixXd* m = &matrix;
  SymmetricOperator op(
      n,
      [m](std::span<const double> x, std::span<double> y) {
        const auto d = m->rows();
        Eigen::Map<Eigen::VectorXd>(y.data(), d).noalias() = *m * Eigen::Map<const Eigen::VectorXd>(x.data(), d);
      },
      static_cast<double>(n) * static_cast<double>(n));
  op.dense_ = m;
  return op;
}

SymmetricOperator SymmetricOperator::from_graph(const SymmetricGraph& graph) {
  const SymmetricGraph* g = &graph;
  return SymmetricOperator(
      graph.num_nodes(), [g](std::span<const double> x, std::span<double> y) { g->multiply(x, y); },
      2.0 * static_cast<double>(graph.num_edges()));
}

Eigen::MatrixXd SymmetricOperator::materialize() const {
  if (dense_) return *dense_;
  const auto n = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXd out(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    e(j) = 1.0;
    apply(std::span<const double>(e.data(), dim_), std::span<double>(out.col(j).data(), dim_));
    e(j) = 0.0;
  }
  return out;
}

nlohmann::json to_json(const Spectrum& spectrum) {
  return {{"values", spectrum.values}, {"residuals", spectrum.residuals}, {"converged", spectrum.converged}};
}

Spectrum spectrum_from_json(const nlohmann::json& doc) {
  return {doc.at("values").get<std::vector<double>>(), doc.at("residuals").get<std::vector<double>>(),
          doc.at("converged").get<bool>()};
}

// ---------------------------------------------------------------------------

Spectrum dense_eigenvalues(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) throw std::invalid_argument("dense eigensolver needs a square matrix");
  if (matrix.rows() > 4096) throw std::invalid_argument("dense eigensolver limited to n <= 4096");
  const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("matrix is not symmetric");

  Spectrum out;
  out.converged = true;
  const auto n = matrix.rows();
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw std::runtime_error("dense symmetric eigensolver failed");
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  const Eigen::MatrixXd residual = matrix * vectors - vectors * lambda.asDiagonal();
  out.values.resize(static_cast<std::size_t>(n));
  out.residuals.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[static_cast<std::size_t>(i)] = lambda(n - 1 - i);
    out.residuals[static_cast<std::size_t>(i)] = residual.col(n - 1 - i).norm();
  }
  return out;
}

namespace {

Spectrum top_from_dense(const SymmetricOperator& op, std::size_t m) {
  Spectrum all = op.dense() ? dense_eigenvalues(*op.dense()) : dense_eigenvalues(op.materialize());
  all.values.resize(m);
  all.residuals.resize(m);
  return all;
}

// Lanczos factorization A V_p = V_p T_p + r e_p' kept in thick-restart form:
// after a restart the leading block of T is diagonal (kept Ritz values) with
// an arrowhead coupling to the first new Lanczos vector.
class ThickRestartLanczos {
 public:
  ThickRestartLanczos(const SymmetricOperator& op, std::size_t m, const SolverOptions& options)
      : op_(op), n_(op.dim()), m_(m), options_(options), rng_(options.start_seed) {
    p_ = std::min(n_, std::max<std::size_t>(2 * m + 10, 40));
    basis_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(p_));
    t_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p_), static_cast<Eigen::Index>(p_));
    work_.resize(static_cast<Eigen::Index>(n_));
  }

  Spectrum run() {
    set_random_column(0);
    std::size_t kept = 0;
    Spectrum best;
    for (std::size_t restart = 0; restart <= options_.max_restarts; ++restart) {
      expand(kept);

      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(t_);
      const Eigen::VectorXd& theta = small.eigenvalues();
      const Eigen::MatrixXd& y = small.eigenvectors();
      const auto p = static_cast<Eigen::Index>(p_);
      const double scale = std::max(1.0, std::abs(theta(p - 1)));
      const double limit = options_.tol * scale;

      Spectrum estimate;
      estimate.values.resize(m_);
      estimate.residuals.resize(m_);
      bool all_small = true;
      for (std::size_t i = 0; i < m_; ++i) {
        const Eigen::Index col = p - 1 - static_cast<Eigen::Index>(i);
        estimate.values[i] = theta(col);
        estimate.residuals[i] = std::abs(beta_ * y(p - 1, col));
        all_small = all_small && estimate.residuals[i] <= 0.5 * limit;
      }
      best = estimate;

      if (all_small) {
        Spectrum exact = verify(theta, y);
        if (std::all_of(exact.residuals.begin(), exact.residuals.end(), [&](double r) { return r <= limit; })) {
          exact.converged = true;
          return exact;
        }
        best = exact;
      }
      if (restart == options_.max_restarts) break;
      kept = restart_with(theta, y);
    }
    best.converged = false;
    throw ConvergenceError("Lanczos did not converge within " + std::to_string(options_.max_restarts) +
                               " restarts (max residual " +
                               std::to_string(*std::max_element(best.residuals.begin(), best.residuals.end())) + ")",
                           best);
  }

 private:
  std::span<double> column(std::size_t j) {
    return {basis_.col(static_cast<Eigen::Index>(j)).data(), n_};
  }

  // Two passes of classical Gram-Schmidt against columns [0, count).
  Eigen::VectorXd orthogonalize(Eigen::VectorXd& w, std::size_t count) {
    const auto leading = basis_.leftCols(static_cast<Eigen::Index>(count));
    Eigen::VectorXd h = leading.transpose() * w;
    w.noalias() -= leading * h;
    const Eigen::VectorXd h2 = leading.transpose() * w;
    w.noalias() -= leading * h2;
    return h + h2;
  }

  void set_random_column(std::size_t j) {
    std::normal_distribution<double> normal;
    for (Eigen::Index attempt = 0; attempt < 8; ++attempt) {
      for (Eigen::Index i = 0; i < work_.size(); ++i) work_(i) = normal(rng_);
      if (j > 0) orthogonalize(work_, j);
      const double norm = work_.norm();
      if (norm > 1e-8) {
        basis_.col(static_cast<Eigen::Index>(j)) = work_ / norm;
        return;
      }
    }
    throw std::runtime_error("could not extend Krylov basis");
  }

  // Extends the factorization from column `from` to p columns.
  void expand(std::size_t from) {
    for (std::size_t j = from; j < p_; ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      op_.apply(column(j), std::span<double>(work_.data(), n_));
      const Eigen::VectorXd h = orthogonalize(work_, j + 1);
      t_(col, col) = h(col);
      norm_estimate_ = std::max(norm_estimate_, std::abs(h(col)));
      const double beta = work_.norm();
      norm_estimate_ = std::max(norm_estimate_, beta);
      if (j + 1 < p_) {
        if (beta <= 1e-12 * std::max(norm_estimate_, std::numeric_limits<double>::min())) {
          // Invariant subspace: continue with a fresh direction, zero coupling.
          set_random_column(j + 1);
          t_(col, col + 1) = t_(col + 1, col) = 0.0;
        } else {
          basis_.col(col + 1) = work_ / beta;
          t_(col, col + 1) = t_(col + 1, col) = beta;
        }
      } else {
        beta_ = beta;
        residual_ = work_;
      }
    }
  }

  Spectrum verify(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y) {
    const auto p = static_cast<Eigen::Index>(p_);
    Spectrum out;
    out.values.resize(m_);
    out.residuals.resize(m_);
    Eigen::VectorXd x(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < m_; ++i) {
      const Eigen::Index col = p - 1 - static_cast<Eigen::Index>(i);
      x.noalias() = basis_ * y.col(col);
      x /= x.norm();
      op_.apply(std::span<const double>(x.data(), n_), std::span<double>(work_.data(), n_));
      out.values[i] = theta(col);
      out.residuals[i] = (work_ - theta(col) * x).norm();
    }
    return out;
  }

  std::size_t restart_with(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y) {
    const auto p = static_cast<Eigen::Index>(p_);
    const auto kept = static_cast<Eigen::Index>(std::min(p_ - 1, m_ + (p_ - m_) / 2));
    const Eigen::MatrixXd top = y.rightCols(kept).rowwise().reverse();
    basis_.leftCols(kept) = basis_ * top;
    t_.setZero();
    for (Eigen::Index i = 0; i < kept; ++i) {
      t_(i, i) = theta(p - 1 - i);
      const double coupling = beta_ * top(p - 1, i);
      t_(i, kept) = t_(kept, i) = coupling;
    }
    if (beta_ <= 1e-12 * std::max(norm_estimate_, std::numeric_limits<double>::min())) {
      for (Eigen::Index i = 0; i < kept; ++i) t_(i, kept) = t_(kept, i) = 0.0;
      set_random_column(static_cast<std::size_t>(kept));
    } else {
      basis_.col(kept) = residual_ / beta_;
      // Re-orthogonalize the new start against the rotated basis.
      work_ = basis_.col(kept);
      orthogonalize(work_, static_cast<std::size_t>(kept));
      basis_.col(kept) = work_ / work_.norm();
    }
    return static_cast<std::size_t>(kept);
  }

  const SymmetricOperator& op_;
  std::size_t n_;
  std::size_t m_;
  std::size_t p_;
  SolverOptions options_;
  Rng rng_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd t_;
  Eigen::VectorXd work_;
  Eigen::VectorXd residual_;
  double beta_ = 0.0;
  double norm_estimate_ = 0.0;
};

}  // namespace

Spectrum top_eigenvalues(const SymmetricOperator& op, std::size_t m, const SolverOptions& options) {
  const std::size_t n = op.dim();
  if (m < 1 || m > n) throw std::invalid_argument("need 1 <= m <= dim");
  if (!(options.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (options.dense_fallback && (n <= 512 || m > n / 4)) return top_from_dense(op, m);
  return ThickRestartLanczos(op, m, options).run();
}

Eigen::MatrixXd sample_wigner(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  const auto d = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd w(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) w(i, j) = normal(rng);
    for (Eigen::Index i = 0; i < j; ++i) w(j, i) = w(i, j);
  }
  return w;
}

Spectrum sample_wigner_top(std::size_t n, std::size_t m, std::uint64_t seed, const SolverOptions& options) {
  if (m < 1 || m > n) throw std::invalid_argument("need 1 <= m <= n");
  const Eigen::MatrixXd w = sample_wigner(n, seed);
  return top_eigenvalues(SymmetricOperator::from_matrix_view(w), m, options);
}

}  // namespace eigengap::spectra

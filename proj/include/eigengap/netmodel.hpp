#pragma once

// Block-model specifications, edge-probability matrices and Bernoulli graph
// sampling for the SBM / DCSBM / MM / DCMM families.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "eigengap/graph.hpp"

namespace eigengap::netmodel {

/// Raised when a specification or its derived probabilities are invalid.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ModelKind { sbm, dcsbm, mm, dcmm };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view text);

/// Symmetric K x K matrix of community connection probabilities.
class CommunityMatrix {
 public:
  /// Throws SpecError unless `entries` is square, symmetric and in [0, 1].
  explicit CommunityMatrix(Eigen::MatrixXd entries);

  std::size_t K() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  double operator()(std::size_t k, std::size_t l) const { return entries_(k, l); }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }

 private:
  Eigen::MatrixXd entries_;
};

/// n membership vectors of length K (one per row). A hard label g(i) = k is
/// the pure row e_k.
class Membership {
 public:
  /// Throws SpecError on negative entries or rows not summing to 1 (1e-12).
  explicit Membership(Eigen::MatrixXd rows);

  /// Labels are 0-based.
  static Membership from_labels(std::span<const std::size_t> labels, std::size_t K);

  std::size_t n() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t K() const noexcept { return static_cast<std::size_t>(rows_.cols()); }
  const Eigen::MatrixXd& rows() const noexcept { return rows_; }

  bool is_pure(std::size_t i) const;
  bool all_pure() const;
  /// Community of a pure row, std::nullopt for mixed rows.
  std::optional<std::size_t> label(std::size_t i) const;

 private:
  Eigen::MatrixXd rows_;
};

/// Per-node degree multipliers, all strictly positive.
class DegreeWeights {
 public:
  explicit DegreeWeights(std::vector<double> values);
  static DegreeWeights ones(std::size_t n) { return DegreeWeights(std::vector<double>(n, 1.0)); }

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const noexcept { return values_; }
  bool all_ones() const;

 private:
  std::vector<double> values_;
};

/// P_ij = w_i w_j pi_i' Q pi_j, with the kind restricting membership/weights.
struct BlockModelSpec {
  ModelKind kind;
  CommunityMatrix Q;
  Membership membership;
  DegreeWeights weights;

  /// Checks dimensions and the kind-specific invariants; throws SpecError.
  void validate() const;
  std::size_t n() const noexcept { return membership.n(); }
  std::size_t K() const noexcept { return Q.K(); }
};

struct BuildOptions {
  /// Larger problems stay in factored (w, Pi, Q) form.
  std::size_t dense_limit = 4096;
  /// Clamp probabilities above 1 instead of failing. Off by default.
  bool clip_to_unit = false;
};

/// Edge probabilities, either materialized or kept as (w, Pi, Q Pi').
class EdgeProbabilityMatrix {
 public:
  /// Throws SpecError unless square, symmetric and entrywise in [0, 1].
  static EdgeProbabilityMatrix from_dense(Eigen::MatrixXd p);

  std::size_t n() const noexcept { return n_; }
  bool is_dense() const noexcept { return dense_.size() > 0 || n_ == 0; }
  double operator()(std::size_t i, std::size_t j) const;
  Eigen::MatrixXd to_dense() const;

 private:
  friend EdgeProbabilityMatrix build_probability_matrix(const BlockModelSpec&, const BuildOptions&);
  EdgeProbabilityMatrix() = default;

  std::size_t n_ = 0;
  Eigen::MatrixXd dense_;
  // Factored form.
  Eigen::VectorXd weights_;
  Eigen::MatrixXd membership_;   // n x K
  Eigen::MatrixXd projected_;    // n x K, row j = (Q pi_j)'
  bool clip_ = false;
};

EdgeProbabilityMatrix build_probability_matrix(const BlockModelSpec& spec, const BuildOptions& options = {});

/// Each pair i < j is an independent Bernoulli(P_ij) draw. Row i uses its own
/// substream of `seed`, so the result does not depend on `workers`.
SymmetricGraph sample_adjacency(const EdgeProbabilityMatrix& p, std::uint64_t seed, unsigned workers = 1);

CommunityMatrix make_q_planted(std::size_t K, double within, double between);

/// Off-diagonal scale * 0.1^|k-l|, diagonal scale * (K+1-k)/K (k 1-based).
CommunityMatrix make_q_decay(std::size_t K, double scale);

/// n^{-5/9}, the edge scale of the sparse designs.
double sparse_edge_scale(std::size_t n);

/// i.i.d. draws: U[4/5, 6/5] w.p. 0.8, 9/11 w.p. 0.1, 13/11 w.p. 0.1.
DegreeWeights sample_degree_weights(std::size_t n, std::uint64_t seed);

/// Rescales weights so that they sum to the community size within each
/// community. Requires pure membership.
DegreeWeights renormalize_per_community(const DegreeWeights& weights, const Membership& membership);

/// Consecutive equal blocks of n/K pure rows; K must divide n.
Membership make_membership_pure(std::size_t n, std::size_t K);

/// M = round(n(1/K - 0.03)) pure rows per community, then the remaining nodes
/// split across (0.2, 0.8, 0...), (0.8, 0.2, 0...) and the uniform vector,
/// remainder to the uniform vector.
Membership make_membership_dcmm(std::size_t n, std::size_t K);

/// {kind, K, n, Q, membership, omega, seed}; matrices row-major and flattened.
nlohmann::json spec_to_json(const BlockModelSpec& spec, std::uint64_t seed);
BlockModelSpec spec_from_json(const nlohmann::json& doc);

}  // namespace eigengap::netmodel

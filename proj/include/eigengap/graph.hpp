#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace eigengap {

using Edge = std::pair<std::size_t, std::size_t>;

/// Undirected simple graph in CSR form. Adjacency is binary and symmetric with
/// a zero diagonal; every edge {i,j} is stored in both rows.
class SymmetricGraph {
 public:
  SymmetricGraph() = default;

  /// Builds from unordered pairs; duplicates (in either orientation) are merged.
  /// Throws std::invalid_argument on a self-loop or an out-of-range endpoint.
  static SymmetricGraph from_edges(std::size_t n, std::span<const Edge> edges);

  /// Builds from per-node upper-triangular neighbor lists: upper[i] holds
  /// sorted distinct j > i.
  static SymmetricGraph from_upper_rows(std::vector<std::vector<std::uint32_t>> upper);

  std::size_t num_nodes() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return targets_.size() / 2; }
  bool empty() const noexcept { return num_nodes() == 0; }

  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {targets_.data() + offsets_[i], targets_.data() + offsets_[i + 1]};
  }
  std::size_t degree(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }
  bool has_edge(std::size_t i, std::size_t j) const;

  /// Edges as (i, j) with i < j, lexicographically sorted.
  std::vector<Edge> edges() const;

  /// Induced subgraph on `nodes` (new index k corresponds to nodes[k]).
  SymmetricGraph induced(std::span<const std::size_t> nodes) const;

  /// y = A x.
  void multiply(std::span<const double> x, std::span<double> y) const;

  Eigen::MatrixXd dense_adjacency() const;

  friend bool operator==(const SymmetricGraph&, const SymmetricGraph&) = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> targets_;
};

/// Writes one "i j" line per undirected edge (i < j), 0-based ids.
void write_edge_list(const SymmetricGraph& graph, std::ostream& out);

}  // namespace eigengap

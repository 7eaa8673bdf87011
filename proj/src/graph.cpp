#include "eigengap/graph.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace eigengap {

SymmetricGraph SymmetricGraph::from_edges(std::size_t n, std::span<const Edge> edges) {
  if (n > std::numeric_limits<std::uint32_t>::max())
    throw std::invalid_argument("graph too large for 32-bit node ids");
  std::vector<std::vector<std::uint32_t>> upper(n);
  for (const auto& [a, b] : edges) {
    if (a >= n || b >= n)
      throw std::invalid_argument("edge endpoint out of range: " + std::to_string(std::max(a, b)));
    if (a == b) throw std::invalid_argument("self-loop at node " + std::to_string(a));
    const auto [lo, hi] = std::minmax(a, b);
    upper[lo].push_back(static_cast<std::uint32_t>(hi));
  }
  for (auto& row : upper) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }
  return from_upper_rows(std::move(upper));
}

SymmetricGraph SymmetricGraph::from_upper_rows(std::vector<std::vector<std::uint32_t>> upper) {
  const std::size_t n = upper.size();
  std::vector<std::size_t> degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    degree[i] += upper[i].size();
    for (auto j : upper[i]) {
      if (j <= i || j >= n) throw std::invalid_argument("upper row entry out of range");
      ++degree[j];
    }
  }
  SymmetricGraph g;
  g.offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + degree[i];
  g.targets_.resize(g.offsets_[n]);
  std::vector<std::size_t> fill(g.offsets_.begin(), g.offsets_.end() - 1);
  // Lower neighbors first, in increasing order, then the (sorted) upper ones.
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : upper[i]) g.targets_[fill[j]++] = static_cast<std::uint32_t>(i);
  for (std::size_t i = 0; i < n; ++i)
    for (auto j : upper[i]) g.targets_[fill[i]++] = j;
  return g;
}

bool SymmetricGraph::has_edge(std::size_t i, std::size_t j) const {
  const auto row = neighbors(i);
  return std::binary_search(row.begin(), row.end(), static_cast<std::uint32_t>(j));
}

std::vector<Edge> SymmetricGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (std::size_t i = 0; i < num_nodes(); ++i)
    for (auto j : neighbors(i))
      if (j > i) out.emplace_back(i, j);
  return out;
}

SymmetricGraph SymmetricGraph::induced(std::span<const std::size_t> nodes) const {
  std::vector<std::int64_t> position(num_nodes(), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) position[nodes[k]] = static_cast<std::int64_t>(k);
  std::vector<std::vector<std::uint32_t>> upper(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    for (auto j : neighbors(nodes[k])) {
      const auto p = position[j];
      if (p > static_cast<std::int64_t>(k)) upper[k].push_back(static_cast<std::uint32_t>(p));
    }
    std::sort(upper[k].begin(), upper[k].end());
  }
  return from_upper_rows(std::move(upper));
}

void SymmetricGraph::multiply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = num_nodes();
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) acc += x[targets_[p]];
    y[i] = acc;
  }
}

Eigen::MatrixXd SymmetricGraph::dense_adjacency() const {
  const auto n = static_cast<Eigen::Index>(num_nodes());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (auto j : neighbors(static_cast<std::size_t>(i))) a(i, j) = 1.0;
  return a;
}

void write_edge_list(const SymmetricGraph& graph, std::ostream& out) {
  for (std::size_t i = 0; i < graph.num_nodes(); ++i)
    for (auto j : graph.neighbors(i))
      if (j > i) out << i << ' ' << j << '\n';
}

}  // namespace eigengap

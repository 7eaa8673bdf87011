#pragma once

// Edge-list ingestion for real networks: arbitrary node tokens, duplicate and
// self-loop removal, and largest-connected-component extraction.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "eigengap/graph.hpp"

namespace eigengap::ingest {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Bijection between external node tokens and internal indices.
class NodeRelabeling {
 public:
  NodeRelabeling() = default;
  explicit NodeRelabeling(std::vector<std::string> tokens);

  /// Index of `token`, assigning the next free index if unseen.
  std::size_t intern(const std::string& token);
  std::size_t index_of(const std::string& token) const { return forward_.at(token); }
  const std::string& token(std::size_t index) const { return inverse_.at(index); }
  std::size_t size() const noexcept { return inverse_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return inverse_; }

 private:
  std::unordered_map<std::string, std::size_t> forward_;
  std::vector<std::string> inverse_;
};

struct IngestReport {
  /// Distinct tokens seen, including nodes that only had self-loops.
  std::size_t nodes_read = 0;
  /// Edge lines read, before duplicate and self-loop removal.
  std::size_t edges_read = 0;
  std::size_t duplicates_dropped = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t lcc_nodes = 0;
  std::size_t lcc_edges = 0;
  /// lcc_edges / C(lcc_nodes, 2).
  double density = 0.0;
};

nlohmann::json to_json(const IngestReport& report);

struct IngestResult {
  SymmetricGraph graph;
  NodeRelabeling labels;
  IngestReport report;
};

/// Lines hold two node tokens separated by whitespace or a comma; blank lines
/// and lines starting with '#' are skipped. Nodes are numbered in order of
/// first appearance in a retained edge. Throws ParseError on a malformed line
/// or when no edge remains.
IngestResult parse_edge_list(std::istream& in);
IngestResult read_edge_list(const std::filesystem::path& path);

struct Component {
  SymmetricGraph graph;
  /// original[k] is the index in the input graph of component node k.
  std::vector<std::size_t> original;
};

/// Largest connected component; among equal sizes the one containing the
/// smallest node index wins. Node order is preserved.
Component largest_connected_component(const SymmetricGraph& graph);

/// Replaces the graph by its largest component and restricts the labels.
IngestResult restrict_to_lcc(IngestResult result);

}  // namespace eigengap::ingest

#include "eigengap/ingest.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <unordered_set>

namespace eigengap::ingest {

NodeRelabeling::NodeRelabeling(std::vector<std::string> tokens) {
  for (auto& t : tokens)
    if (!forward_.emplace(t, forward_.size()).second) throw std::invalid_argument("duplicate node token '" + t + "'");
  inverse_ = std::move(tokens);
}

std::size_t NodeRelabeling::intern(const std::string& token) {
  const auto [it, inserted] = forward_.emplace(token, inverse_.size());
  if (inserted) inverse_.push_back(token);
  return it->second;
}

nlohmann::json to_json(const IngestReport& r) {
  return {{"nodes_read", r.nodes_read},           {"edges_read", r.edges_read},
          {"duplicates_dropped", r.duplicates_dropped}, {"self_loops_dropped", r.self_loops_dropped},
          {"lcc_nodes", r.lcc_nodes},             {"lcc_edges", r.lcc_edges},
          {"density", r.density}};
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
      if (!current.empty()) fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) fields.push_back(std::move(current));
  return fields;
}

void fill_component_stats(IngestReport& report, const SymmetricGraph& graph) {
  const auto lcc = largest_connected_component(graph);
  report.lcc_nodes = lcc.graph.num_nodes();
  report.lcc_edges = lcc.graph.num_edges();
  const double pairs = static_cast<double>(report.lcc_nodes) * (static_cast<double>(report.lcc_nodes) - 1.0) / 2.0;
  report.density = pairs > 0.0 ? static_cast<double>(report.lcc_edges) / pairs : 0.0;
}

}  // namespace

IngestResult parse_edge_list(std::istream& in) {
  IngestResult result;
  std::unordered_set<std::string> seen_tokens;
  std::unordered_set<std::uint64_t> seen_edges;
  std::vector<Edge> edges;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2) throw ParseError(number, "expected two node ids, got " + std::to_string(fields.size()) + " fields");
    ++result.report.edges_read;
    seen_tokens.insert(fields[0]);
    seen_tokens.insert(fields[1]);
    if (fields[0] == fields[1]) {
      ++result.report.self_loops_dropped;
      continue;
    }
    const auto a = result.labels.intern(fields[0]);
    const auto b = result.labels.intern(fields[1]);
    const auto [lo, hi] = std::minmax(a, b);
    if (!seen_edges.insert((static_cast<std::uint64_t>(lo) << 32) | hi).second) {
      ++result.report.duplicates_dropped;
      continue;
    }
    edges.emplace_back(lo, hi);
  }
  if (edges.empty()) throw ParseError(number, "edge list contains no usable edges");
  result.report.nodes_read = seen_tokens.size();
  result.graph = SymmetricGraph::from_edges(result.labels.size(), edges);
  fill_component_stats(result.report, result.graph);
  return result;
}

IngestResult read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list " + path.string());
  return parse_edge_list(in);
}

Component largest_connected_component(const SymmetricGraph& graph) {
  const std::size_t n = graph.num_nodes();
  std::vector<std::size_t> component(n, SIZE_MAX);
  std::vector<std::size_t> queue;
  std::size_t best_id = SIZE_MAX;
  std::size_t best_size = 0;
  std::size_t next_id = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (component[s] != SIZE_MAX) continue;
    const std::size_t id = next_id++;
    queue.assign(1, s);
    component[s] = id;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      for (auto v : graph.neighbors(queue[head])) {
        if (component[v] == SIZE_MAX) {
          component[v] = id;
          queue.push_back(v);
        }
      }
    }
    // Components are discovered in order of their smallest node, so a strict
    // comparison keeps the earliest one on ties.
    if (queue.size() > best_size) {
      best_size = queue.size();
      best_id = id;
    }
  }
  Component out;
  for (std::size_t i = 0; i < n; ++i)
    if (component[i] == best_id) out.original.push_back(i);
  out.graph = graph.induced(out.original);
  return out;
}

IngestResult restrict_to_lcc(IngestResult result) {
  auto lcc = largest_connected_component(result.graph);
  std::vector<std::string> tokens;
  tokens.reserve(lcc.original.size());
  for (auto i : lcc.original) tokens.push_back(result.labels.token(i));
  result.labels = NodeRelabeling(std::move(tokens));
  result.graph = std::move(lcc.graph);
  return result;
}

}  // namespace eigengap::ingest

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mechnet/random.hpp"

namespace mechnet {

using NodeId = std::uint32_t;

// Unordered pair stored with u < v.
struct Edge {
  NodeId u = 0;
  NodeId v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

inline Edge make_edge(NodeId a, NodeId b) { return a < b ? Edge{a, b} : Edge{b, a}; }

// Undirected simple graph. Node identifiers are dense and follow insertion
// order, so "nodes present before node i" is the prefix [0, i).
//
// Adjacency is kept as sorted neighbor vectors; the edge list is kept
// alongside it (with a position index) so uniform edge sampling is O(1) and
// deletion is a swap-remove.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t node_count);

  NodeId add_node();

  // Inserts (u, v). Returns false without mutation for self-loops and
  // existing edges. Throws std::out_of_range for unknown identifiers.
  bool add_edge(NodeId u, NodeId v);

  bool remove_edge(NodeId u, NodeId v);

  bool has_edge(NodeId u, NodeId v) const;

  std::size_t node_count() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::size_t degree(NodeId v) const { return adjacency_.at(v).size(); }

  // Sorted ascending.
  std::span<const NodeId> neighbors(NodeId v) const { return adjacency_.at(v); }

  // Current edges in storage order (insertion order, perturbed by
  // swap-removes). Deterministic for a given operation sequence.
  std::span<const Edge> edges() const noexcept { return edges_; }

  // True when u and v share a neighbor, i.e. the edge (u, v) would close or
  // already closes a triangle.
  bool shares_neighbor(NodeId u, NodeId v) const;

  // Full consistency scan: no loops, no duplicates, adjacency and edge list
  // agree, neighbor vectors sorted.
  bool is_consistent() const;

  // Returns the graph with node v renamed to permutation[v].
  Graph relabeled(std::span<const NodeId> permutation) const;

  // Edge set as sorted pairs; handy for comparisons.
  std::vector<Edge> sorted_edges() const;

 private:
  static std::uint64_t key(NodeId u, NodeId v) {
    return (static_cast<std::uint64_t>(u) << 32) | v;
  }
  void check_node(NodeId v) const;

  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<Edge> edges_;
  std::unordered_map<std::uint64_t, std::size_t> edge_position_;
};

using EdgePredicate = std::function<bool(const Graph&, Edge)>;

// Edge drawn uniformly from those satisfying `predicate` (all edges when the
// predicate is empty). nullopt when none qualifies.
std::optional<Edge> sample_uniform_edge(const Graph& g, Rng& rng,
                                        const EdgePredicate& predicate = {});

// Predicate: the edge is not part of any triangle.
bool edge_outside_triangles(const Graph& g, Edge e);

struct ContactRecord {
  std::string a;
  std::string b;
  std::uint64_t count = 1;
};

// A graph ingested from text, with the original label of each node.
struct LabeledGraph {
  Graph graph;
  std::vector<std::string> labels;
};

// Parses an edge list: one "u v" or "u,v" pair per line, '#' comments.
// Labels map to identifiers in first-appearance order; self-loops and
// duplicate pairs are dropped. A leading "# nodes N" directive pre-registers
// the labels "0".."N-1" so files written by save_edge_list keep isolated
// nodes and identifiers.
LabeledGraph parse_edge_list(std::istream& in);
LabeledGraph load_edge_list(const std::filesystem::path& path);

// "a b count" or "a b" (count 1) per line.
std::vector<ContactRecord> parse_contacts(std::istream& in);
std::vector<ContactRecord> load_contacts(const std::filesystem::path& path);

// Edge (a, b) exists iff the counts for the unordered pair sum to at least
// min_count. Every label seen becomes a node, including those whose contacts
// stay under the threshold.
LabeledGraph flatten_contacts(std::span<const ContactRecord> records, std::uint64_t min_count);

void write_edge_list(std::ostream& out, const Graph& g);
void save_edge_list(const std::filesystem::path& path, const Graph& g);

}  // namespace mechnet

// SPDX-License-Identifier: Apache-2.0

#include "mechnet/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "mechnet/error.hpp"

namespace mechnet {

Graph::Graph(std::size_t node_count) : adjacency_(node_count) {}

NodeId Graph::add_node() {
  adjacency_.emplace_back();
  return static_cast<NodeId>(adjacency_.size() - 1);
}

void Graph::check_node(NodeId v) const {
  if (v >= adjacency_.size()) {
    throw std::out_of_range("node " + std::to_string(v) + " out of range (node_count " +
                            std::to_string(adjacency_.size()) + ")");
  }
}

bool Graph::add_edge(NodeId u, NodeId v) {
  check_node(u);
  check_node(v);
  if (u == v) return false;
  const Edge e = make_edge(u, v);
  auto [it, inserted] = edge_position_.try_emplace(key(e.u, e.v), edges_.size());
  if (!inserted) return false;
  edges_.push_back(e);
  auto& nu = adjacency_[u];
  nu.insert(std::lower_bound(nu.begin(), nu.end(), v), v);
  auto& nv = adjacency_[v];
  nv.insert(std::lower_bound(nv.begin(), nv.end(), u), u);
  return true;
}

bool Graph::remove_edge(NodeId u, NodeId v) {
  if (u >= adjacency_.size() || v >= adjacency_.size() || u == v) return false;
  const Edge e = make_edge(u, v);
  auto it = edge_position_.find(key(e.u, e.v));
  if (it == edge_position_.end()) return false;
  const std::size_t pos = it->second;
  edge_position_.erase(it);
  if (pos + 1 != edges_.size()) {
    edges_[pos] = edges_.back();
    edge_position_[key(edges_[pos].u, edges_[pos].v)] = pos;
  }
  edges_.pop_back();
  auto& nu = adjacency_[u];
  nu.erase(std::lower_bound(nu.begin(), nu.end(), v));
  auto& nv = adjacency_[v];
  nv.erase(std::lower_bound(nv.begin(), nv.end(), u));
  return true;
}

bool Graph::has_edge(NodeId u, NodeId v) const {
  if (u >= adjacency_.size() || v >= adjacency_.size()) return false;
  const auto& smaller = adjacency_[u].size() <= adjacency_[v].size() ? adjacency_[u] : adjacency_[v];
  const NodeId other = adjacency_[u].size() <= adjacency_[v].size() ? v : u;
  return std::binary_search(smaller.begin(), smaller.end(), other);
}

bool Graph::shares_neighbor(NodeId u, NodeId v) const {
  const auto& a = adjacency_.at(u);
  const auto& b = adjacency_.at(v);
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i == *j) return true;
    if (*i < *j) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

bool Graph::is_consistent() const {
  std::size_t endpoint_total = 0;
  for (NodeId v = 0; v < adjacency_.size(); ++v) {
    const auto& nbrs = adjacency_[v];
    endpoint_total += nbrs.size();
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      if (nbrs[k] == v || nbrs[k] >= adjacency_.size()) return false;
      if (k > 0 && nbrs[k - 1] >= nbrs[k]) return false;
      const auto& back = adjacency_[nbrs[k]];
      if (!std::binary_search(back.begin(), back.end(), v)) return false;
    }
  }
  if (endpoint_total != 2 * edges_.size()) return false;
  if (edge_position_.size() != edges_.size()) return false;
  for (std::size_t p = 0; p < edges_.size(); ++p) {
    const Edge e = edges_[p];
    if (e.u >= e.v || e.v >= adjacency_.size()) return false;
    auto it = edge_position_.find(key(e.u, e.v));
    if (it == edge_position_.end() || it->second != p) return false;
    if (!std::binary_search(adjacency_[e.u].begin(), adjacency_[e.u].end(), e.v)) return false;
  }
  return true;
}

Graph Graph::relabeled(std::span<const NodeId> permutation) const {
  if (permutation.size() != node_count()) {
    throw std::invalid_argument("permutation size does not match node count");
  }
  Graph out(node_count());
  for (const Edge& e : edges_) out.add_edge(permutation[e.u], permutation[e.v]);
  return out;
}

std::vector<Edge> Graph::sorted_edges() const {
  std::vector<Edge> out(edges_.begin(), edges_.end());
  std::sort(out.begin(), out.end(),
            [](Edge a, Edge b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
  return out;
}

std::optional<Edge> sample_uniform_edge(const Graph& g, Rng& rng, const EdgePredicate& predicate) {
  const auto edges = g.edges();
  if (edges.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, edges.size() - 1);
  if (!predicate) return edges[pick(rng)];

  // Rejection from the uniform edge distribution is exact; after a bounded
  // number of misses fall back to enumerating the qualifying edges.
  constexpr int kRejectionTries = 32;
  for (int t = 0; t < kRejectionTries; ++t) {
    const Edge e = edges[pick(rng)];
    if (predicate(g, e)) return e;
  }
  std::vector<Edge> qualifying;
  for (const Edge& e : edges) {
    if (predicate(g, e)) qualifying.push_back(e);
  }
  if (qualifying.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick_q(0, qualifying.size() - 1);
  return qualifying[pick_q(rng)];
}

bool edge_outside_triangles(const Graph& g, Edge e) { return !g.shares_neighbor(e.u, e.v); }

namespace {

// Splits on whitespace and commas.
std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',' || c == ' ' || c == '\t' || c == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

class LabelIndex {
 public:
  NodeId intern(LabeledGraph& lg, const std::string& label) {
    auto [it, inserted] = ids_.try_emplace(label, static_cast<NodeId>(lg.labels.size()));
    if (inserted) {
      lg.labels.push_back(label);
      lg.graph.add_node();
    }
    return it->second;
  }

 private:
  std::unordered_map<std::string, NodeId> ids_;
};

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

LabeledGraph parse_edge_list(std::istream& in) {
  LabeledGraph lg;
  LabelIndex index;
  std::string line;
  std::size_t line_no = 0;
  bool seen_edge = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    if (body.front() == '#') {
      std::string_view rest = trim(body.substr(1));
      if (!seen_edge && lg.labels.empty() && rest.starts_with("nodes")) {
        rest = trim(rest.substr(5));
        std::size_t n = 0;
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), n);
        if (ec != std::errc() || ptr != rest.data() + rest.size()) {
          throw ParseError("malformed '# nodes' directive", line_no);
        }
        for (std::size_t v = 0; v < n; ++v) index.intern(lg, std::to_string(v));
      }
      continue;
    }
    const auto tokens = tokenize(std::string(body));
    if (tokens.size() != 2) {
      throw ParseError("expected two labels, found " + std::to_string(tokens.size()), line_no);
    }
    seen_edge = true;
    const NodeId u = index.intern(lg, tokens[0]);
    const NodeId v = index.intern(lg, tokens[1]);
    lg.graph.add_edge(u, v);
  }
  if (in.bad()) throw IoError("read failure");
  return lg;
}

LabeledGraph load_edge_list(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_edge_list(in);
}

std::vector<ContactRecord> parse_contacts(std::istream& in) {
  std::vector<ContactRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto tokens = tokenize(std::string(body));
    if (tokens.size() != 2 && tokens.size() != 3) {
      throw ParseError("expected 'a b [count]'", line_no);
    }
    ContactRecord rec{tokens[0], tokens[1], 1};
    if (tokens.size() == 3) {
      const auto& t = tokens[2];
      auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), rec.count);
      if (ec != std::errc() || ptr != t.data() + t.size() || rec.count == 0) {
        throw ParseError("contact count must be a positive integer", line_no);
      }
    }
    records.push_back(std::move(rec));
  }
  if (in.bad()) throw IoError("read failure");
  return records;
}

std::vector<ContactRecord> load_contacts(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_contacts(in);
}

LabeledGraph flatten_contacts(std::span<const ContactRecord> records, std::uint64_t min_count) {
  if (min_count == 0) throw ContractError("flatten_contacts: min_count must be >= 1");
  LabeledGraph lg;
  LabelIndex index;
  // Ordered map keeps edge insertion order reproducible.
  std::map<std::pair<NodeId, NodeId>, std::uint64_t> totals;
  for (const auto& rec : records) {
    const NodeId a = index.intern(lg, rec.a);
    const NodeId b = index.intern(lg, rec.b);
    if (a == b) continue;
    totals[{std::min(a, b), std::max(a, b)}] += rec.count;
  }
  for (const auto& [pair, total] : totals) {
    if (total >= min_count) lg.graph.add_edge(pair.first, pair.second);
  }
  return lg;
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << "# nodes " << g.node_count() << '\n';
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

void save_edge_list(const std::filesystem::path& path, const Graph& g) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_edge_list(out, g);
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace mechnet

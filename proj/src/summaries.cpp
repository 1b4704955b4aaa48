// SPDX-License-Identifier: Apache-2.0

#include "mechnet/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <queue>

#include "mechnet/error.hpp"

namespace mechnet {

std::array<double, SummaryVector::kSize> SummaryVector::values() const {
  return {mean_degree,      sd_degree,    degree_entropy, max_degree,     triangle_count,
          two_shell_size,   dist3_pair_count, transitivity, avg_clustering, edge_count};
}

SummaryVector SummaryVector::from_values(std::span<const double> v) {
  if (v.size() != kSize) throw DimensionError("SummaryVector::from_values: expected 10 values");
  return SummaryVector{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]};
}

std::size_t count_triangles(const Graph& g) {
  // Each triangle u < v < w is found once, from its smallest vertex.
  std::size_t total = 0;
  for (NodeId u = 0; u < g.node_count(); ++u) {
    const auto nu = g.neighbors(u);
    for (NodeId v : nu) {
      if (v <= u) continue;
      const auto nv = g.neighbors(v);
      auto i = std::upper_bound(nu.begin(), nu.end(), v);
      auto j = std::upper_bound(nv.begin(), nv.end(), v);
      while (i != nu.end() && j != nv.end()) {
        if (*i == *j) {
          ++total;
          ++i;
          ++j;
        } else if (*i < *j) {
          ++i;
        } else {
          ++j;
        }
      }
    }
  }
  return total;
}

// Bucket-based peeling (Batagelj-Zaversnik).
std::vector<std::size_t> core_numbers(const Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::size_t> degree(n);
  std::size_t max_degree = 0;
  for (NodeId v = 0; v < n; ++v) {
    degree[v] = g.degree(v);
    max_degree = std::max(max_degree, degree[v]);
  }
  std::vector<std::size_t> bin(max_degree + 1, 0);
  for (std::size_t d : degree) ++bin[d];
  std::size_t start = 0;
  for (auto& b : bin) {
    const std::size_t count = b;
    b = start;
    start += count;
  }
  std::vector<std::size_t> position(n);
  std::vector<NodeId> order(n);
  for (NodeId v = 0; v < n; ++v) {
    position[v] = bin[degree[v]]++;
    order[position[v]] = v;
  }
  for (std::size_t d = max_degree; d > 0; --d) bin[d] = bin[d - 1];
  if (!bin.empty()) bin[0] = 0;

  for (std::size_t i = 0; i < n; ++i) {
    const NodeId v = order[i];
    for (NodeId u : g.neighbors(v)) {
      if (degree[u] > degree[v]) {
        const std::size_t du = degree[u];
        const std::size_t pu = position[u];
        const std::size_t pw = bin[du];
        const NodeId w = order[pw];
        if (u != w) {
          position[u] = pw;
          order[pu] = w;
          position[w] = pu;
          order[pw] = u;
        }
        ++bin[du];
        --degree[u];
      }
    }
  }
  return degree;
}

std::size_t count_pairs_at_distance(const Graph& g, std::size_t distance) {
  const std::size_t n = g.node_count();
  std::vector<std::size_t> dist(n);
  std::vector<NodeId> frontier;
  std::size_t ordered_pairs = 0;
  constexpr std::size_t kUnseen = static_cast<std::size_t>(-1);
  for (NodeId s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), kUnseen);
    dist[s] = 0;
    std::queue<NodeId> queue;
    queue.push(s);
    while (!queue.empty()) {
      const NodeId v = queue.front();
      queue.pop();
      if (dist[v] == distance) {
        ++ordered_pairs;
        continue;  // no need to expand past the target distance
      }
      for (NodeId u : g.neighbors(v)) {
        if (dist[u] == kUnseen) {
          dist[u] = dist[v] + 1;
          queue.push(u);
        }
      }
    }
  }
  return ordered_pairs / 2;
}

SummaryVector compute_summaries(const Graph& g) {
  SummaryVector s;
  const std::size_t n = g.node_count();
  if (n == 0) return s;

  std::map<std::size_t, std::size_t> histogram;
  double sum = 0.0;
  double max_degree = 0.0;
  double wedges = 0.0;
  for (NodeId v = 0; v < n; ++v) {
    const auto d = g.degree(v);
    ++histogram[d];
    sum += static_cast<double>(d);
    max_degree = std::max(max_degree, static_cast<double>(d));
    wedges += 0.5 * static_cast<double>(d) * static_cast<double>(d > 0 ? d - 1 : 0);
  }
  const double nd = static_cast<double>(n);
  s.mean_degree = sum / nd;
  double sq = 0.0;
  for (NodeId v = 0; v < n; ++v) {
    const double dev = static_cast<double>(g.degree(v)) - s.mean_degree;
    sq += dev * dev;
  }
  s.sd_degree = std::sqrt(sq / nd);
  for (const auto& [degree, count] : histogram) {
    const double p = static_cast<double>(count) / nd;
    s.degree_entropy -= p * std::log(p);
  }
  s.max_degree = max_degree;

  const auto triangles = count_triangles(g);
  s.triangle_count = static_cast<double>(triangles);

  const auto cores = core_numbers(g);
  s.two_shell_size = static_cast<double>(std::count(cores.begin(), cores.end(), std::size_t{2}));

  s.dist3_pair_count = static_cast<double>(count_pairs_at_distance(g, 3));

  s.transitivity = wedges > 0.0 ? 3.0 * static_cast<double>(triangles) / wedges : 0.0;

  // Local clustering: closed neighbor pairs over all neighbor pairs.
  double clustering_total = 0.0;
  for (NodeId v = 0; v < n; ++v) {
    const auto nbrs = g.neighbors(v);
    const std::size_t d = nbrs.size();
    if (d < 2) continue;
    std::size_t links = 0;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a + 1; b < d; ++b) {
        if (g.has_edge(nbrs[a], nbrs[b])) ++links;
      }
    }
    clustering_total += 2.0 * static_cast<double>(links) / (static_cast<double>(d) * static_cast<double>(d - 1));
  }
  s.avg_clustering = clustering_total / nd;
  s.edge_count = static_cast<double>(g.edge_count());
  return s;
}

NormalizedPool normalize_pool(std::span<const SummaryVector> pool) {
  if (pool.empty()) throw ContractError("normalize_pool: empty pool");
  constexpr std::size_t K = SummaryVector::kSize;
  NormalizedPool out;
  out.rows.reserve(pool.size());
  for (const auto& s : pool) out.rows.push_back(s.values());
  const double n = static_cast<double>(pool.size());
  for (std::size_t k = 0; k < K; ++k) {
    double mean = 0.0;
    for (const auto& r : out.rows) mean += r[k];
    mean /= n;
    double var = 0.0;
    for (const auto& r : out.rows) var += (r[k] - mean) * (r[k] - mean);
    out.means[k] = mean;
    out.sds[k] = std::sqrt(var / n);
  }
  for (auto& r : out.rows) {
    for (std::size_t k = 0; k < K; ++k) {
      r[k] = out.sds[k] > 0.0 ? (r[k] - out.means[k]) / out.sds[k] : 0.0;
    }
  }
  return out;
}

std::array<double, SummaryVector::kSize> apply_normalization(const SummaryVector& s,
                                                             const NormalizedPool& stats) {
  auto v = s.values();
  for (std::size_t k = 0; k < v.size(); ++k) {
    v[k] = stats.sds[k] > 0.0 ? (v[k] - stats.means[k]) / stats.sds[k] : 0.0;
  }
  return v;
}

void write_summary_header(std::ostream& out) {
  for (std::size_t k = 0; k < kSummaryNames.size(); ++k) {
    out << (k ? "\t" : "") << kSummaryNames[k];
  }
  out << '\n';
}

void write_summary_row(std::ostream& out, const SummaryVector& s) {
  const auto v = s.values();
  const auto old_precision = out.precision(17);
  for (std::size_t k = 0; k < v.size(); ++k) out << (k ? "\t" : "") << v[k];
  out << '\n';
  out.precision(old_precision);
}

}  // namespace mechnet

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "mechnet/graph.hpp"

namespace mechnet {

// Ten network statistics. The first nine are the posterior predictive check
// statistics; edge_count completes the vector used by rejection ABC.
// Column order is fixed and matches kSummaryNames.
struct SummaryVector {
  static constexpr std::size_t kSize = 10;
  static constexpr std::size_t kPredictiveCount = 9;

  double mean_degree = 0.0;
  double sd_degree = 0.0;
  double degree_entropy = 0.0;
  double max_degree = 0.0;
  double triangle_count = 0.0;
  double two_shell_size = 0.0;
  double dist3_pair_count = 0.0;
  double transitivity = 0.0;
  double avg_clustering = 0.0;
  double edge_count = 0.0;

  std::array<double, kSize> values() const;
  static SummaryVector from_values(std::span<const double> v);

  friend bool operator==(const SummaryVector&, const SummaryVector&) = default;
};

inline constexpr std::array<std::string_view, SummaryVector::kSize> kSummaryNames{
    "mean_degree",      "sd_degree",    "degree_entropy", "max_degree",     "triangle_count",
    "two_shell_size",   "dist3_pair_count", "transitivity", "avg_clustering", "edge_count"};

SummaryVector compute_summaries(const Graph& g);

// Building blocks, exposed for reuse and testing.
std::size_t count_triangles(const Graph& g);
std::vector<std::size_t> core_numbers(const Graph& g);
std::size_t count_pairs_at_distance(const Graph& g, std::size_t distance);

struct NormalizedPool {
  std::vector<std::array<double, SummaryVector::kSize>> rows;
  std::array<double, SummaryVector::kSize> means{};
  std::array<double, SummaryVector::kSize> sds{};
};

// Z-scores each coordinate with the pool mean and population standard
// deviation; zero-variance coordinates map to 0. Throws ContractError on an
// empty pool.
NormalizedPool normalize_pool(std::span<const SummaryVector> pool);

std::array<double, SummaryVector::kSize> apply_normalization(const SummaryVector& s,
                                                             const NormalizedPool& stats);

void write_summary_header(std::ostream& out);
void write_summary_row(std::ostream& out, const SummaryVector& s);

}  // namespace mechnet

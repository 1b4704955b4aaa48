// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "mechnet/generator.hpp"
#include "mechnet/gnn_mdn.hpp"
#include "mechnet/summaries.hpp"

namespace mechnet {

// Anything that turns an observed graph into n posterior draws.
using PosteriorSampler = std::function<std::vector<Theta>(const Graph&, std::size_t, Rng&)>;

PosteriorSampler model_sampler(const ModelWeights& weights);
// Ignores the graph and returns prior draws: the exact posterior when the
// data carry no information, used to check the coverage harness itself.
PosteriorSampler prior_sampler(const Prior& prior);

// {5, 10, ..., 95}
std::vector<double> default_gamma_grid();

struct CoverageReport {
  std::vector<double> gammas;
  // coverage[k][g]: fraction of replications whose true value of marginal
  // k (Theta::flat() order) fell inside the gammas[g] percent interval.
  std::vector<std::vector<double>> coverage;
  std::size_t replications = 0;
};

// Simulation-based calibration: for each replication draw theta' from the
// prior, simulate G', draw from the sampler and record interval hits.
// Replication r uses stream_rng(master_seed, r).
CoverageReport sbc_coverage(const PosteriorSampler& sampler, const Prior& prior, const SimConfig& sim,
                            std::size_t n_rep, std::span<const double> gamma_grid, std::size_t n_draws,
                            std::uint64_t master_seed);

// Rows of "parameter, gamma, coverage, replications".
void write_coverage_table(std::ostream& out, const CoverageReport& report);

struct PoolEntry {
  Theta theta;
  SummaryVector summaries;
};

std::vector<PoolEntry> build_abc_pool(std::size_t n, const Prior& prior, const SimConfig& sim,
                                      std::uint64_t master_seed);

void write_abc_pool(std::ostream& out, std::span<const PoolEntry> pool);
std::vector<PoolEntry> read_abc_pool(std::istream& in);

struct AbcResult {
  std::vector<std::size_t> indices;  // pool indices, nearest first
  std::vector<double> distances;
  std::vector<Theta> thetas;
};

std::size_t abc_accept_count(std::size_t pool_size, double accept_fraction);

// Keeps the ceil(accept_fraction * |pool|) entries nearest to the
// observation in Euclidean distance after z-scoring every summary with
// pool statistics. Ties go to the lower pool index.
AbcResult rejection_abc(const SummaryVector& observed, std::span<const PoolEntry> pool, double accept_fraction);
AbcResult rejection_abc(const Graph& observed, std::span<const PoolEntry> pool, double accept_fraction);

struct PpcResult {
  SummaryVector observed;
  std::vector<SummaryVector> predictive;
};

// Posterior predictive check: n_pp posterior draws, one simulated graph
// per draw with as many nodes as the observation. The seed network is
// capped at the observed node count.
PpcResult ppc_run(const PosteriorSampler& sampler, const Graph& observed, const SimConfig& base, std::size_t n_pp,
                  std::uint64_t master_seed);

// Count of the nine predictive statistics whose observed value lies in the
// central `level_pct` percent predictive interval.
std::size_t ppc_statistics_inside(const PpcResult& result, double level_pct);

// Long format: statistic, sample, value. Observed values use sample "observed".
void write_ppc_table(std::ostream& out, const PpcResult& result);

}  // namespace mechnet

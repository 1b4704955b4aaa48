// SPDX-License-Identifier: Apache-2.0

#include "mechnet/validation.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "mechnet/error.hpp"
#include "mechnet/pipeline.hpp"

namespace mechnet {

PosteriorSampler model_sampler(const ModelWeights& weights) {
  return [&weights](const Graph& g, std::size_t n, Rng& rng) { return sample_posterior(weights, g, n, rng); };
}

PosteriorSampler prior_sampler(const Prior& prior) {
  return [prior](const Graph&, std::size_t n, Rng& rng) {
    std::vector<Theta> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_prior(prior, rng));
    return out;
  };
}

std::vector<double> default_gamma_grid() {
  std::vector<double> g;
  for (int pct = 5; pct <= 95; pct += 5) g.push_back(pct);
  return g;
}

CoverageReport sbc_coverage(const PosteriorSampler& sampler, const Prior& prior, const SimConfig& sim,
                            std::size_t n_rep, std::span<const double> gamma_grid, std::size_t n_draws,
                            std::uint64_t master_seed) {
  if (n_rep == 0 || n_draws == 0) throw ContractError("sbc_coverage: n_rep and n_draws must be positive");
  CoverageReport report;
  report.gammas.assign(gamma_grid.begin(), gamma_grid.end());
  report.replications = n_rep;
  std::vector<std::vector<std::size_t>> hits(Theta::kDim, std::vector<std::size_t>(gamma_grid.size(), 0));
  for (std::size_t r = 0; r < n_rep; ++r) {
    Rng rng = stream_rng(master_seed, r);
    const Theta truth = sample_prior(prior, rng);
    const Graph g = grow_network(truth, sim, rng).graph;
    const auto draws = sampler(g, n_draws, rng);
    const auto truth_flat = truth.flat();
    for (std::size_t k = 0; k < Theta::kDim; ++k) {
      const auto column = marginal(draws, k);
      for (std::size_t gi = 0; gi < gamma_grid.size(); ++gi) {
        const auto [lo, hi] = credible_interval(column, gamma_grid[gi]);
        if (truth_flat[k] >= lo && truth_flat[k] <= hi) ++hits[k][gi];
      }
    }
  }
  report.coverage.assign(Theta::kDim, std::vector<double>(gamma_grid.size(), 0.0));
  for (std::size_t k = 0; k < Theta::kDim; ++k) {
    for (std::size_t gi = 0; gi < gamma_grid.size(); ++gi) {
      report.coverage[k][gi] = static_cast<double>(hits[k][gi]) / static_cast<double>(n_rep);
    }
  }
  return report;
}

void write_coverage_table(std::ostream& out, const CoverageReport& report) {
  out << "parameter\tgamma\tcoverage\treplications\n";
  for (std::size_t k = 0; k < report.coverage.size(); ++k) {
    for (std::size_t gi = 0; gi < report.gammas.size(); ++gi) {
      out << kThetaNames[k] << '\t' << report.gammas[gi] << '\t' << report.coverage[k][gi] << '\t'
          << report.replications << '\n';
    }
  }
}

std::vector<PoolEntry> build_abc_pool(std::size_t n, const Prior& prior, const SimConfig& sim,
                                      std::uint64_t master_seed) {
  validate_sim_config(sim);
  std::vector<PoolEntry> pool;
  pool.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const SimulationRecord rec = simulate_record(prior, sim, master_seed, i);
    pool.push_back({rec.sample.theta, compute_summaries(rec.sample.graph)});
  }
  return pool;
}

void write_abc_pool(std::ostream& out, std::span<const PoolEntry> pool) {
  const auto old = out.precision(17);
  for (std::size_t k = 0; k < kThetaNames.size(); ++k) out << (k ? "\t" : "") << kThetaNames[k];
  for (auto name : kSummaryNames) out << '\t' << name;
  out << '\n';
  for (const auto& e : pool) {
    const auto t = e.theta.flat();
    for (std::size_t k = 0; k < t.size(); ++k) out << (k ? "\t" : "") << t[k];
    for (double v : e.summaries.values()) out << '\t' << v;
    out << '\n';
  }
  out.precision(old);
}

std::vector<PoolEntry> read_abc_pool(std::istream& in) {
  std::vector<PoolEntry> pool;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::istringstream fields(line);
    std::array<double, Theta::kDim> t{};
    std::array<double, SummaryVector::kSize> s{};
    for (double& x : t) fields >> x;
    for (double& x : s) fields >> x;
    if (!fields) throw ParseError("malformed ABC pool row", line_no);
    pool.push_back({Theta::from_flat(t), SummaryVector::from_values(s)});
  }
  return pool;
}

std::size_t abc_accept_count(std::size_t pool_size, double accept_fraction) {
  if (!(accept_fraction > 0.0 && accept_fraction <= 1.0)) {
    throw ContractError("rejection_abc: accept_fraction must lie in (0, 1]");
  }
  // The small slack keeps products such as 0.002 * 100000 from rounding up.
  const double want = std::ceil(accept_fraction * static_cast<double>(pool_size) - 1e-9);
  return std::min(pool_size, static_cast<std::size_t>(std::max(1.0, want)));
}

AbcResult rejection_abc(const SummaryVector& observed, std::span<const PoolEntry> pool, double accept_fraction) {
  if (pool.empty()) throw ContractError("rejection_abc: empty pool");
  const std::size_t keep = abc_accept_count(pool.size(), accept_fraction);
  std::vector<SummaryVector> summaries;
  summaries.reserve(pool.size());
  for (const auto& e : pool) summaries.push_back(e.summaries);
  const NormalizedPool norm = normalize_pool(summaries);
  const auto obs = apply_normalization(observed, norm);

  std::vector<double> dist(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < obs.size(); ++k) {
      const double d = norm.rows[i][k] - obs[k];
      sq += d * d;
    }
    dist[i] = std::sqrt(sq);
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto closer = [&](std::size_t a, std::size_t b) { return dist[a] != dist[b] ? dist[a] < dist[b] : a < b; };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(), closer);

  AbcResult result;
  for (std::size_t i = 0; i < keep; ++i) {
    result.indices.push_back(order[i]);
    result.distances.push_back(dist[order[i]]);
    result.thetas.push_back(pool[order[i]].theta);
  }
  return result;
}

AbcResult rejection_abc(const Graph& observed, std::span<const PoolEntry> pool, double accept_fraction) {
  return rejection_abc(compute_summaries(observed), pool, accept_fraction);
}

PpcResult ppc_run(const PosteriorSampler& sampler, const Graph& observed, const SimConfig& base, std::size_t n_pp,
                  std::uint64_t master_seed) {
  if (observed.node_count() < 2) throw ContractError("ppc_run: observed graph needs at least 2 nodes");
  PpcResult result;
  result.observed = compute_summaries(observed);
  if (n_pp == 0) return result;
  SimConfig sim = base;
  sim.final_nodes = observed.node_count();
  sim.seed_nodes = std::min(base.seed_nodes, observed.node_count());
  Rng posterior_rng = stream_rng(master_seed, 0);
  const auto draws = sampler(observed, n_pp, posterior_rng);
  result.predictive.reserve(n_pp);
  for (std::size_t i = 0; i < n_pp; ++i) {
    Rng rng = stream_rng(master_seed, i + 1);
    result.predictive.push_back(compute_summaries(grow_network(draws[i], sim, rng).graph));
  }
  return result;
}

std::size_t ppc_statistics_inside(const PpcResult& result, double level_pct) {
  if (result.predictive.empty()) return 0;
  const auto obs = result.observed.values();
  std::size_t inside = 0;
  for (std::size_t k = 0; k < SummaryVector::kPredictiveCount; ++k) {
    std::vector<double> column;
    column.reserve(result.predictive.size());
    for (const auto& s : result.predictive) column.push_back(s.values()[k]);
    const auto [lo, hi] = credible_interval(column, level_pct);
    if (obs[k] >= lo && obs[k] <= hi) ++inside;
  }
  return inside;
}

void write_ppc_table(std::ostream& out, const PpcResult& result) {
  const auto old = out.precision(17);
  out << "statistic\tsample\tvalue\n";
  const auto obs = result.observed.values();
  for (std::size_t k = 0; k < SummaryVector::kSize; ++k) {
    out << kSummaryNames[k] << "\tobserved\t" << obs[k] << '\n';
    for (std::size_t i = 0; i < result.predictive.size(); ++i) {
      out << kSummaryNames[k] << '\t' << i << '\t' << result.predictive[i].values()[k] << '\n';
    }
  }
  out.precision(old);
}

}  // namespace mechnet

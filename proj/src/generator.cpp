// SPDX-License-Identifier: Apache-2.0

#include "mechnet/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mechnet/error.hpp"

namespace mechnet {

std::string_view to_string(GrowthMechanism m) {
  switch (m) {
    case GrowthMechanism::kRandom: return "RA";
    case GrowthMechanism::kPreferential: return "PA";
    case GrowthMechanism::kNegativePreferential: return "NPA";
  }
  return "?";
}

std::string_view to_string(EvolutionMechanism m) {
  switch (m) {
    case EvolutionMechanism::kTriangleFormation: return "TF";
    case EvolutionMechanism::kDisassortative: return "NPA-PA";
    case EvolutionMechanism::kPreferentialRewire: return "RA-PA";
  }
  return "?";
}

std::array<double, Theta::kDim> Theta::flat() const {
  return {lambda_g, lambda_e, alpha[0], alpha[1], alpha[2], beta[0], beta[1], beta[2]};
}

Theta Theta::from_flat(const std::array<double, kDim>& v) {
  return Theta{v[0], v[1], {v[2], v[3], v[4]}, {v[5], v[6], v[7]}};
}

namespace {

void validate_simplex(const std::array<double, 3>& w, const char* name) {
  double total = 0.0;
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0) {
      throw ContractError(std::string(name) + " has a negative or non-finite component");
    }
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ContractError(std::string(name) + " does not sum to 1");
  }
}

std::size_t pick_index(const std::array<double, 3>& weights, Rng& rng) {
  const double total = weights[0] + weights[1] + weights[2];
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  if (u < weights[0]) return 0;
  if (u < weights[0] + weights[1]) return 1;
  if (weights[2] > 0.0) return 2;
  return weights[1] > 0.0 ? 1 : 0;
}

// Log of a Gamma(shape, 1) draw. For shape < 1 uses
// G(a) = G(a + 1) * U^(1/a), which stays representable in log space.
double sample_log_gamma(double shape, Rng& rng) {
  if (shape >= 1.0) {
    return std::log(std::gamma_distribution<double>(shape, 1.0)(rng));
  }
  const double boosted = std::gamma_distribution<double>(shape + 1.0, 1.0)(rng);
  double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u <= 0.0) u = std::numeric_limits<double>::min();
  return std::log(boosted) + std::log(u) / shape;
}

enum class Attachment { kUniform, kDegree, kInverseDegree };

// Sampler over nodes [0, n) weighted by the attachment law. Degree
// weighting falls back to uniform when every candidate has degree 0.
class AttachmentSampler {
 public:
  AttachmentSampler(const Graph& g, std::size_t n, Attachment law, double epsilon) : n_(n) {
    if (law == Attachment::kUniform) return;
    std::vector<double> weights(n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = static_cast<double>(g.degree(static_cast<NodeId>(j)));
      weights[j] = law == Attachment::kDegree ? d : 1.0 / (d + epsilon);
      total += weights[j];
    }
    if (total > 0.0) {
      weighted_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
      use_weights_ = true;
    }
  }

  NodeId operator()(Rng& rng) {
    if (use_weights_) return static_cast<NodeId>(weighted_(rng));
    return static_cast<NodeId>(std::uniform_int_distribution<std::size_t>(0, n_ - 1)(rng));
  }

 private:
  std::size_t n_;
  bool use_weights_ = false;
  std::discrete_distribution<std::size_t> weighted_;
};

Attachment growth_law(GrowthMechanism m) {
  switch (m) {
    case GrowthMechanism::kRandom: return Attachment::kUniform;
    case GrowthMechanism::kPreferential: return Attachment::kDegree;
    case GrowthMechanism::kNegativePreferential: return Attachment::kInverseDegree;
  }
  return Attachment::kUniform;
}

std::optional<Edge> propose_triangle_closure(const Graph& g, const SimConfig& config, Rng& rng) {
  std::vector<NodeId> apexes;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (g.degree(v) >= 2) apexes.push_back(v);
  }
  if (apexes.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick_apex(0, apexes.size() - 1);
  std::vector<Edge> open;
  for (int attempt = 0; attempt <= config.max_mechanism_retries; ++attempt) {
    const auto nbrs = g.neighbors(apexes[pick_apex(rng)]);
    // Uniform over the apex's open neighbor pairs: a few rejection draws
    // from all pairs, then exact enumeration.
    std::uniform_int_distribution<std::size_t> pick(0, nbrs.size() - 1);
    for (int t = 0; t < 8; ++t) {
      const std::size_t a = pick(rng);
      const std::size_t b = pick(rng);
      if (a != b && !g.has_edge(nbrs[a], nbrs[b])) return make_edge(nbrs[a], nbrs[b]);
    }
    open.clear();
    for (std::size_t a = 0; a < nbrs.size(); ++a) {
      for (std::size_t b = a + 1; b < nbrs.size(); ++b) {
        if (!g.has_edge(nbrs[a], nbrs[b])) open.push_back(make_edge(nbrs[a], nbrs[b]));
      }
    }
    if (!open.empty()) {
      return open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
    }
  }
  return std::nullopt;
}

std::optional<Edge> propose_rewire(const Graph& g, Attachment first_law, const SimConfig& config,
                                   Rng& rng) {
  const std::size_t n = g.node_count();
  if (n < 2) return std::nullopt;
  AttachmentSampler first(g, n, first_law, config.npa_epsilon);
  AttachmentSampler second(g, n, Attachment::kDegree, config.npa_epsilon);
  for (int attempt = 0; attempt <= config.max_mechanism_retries; ++attempt) {
    const NodeId j = first(rng);
    const NodeId k = second(rng);
    if (j != k && !g.has_edge(j, k)) return make_edge(j, k);
  }
  return std::nullopt;
}

}  // namespace

void validate_theta(const Theta& theta) {
  if (!std::isfinite(theta.lambda_g) || theta.lambda_g < 0.0 || !std::isfinite(theta.lambda_e) ||
      theta.lambda_e < 0.0) {
    throw ContractError("event rates must be finite and non-negative");
  }
  validate_simplex(theta.alpha, "alpha");
  validate_simplex(theta.beta, "beta");
}

void validate_sim_config(const SimConfig& config) {
  if (config.seed_nodes < 2) throw ContractError("seed_nodes must be >= 2");
  if (config.final_nodes < config.seed_nodes) throw ContractError("final_nodes must be >= seed_nodes");
  if (!(config.npa_epsilon > 0.0)) throw ContractError("npa_epsilon must be positive");
  if (config.max_mechanism_retries < 1) throw ContractError("max_mechanism_retries must be positive");
}

double sample_gamma(double shape, double scale, Rng& rng) {
  const double x = std::exp(sample_log_gamma(shape, rng)) * scale;
  return std::max(x, std::numeric_limits<double>::min());
}

std::array<double, 3> sample_dirichlet(const std::array<double, 3>& concentration, Rng& rng) {
  std::array<double, 3> logs{};
  for (std::size_t k = 0; k < 3; ++k) logs[k] = sample_log_gamma(concentration[k], rng);
  const double top = *std::max_element(logs.begin(), logs.end());
  std::array<double, 3> out{};
  double total = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    out[k] = std::exp(logs[k] - top);
    total += out[k];
  }
  for (double& x : out) x /= total;
  return out;
}

std::uint64_t sample_poisson(double rate, Rng& rng) {
  if (!(rate > 0.0)) return 0;
  return std::poisson_distribution<std::uint64_t>(rate)(rng);
}

Theta sample_prior(const Prior& prior, Rng& rng) {
  Theta theta;
  const double scale = prior.rate_scale();
  theta.lambda_g = sample_gamma(prior.rate_shape, scale, rng);
  theta.lambda_e = sample_gamma(prior.rate_shape, scale, rng);
  const double c = prior.dirichlet_concentration;
  theta.alpha = sample_dirichlet({c, c, c}, rng);
  theta.beta = sample_dirichlet({c, c, c}, rng);
  return theta;
}

EventCounts sample_event_counts(const Theta& theta, Rng& rng) {
  EventCounts counts;
  counts.growth = sample_poisson(theta.lambda_g, rng);
  counts.evolution = sample_poisson(theta.lambda_e, rng);
  return counts;
}

std::optional<NodeId> select_growth_target(GrowthMechanism mechanism, const Graph& g, NodeId i,
                                           const SimConfig& config, Rng& rng) {
  if (i == 0) throw ContractError("select_growth_target: no earlier nodes to attach to");
  if (i >= g.node_count()) throw std::out_of_range("select_growth_target: node out of range");
  AttachmentSampler sampler(g, i, growth_law(mechanism), config.npa_epsilon);
  for (int attempt = 0; attempt <= config.max_mechanism_retries; ++attempt) {
    const NodeId j = sampler(rng);
    if (!g.has_edge(i, j)) return j;
  }
  return std::nullopt;
}

bool apply_evolution_event(EvolutionMechanism mechanism, Graph& g, const SimConfig& config, Rng& rng) {
  std::optional<Edge> added;
  switch (mechanism) {
    case EvolutionMechanism::kTriangleFormation:
      added = propose_triangle_closure(g, config, rng);
      break;
    case EvolutionMechanism::kDisassortative:
      added = propose_rewire(g, Attachment::kInverseDegree, config, rng);
      break;
    case EvolutionMechanism::kPreferentialRewire:
      added = propose_rewire(g, Attachment::kUniform, config, rng);
      break;
  }
  if (!added) return false;
  const Edge fresh = *added;
  g.add_edge(fresh.u, fresh.v);

  std::optional<Edge> removed;
  if (mechanism == EvolutionMechanism::kTriangleFormation) {
    // The new edge closes a triangle, so it is never eligible here.
    removed = sample_uniform_edge(g, rng, edge_outside_triangles);
  } else {
    removed = sample_uniform_edge(g, rng, [fresh](const Graph&, Edge e) { return !(e == fresh); });
  }
  if (!removed) {
    // The fresh edge sits at the back of the edge list, so this restores
    // the exact prior state.
    g.remove_edge(fresh.u, fresh.v);
    return false;
  }
  g.remove_edge(removed->u, removed->v);
  return true;
}

std::uint64_t SimDiagnostics::growth_successes() const {
  std::uint64_t total = 0;
  for (std::size_t m = 0; m < 3; ++m) total += growth_attempts[m] - growth_skipped[m];
  return total;
}

std::uint64_t SimDiagnostics::evolution_successes() const {
  std::uint64_t total = 0;
  for (std::size_t m = 0; m < 3; ++m) total += evolution_attempts[m] - evolution_skipped[m];
  return total;
}

Graph seed_graph(const SimConfig& config) {
  Graph g(config.seed_nodes);
  for (NodeId u = 0; u < config.seed_nodes; ++u) {
    for (NodeId v = u + 1; v < config.seed_nodes; ++v) g.add_edge(u, v);
  }
  return g;
}

Simulation grow_network(const Theta& theta, const SimConfig& config, Rng& rng,
                        const EvolutionObserver& observer) {
  validate_theta(theta);
  validate_sim_config(config);
  Simulation sim{seed_graph(config), {}};
  Graph& g = sim.graph;
  SimDiagnostics& diag = sim.diagnostics;

  while (g.node_count() < config.final_nodes) {
    const NodeId node = g.add_node();

    const std::uint64_t growth = sample_poisson(theta.lambda_g, rng);
    diag.growth_events += growth;
    for (std::uint64_t e = 0; e < growth; ++e) {
      const std::size_t m = pick_index(theta.alpha, rng);
      ++diag.growth_attempts[m];
      const auto target =
          select_growth_target(static_cast<GrowthMechanism>(m), g, node, config, rng);
      if (target) {
        g.add_edge(node, *target);
      } else {
        ++diag.growth_skipped[m];
      }
    }

    const std::uint64_t evolution = sample_poisson(theta.lambda_e, rng);
    diag.evolution_events += evolution;
    for (std::uint64_t e = 0; e < evolution; ++e) {
      const std::size_t m = pick_index(theta.beta, rng);
      const auto mechanism = static_cast<EvolutionMechanism>(m);
      ++diag.evolution_attempts[m];
      const std::size_t before = g.edge_count();
      const bool applied = apply_evolution_event(mechanism, g, config, rng);
      if (!applied) ++diag.evolution_skipped[m];
      if (observer) observer(EvolutionRecord{mechanism, before, g.edge_count(), applied});
    }
  }
  return sim;
}

}  // namespace mechnet

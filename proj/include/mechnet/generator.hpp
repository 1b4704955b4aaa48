// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

#include "mechnet/graph.hpp"
#include "mechnet/random.hpp"

namespace mechnet {

enum class GrowthMechanism : int { kRandom = 0, kPreferential = 1, kNegativePreferential = 2 };
enum class EvolutionMechanism : int { kTriangleFormation = 0, kDisassortative = 1, kPreferentialRewire = 2 };

std::string_view to_string(GrowthMechanism m);
std::string_view to_string(EvolutionMechanism m);

// Inference target: Poisson rates for growth and evolution events plus the
// mechanism weights. alpha is ordered (RA, PA, NPA); beta is ordered
// (TF, NPA-PA, RA-PA).
struct Theta {
  double lambda_g = 0.0;
  double lambda_e = 0.0;
  std::array<double, 3> alpha{1.0 / 3, 1.0 / 3, 1.0 / 3};
  std::array<double, 3> beta{1.0 / 3, 1.0 / 3, 1.0 / 3};

  static constexpr std::size_t kDim = 8;
  // (lambda_g, lambda_e, alpha1..3, beta1..3)
  std::array<double, kDim> flat() const;
  static Theta from_flat(const std::array<double, kDim>& v);

  friend bool operator==(const Theta&, const Theta&) = default;
};

// Throws ContractError unless rates are finite and >= 0 and both weight
// vectors lie on the simplex (sum 1 within 1e-12, components >= 0).
void validate_theta(const Theta& theta);

struct SimConfig {
  std::size_t seed_nodes = 4;
  std::size_t final_nodes = 500;
  double npa_epsilon = 1e-4;
  int max_mechanism_retries = 20;
};

void validate_sim_config(const SimConfig& config);

enum class GammaParameterization { kShapeScale, kShapeRate };

// lambda_g, lambda_e ~ Gamma(rate_shape, rate_second) and
// alpha, beta ~ Dirichlet(c, c, c).
struct Prior {
  double rate_shape = 2.0;
  double rate_second = 2.0;
  GammaParameterization parameterization = GammaParameterization::kShapeScale;
  double dirichlet_concentration = 0.5;

  double rate_scale() const {
    return parameterization == GammaParameterization::kShapeScale ? rate_second : 1.0 / rate_second;
  }
};

Theta sample_prior(const Prior& prior, Rng& rng);

// Gamma(shape, scale) draw that stays finite and positive for tiny shapes.
double sample_gamma(double shape, double scale, Rng& rng);

// Dirichlet draw computed in log space so that very small concentrations
// never yield an all-zero vector.
std::array<double, 3> sample_dirichlet(const std::array<double, 3>& concentration, Rng& rng);

std::uint64_t sample_poisson(double rate, Rng& rng);

struct EventCounts {
  std::uint64_t growth = 0;
  std::uint64_t evolution = 0;
};

EventCounts sample_event_counts(const Theta& theta, Rng& rng);

// Target for a growth edge from the newest node i, drawn from [0, i) by the
// mechanism's law. Draws already adjacent to i are redrawn up to
// max_mechanism_retries times; nullopt when every attempt collides.
// Throws ContractError when i == 0.
std::optional<NodeId> select_growth_target(GrowthMechanism mechanism, const Graph& g, NodeId i,
                                           const SimConfig& config, Rng& rng);

// One edge-conserving rewiring. Either both the new edge and the removal
// are applied, or the graph is left untouched and false is returned.
bool apply_evolution_event(EvolutionMechanism mechanism, Graph& g, const SimConfig& config, Rng& rng);

struct SimDiagnostics {
  std::uint64_t growth_events = 0;
  std::uint64_t evolution_events = 0;
  std::array<std::uint64_t, 3> growth_attempts{};
  std::array<std::uint64_t, 3> growth_skipped{};
  std::array<std::uint64_t, 3> evolution_attempts{};
  std::array<std::uint64_t, 3> evolution_skipped{};

  std::uint64_t growth_successes() const;
  std::uint64_t evolution_successes() const;
};

struct EvolutionRecord {
  EvolutionMechanism mechanism;
  std::size_t edges_before;
  std::size_t edges_after;
  bool applied;
};

using EvolutionObserver = std::function<void(const EvolutionRecord&)>;

struct Simulation {
  Graph graph;
  SimDiagnostics diagnostics;
};

// Complete graph on config.seed_nodes nodes.
Graph seed_graph(const SimConfig& config);

// Grows a network node by node until it has config.final_nodes nodes. Each
// new node receives Poisson(lambda_g) growth events with mechanisms drawn
// from alpha, followed by Poisson(lambda_e) evolution events drawn from beta.
Simulation grow_network(const Theta& theta, const SimConfig& config, Rng& rng,
                        const EvolutionObserver& observer = {});

}  // namespace mechnet

// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mechnet/autodiff.hpp"
#include "mechnet/generator.hpp"
#include "mechnet/graph.hpp"

namespace mechnet {

// Message-passing rule used by every GNN layer.
//  kHigherOrder: h' = h W_self + (sum of neighbor h) W_neigh + b
//  kGcn:         h' = (D^-1/2 (A + I) D^-1/2 h) W + b
//  kGin:         h' = MLP((1 + eps) h + sum of neighbor h), MLP = lin-relu-lin
enum class LayerVariant : int { kHigherOrder = 0, kGcn = 1, kGin = 2 };

std::string_view to_string(LayerVariant v);
// Accepts "higher_order", "gcn", "gin". ContractError otherwise.
LayerVariant parse_layer_variant(std::string_view name);

struct Architecture {
  LayerVariant variant = LayerVariant::kHigherOrder;
  std::size_t input_dim = 1;
  std::size_t gnn_layers = 5;
  std::size_t gnn_width = 20;
  std::size_t mlp_hidden_layers = 3;
  std::size_t mlp_width = 64;
  std::size_t components = 5;
  double gin_epsilon = 0.0;

  // Per component: 3 + 3 Dirichlet concentrations, 2 + 2 Gamma parameters.
  static constexpr std::size_t kParamsPerComponent = 10;
  std::size_t head_output_dim() const { return components * (1 + kParamsPerComponent); }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

inline constexpr double kPositivityFloor = 1e-4;
inline constexpr double kSimplexFloor = 1e-6;
// Scales the fan-in bound of the summed-neighbour matrices. Five rounds of
// sum aggregation otherwise start the pooled features at degree^5 scale,
// which stalls optimisation.
inline constexpr double kNeighborInitGain = 0.1;

struct ModelWeights {
  Architecture arch;
  std::vector<ad::Parameter> params;

  const ad::Parameter& at(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;
  std::size_t scalar_count() const;
  void zero_grad();
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) matrices, zero biases.
ModelWeights init_weights(const Architecture& arch, std::uint64_t seed);

struct MixtureComponent {
  std::array<double, 3> alpha_conc{};
  std::array<double, 3> beta_conc{};
  double g_shape = 1.0;
  double g_rate = 1.0;
  double e_shape = 1.0;
  double e_rate = 1.0;
};

// Approximate posterior q(theta | G): a finite mixture whose components are
// independent products Dir(alpha) Dir(beta) Gamma(lambda_g) Gamma(lambda_e).
struct MixtureDensityParams {
  std::vector<double> weights;
  std::vector<MixtureComponent> components;
};

// Constant 1.0 per node (node_count x 1).
ad::Matrix node_features(const Graph& g);

// Disjoint union of graphs for one forward pass. Node ids of graph k are
// offset by node_offsets[k]; segment_ids maps each node to its graph.
struct GraphBatch {
  std::size_t graph_count = 0;
  std::vector<std::size_t> node_offsets;
  std::vector<std::uint32_t> segment_ids;
  ad::SparseMatrix adjacency;
  ad::SparseMatrix gcn_adjacency;  // D^-1/2 (A + I) D^-1/2
  ad::Matrix features;
};

// ContractError if any graph has no nodes.
GraphBatch batch_graphs(std::span<const Graph* const> graphs);

// Weights recorded on a tape, either as trainable leaves or constants.
struct BoundWeights {
  const ModelWeights* weights = nullptr;
  std::vector<ad::Var> vars;

  const ad::Var& operator[](std::string_view name) const;
};

BoundWeights bind_weights(ad::Tape& tape, const ModelWeights& weights, bool trainable);

// Tape-level forward passes.
// Mean-pooled embeddings, graph_count x gnn_width.
ad::Var gnn_forward(const BoundWeights& w, const GraphBatch& batch);
// Raw head outputs, rows x head_output_dim().
ad::Var head_forward(const BoundWeights& w, const ad::Var& pooled);
// log q(theta_r | G_r) for every row, rows x 1.
ad::Var mixture_log_prob(const Architecture& arch, const ad::Var& raw, std::span<const Theta> thetas);

// Plain evaluation wrappers.
std::vector<double> gnn_forward(const ModelWeights& w, const Graph& g);
MixtureDensityParams head_forward(const ModelWeights& w, std::span<const double> pooled);
MixtureDensityParams posterior_params(const ModelWeights& w, const Graph& g);

// Softmax over the first `components` entries; softplus + floor elsewhere.
MixtureDensityParams decode_head(std::span<const double> raw, std::size_t components);

// Clamps simplex components to [1e-6, 1 - 2e-6] and renormalizes. Throws
// ContractError for rates that are not finite and positive, or weight
// vectors that are not (approximately) on the simplex.
Theta clamp_to_support(const Theta& theta);

double dirichlet_log_density(const std::array<double, 3>& conc, const std::array<double, 3>& x);
// Shape/rate parameterization.
double gamma_log_density(double shape, double rate, double x);
double component_log_density(const MixtureComponent& c, const Theta& theta);
// Evaluated directly in scalar code (log-sum-exp over components); an
// independent path from the tape version above.
double mixture_log_prob(const MixtureDensityParams& params, const Theta& theta);

struct Sample {
  Theta theta;
  Graph graph;
};

// Expected posterior entropy estimate: -(1/n) sum log q(theta_i | G_i).
double epe_loss(const ModelWeights& w, std::span<const Sample> batch);
double epe_loss(const ModelWeights& w, std::span<const Sample* const> batch);

// Same loss; gradients are added into w.params[*].grad.
double epe_loss_and_gradient(ModelWeights& w, std::span<const Sample* const> batch);

}  // namespace mechnet

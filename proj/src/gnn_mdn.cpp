// SPDX-License-Identifier: Apache-2.0

#include "mechnet/gnn_mdn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mechnet/error.hpp"
#include "mechnet/random.hpp"
#include "mechnet/special.hpp"

namespace mechnet {

using ad::Matrix;
using ad::Var;

std::string_view to_string(LayerVariant v) {
  switch (v) {
    case LayerVariant::kHigherOrder: return "higher_order";
    case LayerVariant::kGcn: return "gcn";
    case LayerVariant::kGin: return "gin";
  }
  return "?";
}

LayerVariant parse_layer_variant(std::string_view name) {
  if (name == "higher_order") return LayerVariant::kHigherOrder;
  if (name == "gcn") return LayerVariant::kGcn;
  if (name == "gin") return LayerVariant::kGin;
  throw ContractError("unknown layer variant '" + std::string(name) + "'");
}

const ad::Parameter& ModelWeights::at(std::string_view name) const { return params[index_of(name)]; }

std::size_t ModelWeights::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name == name) return i;
  }
  throw ContractError("no parameter named '" + std::string(name) + "'");
}

std::size_t ModelWeights::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ModelWeights::zero_grad() {
  for (auto& p : params) p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
}

namespace {

std::string layer_name(const char* prefix, std::size_t layer, const char* leaf) {
  return std::string(prefix) + "." + std::to_string(layer) + "." + leaf;
}

void add_linear(ModelWeights& w, const std::string& weight_name, const std::string& bias_name,
                std::size_t fan_in, std::size_t fan_out, Rng& rng, double gain = 1.0) {
  const double bound = gain / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix m(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  w.params.push_back({weight_name, std::move(m), {}});
  if (!bias_name.empty()) {
    w.params.push_back({bias_name, Matrix::Zero(1, static_cast<Eigen::Index>(fan_out)), {}});
  }
}

void check_finite(const Var& v, const std::string& where) {
  if (!v.value().allFinite()) throw NumericError(where + " produced non-finite values");
}

}  // namespace

ModelWeights init_weights(const Architecture& arch, std::uint64_t seed) {
  if (arch.gnn_layers == 0 || arch.gnn_width == 0 || arch.mlp_width == 0 || arch.components == 0 ||
      arch.input_dim == 0) {
    throw ContractError("architecture dimensions must be positive");
  }
  ModelWeights w{arch, {}};
  Rng rng(splitmix64(seed));
  std::size_t in = arch.input_dim;
  for (std::size_t l = 0; l < arch.gnn_layers; ++l) {
    const std::size_t out = arch.gnn_width;
    switch (arch.variant) {
      case LayerVariant::kHigherOrder:
        add_linear(w, layer_name("gnn", l, "self"), layer_name("gnn", l, "bias"), in, out, rng);
        add_linear(w, layer_name("gnn", l, "neigh"), "", in, out, rng, kNeighborInitGain);
        break;
      case LayerVariant::kGcn:
        add_linear(w, layer_name("gnn", l, "weight"), layer_name("gnn", l, "bias"), in, out, rng);
        break;
      case LayerVariant::kGin:
        add_linear(w, layer_name("gnn", l, "lin1.weight"), layer_name("gnn", l, "lin1.bias"), in, out, rng);
        add_linear(w, layer_name("gnn", l, "lin2.weight"), layer_name("gnn", l, "lin2.bias"), out, out, rng);
        break;
    }
    in = out;
  }
  for (std::size_t k = 0; k <= arch.mlp_hidden_layers; ++k) {
    const std::size_t out = k == arch.mlp_hidden_layers ? arch.head_output_dim() : arch.mlp_width;
    add_linear(w, layer_name("head", k, "weight"), layer_name("head", k, "bias"), in, out, rng);
    in = out;
  }
  return w;
}

ad::Matrix node_features(const Graph& g) {
  return Matrix::Ones(static_cast<Eigen::Index>(g.node_count()), 1);
}

GraphBatch batch_graphs(std::span<const Graph* const> graphs) {
  GraphBatch batch;
  batch.graph_count = graphs.size();
  std::size_t total = 0;
  std::size_t edges = 0;
  for (const Graph* g : graphs) {
    if (g->node_count() == 0) throw ContractError("batch_graphs: graph without nodes");
    batch.node_offsets.push_back(total);
    total += g->node_count();
    edges += g->edge_count();
  }
  batch.segment_ids.reserve(total);
  std::vector<Eigen::Triplet<double>> plain;
  std::vector<Eigen::Triplet<double>> normalized;
  plain.reserve(2 * edges);
  normalized.reserve(2 * edges + total);
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const Graph& g = *graphs[k];
    const auto offset = static_cast<Eigen::Index>(batch.node_offsets[k]);
    for (NodeId v = 0; v < g.node_count(); ++v) {
      batch.segment_ids.push_back(static_cast<std::uint32_t>(k));
      const double dv = static_cast<double>(g.degree(v)) + 1.0;
      normalized.emplace_back(offset + v, offset + v, 1.0 / dv);
      for (NodeId u : g.neighbors(v)) {
        plain.emplace_back(offset + v, offset + u, 1.0);
        const double du = static_cast<double>(g.degree(u)) + 1.0;
        normalized.emplace_back(offset + v, offset + u, 1.0 / std::sqrt(dv * du));
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(total);
  batch.adjacency.resize(n, n);
  batch.adjacency.setFromTriplets(plain.begin(), plain.end());
  batch.gcn_adjacency.resize(n, n);
  batch.gcn_adjacency.setFromTriplets(normalized.begin(), normalized.end());
  batch.features = Matrix::Ones(n, 1);
  return batch;
}

const Var& BoundWeights::operator[](std::string_view name) const { return vars[weights->index_of(name)]; }

BoundWeights bind_weights(ad::Tape& tape, const ModelWeights& weights, bool trainable) {
  BoundWeights bound{&weights, {}};
  bound.vars.reserve(weights.params.size());
  for (const auto& p : weights.params) {
    bound.vars.push_back(trainable ? tape.leaf(p.value) : tape.constant(p.value));
  }
  return bound;
}

namespace {

Var linear(const BoundWeights& w, const Var& x, const std::string& weight, const std::string& bias) {
  return ad::row_broadcast_add(ad::matmul(x, w[weight]), w[bias]);
}

}  // namespace

Var gnn_forward(const BoundWeights& w, const GraphBatch& batch) {
  const Architecture& arch = w.weights->arch;
  ad::Tape& tape = *w.vars.front().tape();
  Var h = tape.constant(batch.features);
  for (std::size_t l = 0; l < arch.gnn_layers; ++l) {
    Var next;
    switch (arch.variant) {
      case LayerVariant::kHigherOrder: {
        const Var self = ad::matmul(h, w[layer_name("gnn", l, "self")]);
        const Var neigh = ad::matmul(ad::spmm(batch.adjacency, h), w[layer_name("gnn", l, "neigh")]);
        next = ad::row_broadcast_add(ad::add(self, neigh), w[layer_name("gnn", l, "bias")]);
        break;
      }
      case LayerVariant::kGcn:
        next = linear(w, ad::spmm(batch.gcn_adjacency, h), layer_name("gnn", l, "weight"),
                      layer_name("gnn", l, "bias"));
        break;
      case LayerVariant::kGin: {
        const Var combined = ad::add(ad::scale(h, 1.0 + arch.gin_epsilon), ad::spmm(batch.adjacency, h));
        const Var hidden = ad::relu(
            linear(w, combined, layer_name("gnn", l, "lin1.weight"), layer_name("gnn", l, "lin1.bias")));
        next = linear(w, hidden, layer_name("gnn", l, "lin2.weight"), layer_name("gnn", l, "lin2.bias"));
        break;
      }
    }
    check_finite(next, "gnn layer " + std::to_string(l));
    h = l + 1 < arch.gnn_layers ? ad::relu(next) : next;
  }
  return ad::segment_mean(h, batch.segment_ids, batch.graph_count);
}

Var head_forward(const BoundWeights& w, const Var& pooled) {
  const Architecture& arch = w.weights->arch;
  Var h = pooled;
  for (std::size_t k = 0; k <= arch.mlp_hidden_layers; ++k) {
    h = linear(w, h, layer_name("head", k, "weight"), layer_name("head", k, "bias"));
    check_finite(h, "head layer " + std::to_string(k));
    if (k < arch.mlp_hidden_layers) h = ad::relu(h);
  }
  return h;
}

Theta clamp_to_support(const Theta& theta) {
  if (!std::isfinite(theta.lambda_g) || !(theta.lambda_g > 0.0) || !std::isfinite(theta.lambda_e) ||
      !(theta.lambda_e > 0.0)) {
    throw ContractError("event rates must be finite and positive for density evaluation");
  }
  auto clamp_simplex = [](const std::array<double, 3>& w, const char* name) {
    double total = 0.0;
    for (double x : w) {
      if (!std::isfinite(x) || x < -1e-9) throw ContractError(std::string(name) + " is off the simplex");
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-6) throw ContractError(std::string(name) + " does not sum to 1");
    std::array<double, 3> out{};
    double clamped_total = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      out[k] = std::clamp(w[k], kSimplexFloor, 1.0 - 2.0 * kSimplexFloor);
      clamped_total += out[k];
    }
    for (double& x : out) x /= clamped_total;
    return out;
  };
  Theta out = theta;
  out.alpha = clamp_simplex(theta.alpha, "alpha");
  out.beta = clamp_simplex(theta.beta, "beta");
  return out;
}

Var mixture_log_prob(const Architecture& arch, const Var& raw, std::span<const Theta> thetas) {
  const auto K = static_cast<Eigen::Index>(arch.components);
  const auto B = raw.rows();
  if (raw.cols() != static_cast<Eigen::Index>(arch.head_output_dim())) {
    throw DimensionError("mixture_log_prob: head output width does not match architecture");
  }
  if (static_cast<std::size_t>(B) != thetas.size()) {
    throw DimensionError("mixture_log_prob: one theta per row required");
  }
  Matrix log_alpha(B, 3 * K), log_beta(B, 3 * K), lam_g(B, K), lam_e(B, K), log_g(B, K), log_e(B, K);
  for (Eigen::Index r = 0; r < B; ++r) {
    const Theta t = clamp_to_support(thetas[static_cast<std::size_t>(r)]);
    for (Eigen::Index k = 0; k < K; ++k) {
      for (Eigen::Index j = 0; j < 3; ++j) {
        log_alpha(r, 3 * k + j) = std::log(t.alpha[static_cast<std::size_t>(j)]);
        log_beta(r, 3 * k + j) = std::log(t.beta[static_cast<std::size_t>(j)]);
      }
      lam_g(r, k) = t.lambda_g;
      lam_e(r, k) = t.lambda_e;
      log_g(r, k) = std::log(t.lambda_g);
      log_e(r, k) = std::log(t.lambda_e);
    }
  }

  auto positive = [](const Var& x) { return ad::add_scalar(ad::softplus(x), kPositivityFloor); };
  auto dirichlet = [&](const Var& conc, const Matrix& log_x) {
    const Var norm = ad::sub(ad::lgamma(ad::group_sum_cols(conc, 3)), ad::group_sum_cols(ad::lgamma(conc), 3));
    return ad::add(norm, ad::group_sum_cols(ad::mul_const(ad::add_scalar(conc, -1.0), log_x), 3));
  };
  auto gamma = [&](const Var& shape, const Var& rate, const Matrix& x, const Matrix& log_x) {
    const Var a = ad::sub(ad::mul(shape, ad::log(rate)), ad::lgamma(shape));
    const Var b = ad::sub(ad::mul_const(ad::add_scalar(shape, -1.0), log_x), ad::mul_const(rate, x));
    return ad::add(a, b);
  };

  const Var log_weights = ad::log_softmax_row(ad::slice_cols(raw, 0, K));
  const Var alpha_conc = positive(ad::slice_cols(raw, K, 3 * K));
  const Var beta_conc = positive(ad::slice_cols(raw, 4 * K, 3 * K));
  const Var g_shape = positive(ad::slice_cols(raw, 7 * K, K));
  const Var g_rate = positive(ad::slice_cols(raw, 8 * K, K));
  const Var e_shape = positive(ad::slice_cols(raw, 9 * K, K));
  const Var e_rate = positive(ad::slice_cols(raw, 10 * K, K));

  Var per_component = ad::add(log_weights, dirichlet(alpha_conc, log_alpha));
  per_component = ad::add(per_component, dirichlet(beta_conc, log_beta));
  per_component = ad::add(per_component, gamma(g_shape, g_rate, lam_g, log_g));
  per_component = ad::add(per_component, gamma(e_shape, e_rate, lam_e, log_e));
  return ad::logsumexp_row(per_component);
}

MixtureDensityParams decode_head(std::span<const double> raw, std::size_t components) {
  const std::size_t K = components;
  if (raw.size() != K * (1 + Architecture::kParamsPerComponent)) {
    throw DimensionError("decode_head: raw output has the wrong width");
  }
  for (double x : raw) {
    if (!std::isfinite(x)) throw NumericError("head output layer produced non-finite values");
  }
  MixtureDensityParams out;
  const double top = *std::max_element(raw.begin(), raw.begin() + static_cast<std::ptrdiff_t>(K));
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    out.weights.push_back(std::exp(raw[k] - top));
    total += out.weights.back();
  }
  for (double& w : out.weights) w /= total;
  auto pos = [&](std::size_t i) { return special::softplus(raw[i]) + kPositivityFloor; };
  for (std::size_t k = 0; k < K; ++k) {
    MixtureComponent c;
    for (std::size_t j = 0; j < 3; ++j) {
      c.alpha_conc[j] = pos(K + 3 * k + j);
      c.beta_conc[j] = pos(4 * K + 3 * k + j);
    }
    c.g_shape = pos(7 * K + k);
    c.g_rate = pos(8 * K + k);
    c.e_shape = pos(9 * K + k);
    c.e_rate = pos(10 * K + k);
    out.components.push_back(c);
  }
  return out;
}

std::vector<double> gnn_forward(const ModelWeights& w, const Graph& g) {
  if (g.node_count() == 0) throw ContractError("gnn_forward: empty graph");
  ad::Tape tape;
  const BoundWeights bound = bind_weights(tape, w, false);
  const Graph* one[] = {&g};
  const GraphBatch batch = batch_graphs(one);
  const Var pooled = gnn_forward(bound, batch);
  return {pooled.value().data(), pooled.value().data() + pooled.value().size()};
}

MixtureDensityParams head_forward(const ModelWeights& w, std::span<const double> pooled) {
  if (pooled.size() != w.arch.gnn_width) throw DimensionError("head_forward: pooled vector has the wrong width");
  ad::Tape tape;
  const BoundWeights bound = bind_weights(tape, w, false);
  Matrix input(1, static_cast<Eigen::Index>(pooled.size()));
  std::copy(pooled.begin(), pooled.end(), input.data());
  const Var raw = head_forward(bound, tape.constant(std::move(input)));
  return decode_head({raw.value().data(), static_cast<std::size_t>(raw.value().size())}, w.arch.components);
}

MixtureDensityParams posterior_params(const ModelWeights& w, const Graph& g) {
  return head_forward(w, gnn_forward(w, g));
}

double dirichlet_log_density(const std::array<double, 3>& conc, const std::array<double, 3>& x) {
  double total = 0.0;
  double out = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    total += conc[j];
    out += -special::lgamma(conc[j]) + (conc[j] - 1.0) * std::log(x[j]);
  }
  return out + special::lgamma(total);
}

double gamma_log_density(double shape, double rate, double x) {
  return shape * std::log(rate) - special::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double component_log_density(const MixtureComponent& c, const Theta& theta) {
  return dirichlet_log_density(c.alpha_conc, theta.alpha) + dirichlet_log_density(c.beta_conc, theta.beta) +
         gamma_log_density(c.g_shape, c.g_rate, theta.lambda_g) +
         gamma_log_density(c.e_shape, c.e_rate, theta.lambda_e);
}

double mixture_log_prob(const MixtureDensityParams& params, const Theta& theta) {
  if (params.weights.size() != params.components.size() || params.weights.empty()) {
    throw DimensionError("mixture_log_prob: weights and components disagree");
  }
  const Theta t = clamp_to_support(theta);
  std::vector<double> terms;
  terms.reserve(params.weights.size());
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    if (params.weights[k] <= 0.0) continue;
    terms.push_back(std::log(params.weights[k]) + component_log_density(params.components[k], t));
  }
  if (terms.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(terms.begin(), terms.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double x : terms) acc += std::exp(x - top);
  return top + std::log(acc);
}

namespace {

struct LossPass {
  ad::Tape tape;
  BoundWeights bound;
  Var loss;
};

void run_loss(LossPass& pass, const ModelWeights& w, std::span<const Sample* const> batch, bool trainable) {
  if (batch.empty()) throw ContractError("epe_loss: empty batch");
  pass.bound = bind_weights(pass.tape, w, trainable);
  std::vector<const Graph*> graphs;
  std::vector<Theta> thetas;
  graphs.reserve(batch.size());
  thetas.reserve(batch.size());
  for (const Sample* s : batch) {
    graphs.push_back(&s->graph);
    thetas.push_back(s->theta);
  }
  const GraphBatch gb = batch_graphs(graphs);
  const Var pooled = gnn_forward(pass.bound, gb);
  const Var raw = head_forward(pass.bound, pooled);
  const Var log_q = mixture_log_prob(w.arch, raw, thetas);
  pass.loss = ad::scale(ad::mean(log_q), -1.0);
  if (!std::isfinite(pass.loss.value()(0, 0))) throw NumericError("epe_loss: non-finite loss");
}

}  // namespace

double epe_loss(const ModelWeights& w, std::span<const Sample* const> batch) {
  LossPass pass;
  run_loss(pass, w, batch, false);
  return pass.loss.value()(0, 0);
}

double epe_loss(const ModelWeights& w, std::span<const Sample> batch) {
  std::vector<const Sample*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& s : batch) ptrs.push_back(&s);
  return epe_loss(w, std::span<const Sample* const>(ptrs));
}

double epe_loss_and_gradient(ModelWeights& w, std::span<const Sample* const> batch) {
  LossPass pass;
  run_loss(pass, w, batch, true);
  pass.tape.backward(pass.loss);
  for (std::size_t i = 0; i < w.params.size(); ++i) {
    auto& p = w.params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
    }
    const Matrix& g = pass.bound.vars[i].grad();
    if (g.size() == p.grad.size()) p.grad += g;
  }
  return pass.loss.value()(0, 0);
}

}  // namespace mechnet

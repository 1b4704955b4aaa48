// SPDX-License-Identifier: Apache-2.0

#include "mechnet/mechnet.h"

#include <algorithm>
#include <fstream>
#include <new>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mechnet/checkpoint.hpp"
#include "mechnet/error.hpp"
#include "mechnet/generator.hpp"
#include "mechnet/gnn_mdn.hpp"
#include "mechnet/graph.hpp"
#include "mechnet/pipeline.hpp"
#include "mechnet/summaries.hpp"
#include "mechnet/validation.hpp"

struct mn_graph {
  mechnet::Graph graph;
};

struct mn_model {
  mechnet::ModelWeights weights;
};

struct mn_dataset {
  mechnet::Dataset samples;
};

struct mn_abc_pool {
  std::vector<mechnet::PoolEntry> entries;
};

namespace {

thread_local std::string g_last_error;

mn_status fail(mn_status status, const char* what) {
  g_last_error = what;
  return status;
}

template <typename F>
mn_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return MN_OK;
  } catch (const mechnet::ParseError& e) {
    return fail(MN_ERR_PARSE, e.what());
  } catch (const mechnet::IoError& e) {
    return fail(MN_ERR_IO, e.what());
  } catch (const mechnet::NumericError& e) {
    return fail(MN_ERR_NUMERIC, e.what());
  } catch (const mechnet::DimensionError& e) {
    return fail(MN_ERR_INVALID_ARGUMENT, e.what());
  } catch (const mechnet::ContractError& e) {
    return fail(MN_ERR_CONTRACT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(MN_ERR_OUT_OF_RANGE, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(MN_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(MN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(MN_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(MN_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

mechnet::Theta to_theta(const mn_theta& t) {
  mechnet::Theta out;
  out.lambda_g = t.lambda_g;
  out.lambda_e = t.lambda_e;
  std::copy(t.alpha, t.alpha + 3, out.alpha.begin());
  std::copy(t.beta, t.beta + 3, out.beta.begin());
  return out;
}

mn_theta from_theta(const mechnet::Theta& t) {
  mn_theta out{};
  out.lambda_g = t.lambda_g;
  out.lambda_e = t.lambda_e;
  std::copy(t.alpha.begin(), t.alpha.end(), out.alpha);
  std::copy(t.beta.begin(), t.beta.end(), out.beta);
  return out;
}

mechnet::SimConfig to_sim(const mn_sim_config* c) {
  if (!c) return mechnet::SimConfig{};
  mechnet::SimConfig out;
  out.seed_nodes = c->seed_nodes;
  out.final_nodes = c->final_nodes;
  out.npa_epsilon = c->npa_epsilon;
  out.max_mechanism_retries = c->max_mechanism_retries;
  return out;
}

mechnet::Prior to_prior(const mn_prior* p) {
  if (!p) return mechnet::Prior{};
  mechnet::Prior out;
  out.rate_shape = p->rate_shape;
  out.rate_second = p->rate_second;
  require(p->parameterization == MN_GAMMA_SHAPE_SCALE || p->parameterization == MN_GAMMA_SHAPE_RATE,
          "unknown gamma parameterization");
  out.parameterization = p->parameterization == MN_GAMMA_SHAPE_RATE ? mechnet::GammaParameterization::kShapeRate
                                                                    : mechnet::GammaParameterization::kShapeScale;
  out.dirichlet_concentration = p->dirichlet_concentration;
  require(out.rate_shape > 0 && out.rate_second > 0 && out.dirichlet_concentration > 0,
          "prior parameters must be positive");
  return out;
}

mechnet::Architecture to_arch(const mn_architecture& a) {
  mechnet::Architecture out;
  switch (a.variant) {
    case MN_LAYER_HIGHER_ORDER: out.variant = mechnet::LayerVariant::kHigherOrder; break;
    case MN_LAYER_GCN: out.variant = mechnet::LayerVariant::kGcn; break;
    case MN_LAYER_GIN: out.variant = mechnet::LayerVariant::kGin; break;
    default: throw std::invalid_argument("unknown layer variant");
  }
  out.gnn_layers = a.gnn_layers;
  out.gnn_width = a.gnn_width;
  out.mlp_hidden_layers = a.mlp_hidden_layers;
  out.mlp_width = a.mlp_width;
  out.components = a.components;
  return out;
}

mn_architecture from_arch(const mechnet::Architecture& a) {
  mn_architecture out{};
  switch (a.variant) {
    case mechnet::LayerVariant::kHigherOrder: out.variant = MN_LAYER_HIGHER_ORDER; break;
    case mechnet::LayerVariant::kGcn: out.variant = MN_LAYER_GCN; break;
    case mechnet::LayerVariant::kGin: out.variant = MN_LAYER_GIN; break;
  }
  out.gnn_layers = a.gnn_layers;
  out.gnn_width = a.gnn_width;
  out.mlp_hidden_layers = a.mlp_hidden_layers;
  out.mlp_width = a.mlp_width;
  out.components = a.components;
  return out;
}

void copy_diagnostics(const mechnet::SimDiagnostics& d, mn_diagnostics* out) {
  out->growth_events = d.growth_events;
  out->evolution_events = d.evolution_events;
  for (int k = 0; k < 3; ++k) {
    out->growth_attempts[k] = d.growth_attempts[k];
    out->growth_skipped[k] = d.growth_skipped[k];
    out->evolution_attempts[k] = d.evolution_attempts[k];
    out->evolution_skipped[k] = d.evolution_skipped[k];
  }
}

void copy_summaries(const mechnet::SummaryVector& s, double* out) {
  const auto v = s.values();
  std::copy(v.begin(), v.end(), out);
}

}  // namespace

extern "C" {

const char* mn_last_error(void) { return g_last_error.c_str(); }

const char* mn_status_string(mn_status status) {
  switch (status) {
    case MN_OK: return "ok";
    case MN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MN_ERR_OUT_OF_RANGE: return "out of range";
    case MN_ERR_PARSE: return "parse error";
    case MN_ERR_IO: return "i/o error";
    case MN_ERR_NUMERIC: return "numeric error";
    case MN_ERR_CONTRACT: return "contract violation";
    case MN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void mn_default_sim_config(mn_sim_config* out) {
  if (!out) return;
  const mechnet::SimConfig d;
  *out = {d.seed_nodes, d.final_nodes, d.npa_epsilon, d.max_mechanism_retries};
}

void mn_default_prior(mn_prior* out) {
  if (!out) return;
  const mechnet::Prior d;
  *out = {d.rate_shape, d.rate_second, MN_GAMMA_SHAPE_SCALE, d.dirichlet_concentration};
}

void mn_default_architecture(mn_architecture* out) {
  if (out) *out = from_arch(mechnet::Architecture{});
}

void mn_default_train_config(mn_train_config* out) {
  if (!out) return;
  const mechnet::RunConfig d;
  *out = {d.lr, d.max_epochs, d.patience, d.batch_size, d.master_seed, d.val_splits};
}

mn_status mn_graph_create(size_t node_count, mn_graph** out) {
  return guarded([&] {
    require(out, "out is null");
    *out = new mn_graph{mechnet::Graph(node_count)};
  });
}

void mn_graph_free(mn_graph* g) { delete g; }

mn_status mn_graph_add_node(mn_graph* g, uint32_t* out_id) {
  return guarded([&] {
    require(g, "graph is null");
    const auto id = g->graph.add_node();
    if (out_id) *out_id = id;
  });
}

mn_status mn_graph_add_edge(mn_graph* g, uint32_t u, uint32_t v, int* changed) {
  return guarded([&] {
    require(g, "graph is null");
    const bool c = g->graph.add_edge(u, v);
    if (changed) *changed = c ? 1 : 0;
  });
}

mn_status mn_graph_remove_edge(mn_graph* g, uint32_t u, uint32_t v, int* changed) {
  return guarded([&] {
    require(g, "graph is null");
    const bool c = g->graph.remove_edge(u, v);
    if (changed) *changed = c ? 1 : 0;
  });
}

mn_status mn_graph_has_edge(const mn_graph* g, uint32_t u, uint32_t v, int* out) {
  return guarded([&] {
    require(g && out, "null argument");
    *out = g->graph.has_edge(u, v) ? 1 : 0;
  });
}

size_t mn_graph_node_count(const mn_graph* g) { return g ? g->graph.node_count() : 0; }
size_t mn_graph_edge_count(const mn_graph* g) { return g ? g->graph.edge_count() : 0; }

mn_status mn_graph_degree(const mn_graph* g, uint32_t v, size_t* out) {
  return guarded([&] {
    require(g && out, "null argument");
    *out = g->graph.degree(v);
  });
}

mn_status mn_graph_edges(const mn_graph* g, uint32_t* pairs, size_t capacity, size_t* written) {
  return guarded([&] {
    require(g, "graph is null");
    require(pairs || capacity == 0, "pairs is null");
    const auto edges = g->graph.sorted_edges();
    const size_t n = std::min(capacity, edges.size());
    for (size_t i = 0; i < n; ++i) {
      pairs[2 * i] = edges[i].u;
      pairs[2 * i + 1] = edges[i].v;
    }
    if (written) *written = edges.size();
  });
}

mn_status mn_graph_load_edge_list(const char* path, mn_graph** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new mn_graph{mechnet::load_edge_list(path).graph};
  });
}

mn_status mn_graph_load_contacts(const char* path, uint64_t min_count, mn_graph** out) {
  return guarded([&] {
    require(path && out, "null argument");
    const auto records = mechnet::load_contacts(path);
    *out = new mn_graph{mechnet::flatten_contacts(records, min_count).graph};
  });
}

mn_status mn_graph_save_edge_list(const mn_graph* g, const char* path) {
  return guarded([&] {
    require(g && path, "null argument");
    mechnet::save_edge_list(path, g->graph);
  });
}

mn_status mn_graph_summaries(const mn_graph* g, double* out) {
  return guarded([&] {
    require(g && out, "null argument");
    copy_summaries(mechnet::compute_summaries(g->graph), out);
  });
}

const char* mn_summary_name(size_t index) {
  return index < mechnet::kSummaryNames.size() ? mechnet::kSummaryNames[index].data() : nullptr;
}

mn_status mn_simulate(const mn_theta* theta, const mn_sim_config* config, uint64_t seed, mn_graph** out,
                      mn_diagnostics* diagnostics) {
  return guarded([&] {
    require(theta && out, "null argument");
    mechnet::Rng rng(seed);
    auto sim = mechnet::grow_network(to_theta(*theta), to_sim(config), rng);
    if (diagnostics) copy_diagnostics(sim.diagnostics, diagnostics);
    *out = new mn_graph{std::move(sim.graph)};
  });
}

mn_status mn_sample_prior(const mn_prior* prior, uint64_t seed, size_t n, mn_theta* out) {
  return guarded([&] {
    require(out || n == 0, "out is null");
    const auto p = to_prior(prior);
    mechnet::Rng rng(seed);
    for (size_t i = 0; i < n; ++i) out[i] = from_theta(mechnet::sample_prior(p, rng));
  });
}

mn_status mn_dataset_generate(size_t n, const mn_prior* prior, const mn_sim_config* config, uint64_t master_seed,
                              mn_dataset** out) {
  return guarded([&] {
    require(out, "out is null");
    *out = new mn_dataset{mechnet::generate_dataset(n, to_prior(prior), to_sim(config), master_seed)};
  });
}

mn_status mn_dataset_save(size_t n, const mn_prior* prior, const mn_sim_config* config, uint64_t master_seed,
                          const char* dir) {
  return guarded([&] {
    require(dir, "dir is null");
    mechnet::write_dataset(dir, n, to_prior(prior), to_sim(config), master_seed, false);
  });
}

mn_status mn_dataset_load(const char* dir, mn_dataset** out) {
  return guarded([&] {
    require(dir && out, "null argument");
    *out = new mn_dataset{mechnet::read_dataset(dir)};
  });
}

size_t mn_dataset_size(const mn_dataset* d) { return d ? d->samples.size() : 0; }

mn_status mn_dataset_theta(const mn_dataset* d, size_t index, mn_theta* out) {
  return guarded([&] {
    require(d && out, "null argument");
    *out = from_theta(d->samples.at(index).theta);
  });
}

void mn_dataset_free(mn_dataset* d) { delete d; }

mn_status mn_model_create(const mn_architecture* arch, uint64_t seed, mn_model** out) {
  return guarded([&] {
    require(out, "out is null");
    const auto a = arch ? to_arch(*arch) : mechnet::Architecture{};
    *out = new mn_model{mechnet::init_weights(a, seed)};
  });
}

mn_status mn_model_load(const char* path, mn_model** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new mn_model{mechnet::load_model(path)};
  });
}

mn_status mn_model_save(const mn_model* m, const char* path) {
  return guarded([&] {
    require(m && path, "null argument");
    mechnet::save_model(m->weights, path);
  });
}

void mn_model_free(mn_model* m) { delete m; }

mn_status mn_model_architecture(const mn_model* m, mn_architecture* out) {
  return guarded([&] {
    require(m && out, "null argument");
    *out = from_arch(m->weights.arch);
  });
}

mn_status mn_model_epe(const mn_model* m, const mn_dataset* set, double* out) {
  return guarded([&] {
    require(m && set && out, "null argument");
    *out = mechnet::evaluate_epe(m->weights, set->samples, mechnet::RunConfig{}.batch_size);
  });
}

mn_status mn_model_train(mn_model* m, const mn_train_config* config, const mn_dataset* train_set,
                         const mn_dataset* val_set, mn_epoch_callback on_epoch, void* user) {
  return guarded([&] {
    require(m && train_set && val_set, "null argument");
    mechnet::RunConfig rc;
    if (config) {
      rc.lr = config->lr;
      rc.max_epochs = config->max_epochs;
      rc.patience = config->patience;
      rc.batch_size = config->batch_size;
      rc.master_seed = config->master_seed;
      rc.val_splits = config->val_splits;
    }
    rc.n_train = train_set->samples.size();
    rc.n_val = val_set->samples.size();
    mechnet::EpochCallback cb;
    if (on_epoch) {
      cb = [on_epoch, user](const mechnet::EpochRecord& r) {
        const mn_epoch_record rec{r.epoch, r.train_epe, r.val_epe, r.val_split_min, r.val_split_max, r.wall_seconds};
        on_epoch(&rec, user);
      };
    }
    auto result = mechnet::train(rc, m->weights, train_set->samples, val_set->samples, cb);
    m->weights = std::move(result.weights);
  });
}

mn_status mn_model_sample_posterior(const mn_model* m, const mn_graph* g, size_t n, uint64_t seed, mn_theta* out) {
  return guarded([&] {
    require(m && g && (out || n == 0), "null argument");
    mechnet::Rng rng(seed);
    const auto draws = mechnet::sample_posterior(m->weights, g->graph, n, rng);
    for (size_t i = 0; i < n; ++i) out[i] = from_theta(draws[i]);
  });
}

mn_status mn_model_posterior_mean(const mn_model* m, const mn_graph* g, double* out) {
  return guarded([&] {
    require(m && g && out, "null argument");
    const auto means = mechnet::mixture_means(mechnet::posterior_params(m->weights, g->graph));
    std::copy(means.begin(), means.end(), out);
  });
}

mn_status mn_model_log_prob(const mn_model* m, const mn_graph* g, const mn_theta* theta, double* out) {
  return guarded([&] {
    require(m && g && theta && out, "null argument");
    *out = mechnet::mixture_log_prob(mechnet::posterior_params(m->weights, g->graph), to_theta(*theta));
  });
}

mn_status mn_credible_interval(const double* draws, size_t n, double gamma_pct, double* lo, double* hi) {
  return guarded([&] {
    require(draws && lo && hi, "null argument");
    const auto [a, b] = mechnet::credible_interval(std::span<const double>(draws, n), gamma_pct);
    *lo = a;
    *hi = b;
  });
}

mn_status mn_sbc_coverage(const mn_model* m, const mn_prior* prior, const mn_sim_config* config, size_t n_rep,
                          const double* gammas, size_t gamma_count, size_t n_draws, uint64_t master_seed,
                          double* coverage) {
  return guarded([&] {
    require(m && gammas && coverage && gamma_count > 0, "null argument");
    const auto report = mechnet::sbc_coverage(mechnet::model_sampler(m->weights), to_prior(prior), to_sim(config),
                                              n_rep, std::span<const double>(gammas, gamma_count), n_draws,
                                              master_seed);
    for (size_t k = 0; k < report.coverage.size(); ++k) {
      std::copy(report.coverage[k].begin(), report.coverage[k].end(), coverage + k * gamma_count);
    }
  });
}

mn_status mn_abc_pool_build(size_t n, const mn_prior* prior, const mn_sim_config* config, uint64_t master_seed,
                            mn_abc_pool** out) {
  return guarded([&] {
    require(out, "out is null");
    *out = new mn_abc_pool{mechnet::build_abc_pool(n, to_prior(prior), to_sim(config), master_seed)};
  });
}

mn_status mn_abc_pool_load(const char* path, mn_abc_pool** out) {
  return guarded([&] {
    require(path && out, "null argument");
    std::ifstream in(path);
    if (!in) throw mechnet::IoError(std::string("cannot open ") + path);
    *out = new mn_abc_pool{mechnet::read_abc_pool(in)};
  });
}

mn_status mn_abc_pool_save(const mn_abc_pool* pool, const char* path) {
  return guarded([&] {
    require(pool && path, "null argument");
    std::ofstream out(path);
    if (!out) throw mechnet::IoError(std::string("cannot write ") + path);
    mechnet::write_abc_pool(out, pool->entries);
    if (!out) throw mechnet::IoError(std::string("write failed: ") + path);
  });
}

size_t mn_abc_pool_size(const mn_abc_pool* pool) { return pool ? pool->entries.size() : 0; }

void mn_abc_pool_free(mn_abc_pool* pool) { delete pool; }

mn_status mn_abc_run(const mn_abc_pool* pool, const mn_graph* observed, double accept_fraction,
                     mn_theta* out_thetas, size_t* out_indices, size_t capacity, size_t* accepted) {
  return guarded([&] {
    require(pool && observed, "null argument");
    const auto result = mechnet::rejection_abc(observed->graph, pool->entries, accept_fraction);
    const size_t n = std::min(capacity, result.indices.size());
    for (size_t i = 0; i < n; ++i) {
      if (out_thetas) out_thetas[i] = from_theta(result.thetas[i]);
      if (out_indices) out_indices[i] = result.indices[i];
    }
    if (accepted) *accepted = result.indices.size();
  });
}

mn_status mn_ppc_run(const mn_model* m, const mn_graph* observed, const mn_sim_config* config, size_t n_pp,
                     uint64_t master_seed, double* observed_summaries, double* predictive) {
  return guarded([&] {
    require(m && observed && (predictive || n_pp == 0), "null argument");
    const auto result = mechnet::ppc_run(mechnet::model_sampler(m->weights), observed->graph, to_sim(config), n_pp,
                                         master_seed);
    if (observed_summaries) copy_summaries(result.observed, observed_summaries);
    for (size_t i = 0; i < result.predictive.size(); ++i) {
      copy_summaries(result.predictive[i], predictive + i * MN_SUMMARY_COUNT);
    }
  });
}

}  // extern "C"

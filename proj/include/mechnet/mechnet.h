/* SPDX-License-Identifier: Apache-2.0 */

#ifndef MECHNET_MECHNET_H
#define MECHNET_MECHNET_H

#include <stddef.h>
#include <stdint.h>

#if defined(MECHNET_BUILDING)
#define MN_API __attribute__((visibility("default")))
#else
#define MN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mn_status {
  MN_OK = 0,
  MN_ERR_INVALID_ARGUMENT = 1,
  MN_ERR_OUT_OF_RANGE = 2,
  MN_ERR_PARSE = 3,
  MN_ERR_IO = 4,
  MN_ERR_NUMERIC = 5,
  MN_ERR_CONTRACT = 6,
  MN_ERR_INTERNAL = 7
} mn_status;

/* Message of the last failure on the calling thread; empty after success. */
MN_API const char* mn_last_error(void);
MN_API const char* mn_status_string(mn_status status);

typedef struct mn_graph mn_graph;
typedef struct mn_model mn_model;
typedef struct mn_dataset mn_dataset;
typedef struct mn_abc_pool mn_abc_pool;

typedef struct mn_theta {
  double lambda_g;
  double lambda_e;
  double alpha[3]; /* RA, PA, NPA */
  double beta[3];  /* TF, NPA-PA, RA-PA */
} mn_theta;

typedef struct mn_sim_config {
  size_t seed_nodes;
  size_t final_nodes;
  double npa_epsilon;
  int max_mechanism_retries;
} mn_sim_config;

enum { MN_GAMMA_SHAPE_SCALE = 0, MN_GAMMA_SHAPE_RATE = 1 };

typedef struct mn_prior {
  double rate_shape;
  double rate_second;
  int parameterization;
  double dirichlet_concentration;
} mn_prior;

enum { MN_LAYER_HIGHER_ORDER = 0, MN_LAYER_GCN = 1, MN_LAYER_GIN = 2 };

typedef struct mn_architecture {
  int variant;
  size_t gnn_layers;
  size_t gnn_width;
  size_t mlp_hidden_layers;
  size_t mlp_width;
  size_t components;
} mn_architecture;

typedef struct mn_train_config {
  double lr;
  size_t max_epochs;
  size_t patience;
  size_t batch_size;
  uint64_t master_seed;
  size_t val_splits;
} mn_train_config;

typedef struct mn_epoch_record {
  size_t epoch;
  double train_epe;
  double val_epe;
  double val_split_min;
  double val_split_max;
  double wall_seconds;
} mn_epoch_record;

typedef struct mn_diagnostics {
  uint64_t growth_events;
  uint64_t evolution_events;
  uint64_t growth_attempts[3];
  uint64_t growth_skipped[3];
  uint64_t evolution_attempts[3];
  uint64_t evolution_skipped[3];
} mn_diagnostics;

#define MN_SUMMARY_COUNT 10

MN_API void mn_default_sim_config(mn_sim_config* out);
MN_API void mn_default_prior(mn_prior* out);
MN_API void mn_default_architecture(mn_architecture* out);
MN_API void mn_default_train_config(mn_train_config* out);

/* Graphs */
MN_API mn_status mn_graph_create(size_t node_count, mn_graph** out);
MN_API void mn_graph_free(mn_graph* g);
MN_API mn_status mn_graph_add_node(mn_graph* g, uint32_t* out_id);
/* *changed is 0 when the edge was a self-loop or already present. */
MN_API mn_status mn_graph_add_edge(mn_graph* g, uint32_t u, uint32_t v, int* changed);
MN_API mn_status mn_graph_remove_edge(mn_graph* g, uint32_t u, uint32_t v, int* changed);
MN_API mn_status mn_graph_has_edge(const mn_graph* g, uint32_t u, uint32_t v, int* out);
MN_API size_t mn_graph_node_count(const mn_graph* g);
MN_API size_t mn_graph_edge_count(const mn_graph* g);
MN_API mn_status mn_graph_degree(const mn_graph* g, uint32_t v, size_t* out);
/* Writes up to `capacity` (u, v) pairs, u < v, in sorted order into
   `pairs` (2 * capacity entries). *written receives the full edge count. */
MN_API mn_status mn_graph_edges(const mn_graph* g, uint32_t* pairs, size_t capacity, size_t* written);
MN_API mn_status mn_graph_load_edge_list(const char* path, mn_graph** out);
MN_API mn_status mn_graph_load_contacts(const char* path, uint64_t min_count, mn_graph** out);
MN_API mn_status mn_graph_save_edge_list(const mn_graph* g, const char* path);
/* Fills MN_SUMMARY_COUNT values in the order of mn_summary_name. */
MN_API mn_status mn_graph_summaries(const mn_graph* g, double* out);
MN_API const char* mn_summary_name(size_t index);

/* Simulation */
MN_API mn_status mn_simulate(const mn_theta* theta, const mn_sim_config* config, uint64_t seed, mn_graph** out,
                             mn_diagnostics* diagnostics);
MN_API mn_status mn_sample_prior(const mn_prior* prior, uint64_t seed, size_t n, mn_theta* out);

/* Datasets: (theta, graph) pairs drawn from the prior. */
MN_API mn_status mn_dataset_generate(size_t n, const mn_prior* prior, const mn_sim_config* config,
                                     uint64_t master_seed, mn_dataset** out);
MN_API mn_status mn_dataset_save(size_t n, const mn_prior* prior, const mn_sim_config* config,
                                 uint64_t master_seed, const char* dir);
MN_API mn_status mn_dataset_load(const char* dir, mn_dataset** out);
MN_API size_t mn_dataset_size(const mn_dataset* d);
MN_API mn_status mn_dataset_theta(const mn_dataset* d, size_t index, mn_theta* out);
MN_API void mn_dataset_free(mn_dataset* d);

/* Models */
MN_API mn_status mn_model_create(const mn_architecture* arch, uint64_t seed, mn_model** out);
MN_API mn_status mn_model_load(const char* path, mn_model** out);
MN_API mn_status mn_model_save(const mn_model* m, const char* path);
MN_API void mn_model_free(mn_model* m);
MN_API mn_status mn_model_architecture(const mn_model* m, mn_architecture* out);
MN_API mn_status mn_model_epe(const mn_model* m, const mn_dataset* set, double* out);

typedef void (*mn_epoch_callback)(const mn_epoch_record* record, void* user);

/* Trains in place; the model ends holding the best validation weights. */
MN_API mn_status mn_model_train(mn_model* m, const mn_train_config* config, const mn_dataset* train_set,
                                const mn_dataset* val_set, mn_epoch_callback on_epoch, void* user);
MN_API mn_status mn_model_sample_posterior(const mn_model* m, const mn_graph* g, size_t n, uint64_t seed,
                                           mn_theta* out);
/* Analytic posterior means in (lambda_g, lambda_e, alpha, beta) order. */
MN_API mn_status mn_model_posterior_mean(const mn_model* m, const mn_graph* g, double* out);
MN_API mn_status mn_model_log_prob(const mn_model* m, const mn_graph* g, const mn_theta* theta, double* out);

MN_API mn_status mn_credible_interval(const double* draws, size_t n, double gamma_pct, double* lo, double* hi);

/* Validation. coverage receives 8 * gamma_count values, marginal-major. */
MN_API mn_status mn_sbc_coverage(const mn_model* m, const mn_prior* prior, const mn_sim_config* config, size_t n_rep,
                                 const double* gammas, size_t gamma_count, size_t n_draws, uint64_t master_seed,
                                 double* coverage);

MN_API mn_status mn_abc_pool_build(size_t n, const mn_prior* prior, const mn_sim_config* config,
                                   uint64_t master_seed, mn_abc_pool** out);
MN_API mn_status mn_abc_pool_load(const char* path, mn_abc_pool** out);
MN_API mn_status mn_abc_pool_save(const mn_abc_pool* pool, const char* path);
MN_API size_t mn_abc_pool_size(const mn_abc_pool* pool);
MN_API void mn_abc_pool_free(mn_abc_pool* pool);
/* Accepts abc_accept_count entries; out_thetas and out_indices (either may
   be NULL) need room for `capacity` entries. *accepted gets the count. */
MN_API mn_status mn_abc_run(const mn_abc_pool* pool, const mn_graph* observed, double accept_fraction,
                            mn_theta* out_thetas, size_t* out_indices, size_t capacity, size_t* accepted);

/* Posterior predictive check. predictive receives n_pp * MN_SUMMARY_COUNT
   values, row per simulated graph; observed receives MN_SUMMARY_COUNT. */
MN_API mn_status mn_ppc_run(const mn_model* m, const mn_graph* observed, const mn_sim_config* config, size_t n_pp,
                            uint64_t master_seed, double* observed_summaries, double* predictive);

#ifdef __cplusplus
}
#endif

#endif

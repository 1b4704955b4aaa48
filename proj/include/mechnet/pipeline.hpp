// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "mechnet/generator.hpp"
#include "mechnet/gnn_mdn.hpp"

namespace mechnet {

// One simulated (theta, graph) pair plus the bookkeeping written to its
// sidecar record.
struct SimulationRecord {
  Sample sample;
  std::uint64_t stream_index = 0;
  SimDiagnostics diagnostics;
};

using Dataset = std::vector<Sample>;

// Draw i uses stream_rng(master_seed, i) for both the prior and the
// simulator, so any subset can be regenerated independently.
SimulationRecord simulate_record(const Prior& prior, const SimConfig& sim, std::uint64_t master_seed,
                                 std::uint64_t index);

Dataset generate_dataset(std::size_t n, const Prior& prior, const SimConfig& sim, std::uint64_t master_seed);

// Dataset directory layout:
//   manifest.tsv               index, edge file, sidecar file, theta columns
//   graphs/NNNNNNN.edges       edge list (with "# nodes N" header)
//   graphs/NNNNNNN.json        sidecar: theta, seed, stream index, diagnostics
// Records are streamed to disk one at a time. Returns the in-memory dataset
// when keep_in_memory is set.
Dataset write_dataset(const std::filesystem::path& dir, std::size_t n, const Prior& prior, const SimConfig& sim,
                      std::uint64_t master_seed, bool keep_in_memory = false);
Dataset read_dataset(const std::filesystem::path& dir);

// Single-line JSON sidecar for one simulation.
void write_sidecar(std::ostream& out, const Theta& theta, std::uint64_t master_seed, std::uint64_t index,
                   const SimDiagnostics& diagnostics);

struct RunConfig {
  std::size_t n_train = 20000;
  std::size_t n_val = 5000;
  SimConfig sim{4, 100, 1e-4, 20};
  double lr = 5e-4;
  std::size_t max_epochs = 100;
  std::size_t patience = 10;
  std::size_t batch_size = 128;
  std::uint64_t master_seed = 1;
  std::size_t val_splits = 250;
};

void validate_run_config(const RunConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_epe = 0.0;
  double val_epe = 0.0;
  double val_split_min = 0.0;
  double val_split_max = 0.0;
  double wall_seconds = 0.0;
};

struct TrainingLog {
  double initial_val_epe = 0.0;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 when no epoch improved on +inf
  bool early_stopped = false;
};

struct TrainResult {
  ModelWeights weights;
  TrainingLog log;
};

// Called after every epoch with the record just appended.
using EpochCallback = std::function<void(const EpochRecord&)>;

// Adam on minibatches of the EPE loss, full validation EPE after each
// epoch, early stopping after `patience` epochs without improvement or at
// max_epochs, best-validation weights restored on return. A non-finite loss
// aborts with NumericError; when snapshot_path is set the offending weights
// are saved there first.
TrainResult train(const RunConfig& config, ModelWeights initial, std::span<const Sample> train_set,
                  std::span<const Sample> val_set, const EpochCallback& on_epoch = {},
                  const std::optional<std::filesystem::path>& snapshot_path = std::nullopt);

// Mean EPE over the full set, evaluated in chunks of batch_size.
double evaluate_epe(const ModelWeights& weights, std::span<const Sample> set, std::size_t batch_size);

// Min and max EPE over `splits` contiguous sections of the set.
std::pair<double, double> split_epe_range(const ModelWeights& weights, std::span<const Sample> set,
                                          std::size_t splits, std::size_t batch_size);

// Tab-separated: epoch, train_epe, val_epe, val_split_min, val_split_max,
// wall_seconds.
void write_training_log(std::ostream& out, const TrainingLog& log);

std::vector<Theta> sample_mixture(const MixtureDensityParams& params, std::size_t n, Rng& rng);
std::vector<Theta> sample_posterior(const ModelWeights& weights, const Graph& g, std::size_t n, Rng& rng);

// Analytic marginal means of the mixture, in Theta::flat() order.
std::array<double, Theta::kDim> mixture_means(const MixtureDensityParams& params);

// Equal-tailed interval at probabilities (1 - g)/2 and (1 + g)/2 with
// g = gamma_pct / 100. Quantiles interpolate linearly between order
// statistics placed at (k - 0.5) / n (Hyndman-Fan type 5).
std::pair<double, double> credible_interval(std::span<const double> draws, double gamma_pct);
double empirical_quantile(std::span<const double> sorted, double p);

// Column `k` of Theta::flat() across the draws.
std::vector<double> marginal(std::span<const Theta> draws, std::size_t k);

inline constexpr std::array<std::string_view, Theta::kDim> kThetaNames{
    "lambda_g", "lambda_e", "alpha_RA", "alpha_PA", "alpha_NPA", "beta_TF", "beta_NPA_PA", "beta_RA_PA"};

// Tab-separated posterior draws, columns in kThetaNames order.
void write_theta_table(std::ostream& out, std::span<const Theta> draws);

}  // namespace mechnet

// SPDX-License-Identifier: Apache-2.0

#include "mechnet/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mechnet/checkpoint.hpp"
#include "mechnet/error.hpp"

namespace mechnet {

SimulationRecord simulate_record(const Prior& prior, const SimConfig& sim, std::uint64_t master_seed,
                                 std::uint64_t index) {
  Rng rng = stream_rng(master_seed, index);
  const Theta theta = sample_prior(prior, rng);
  Simulation s = grow_network(theta, sim, rng);
  return SimulationRecord{Sample{theta, std::move(s.graph)}, index, s.diagnostics};
}

Dataset generate_dataset(std::size_t n, const Prior& prior, const SimConfig& sim, std::uint64_t master_seed) {
  validate_sim_config(sim);
  Dataset out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(simulate_record(prior, sim, master_seed, i).sample);
  return out;
}

void write_sidecar(std::ostream& out, const Theta& theta, std::uint64_t master_seed, std::uint64_t index,
                   const SimDiagnostics& d) {
  nlohmann::ordered_json j = {
      {"index", index},
      {"master_seed", master_seed},
      {"theta",
       {{"lambda_g", theta.lambda_g}, {"lambda_e", theta.lambda_e}, {"alpha", theta.alpha}, {"beta", theta.beta}}},
      {"diagnostics",
       {{"growth_events", d.growth_events},
        {"evolution_events", d.evolution_events},
        {"growth_attempts", d.growth_attempts},
        {"growth_skipped", d.growth_skipped},
        {"evolution_attempts", d.evolution_attempts},
        {"evolution_skipped", d.evolution_skipped}}}};
  out << j.dump() << '\n';
}

namespace {

std::string record_stem(std::size_t i) {
  std::ostringstream s;
  s << std::setw(7) << std::setfill('0') << i;
  return s.str();
}

void write_theta_columns(std::ostream& out, const Theta& t) {
  for (double v : t.flat()) out << '\t' << v;
}

}  // namespace

Dataset write_dataset(const std::filesystem::path& dir, std::size_t n, const Prior& prior, const SimConfig& sim,
                      std::uint64_t master_seed, bool keep_in_memory) {
  validate_sim_config(sim);
  std::error_code ec;
  std::filesystem::create_directories(dir / "graphs", ec);
  if (ec) throw IoError("cannot create " + (dir / "graphs").string() + ": " + ec.message());
  std::ofstream manifest(dir / "manifest.tsv");
  if (!manifest) throw IoError("cannot write " + (dir / "manifest.tsv").string());
  manifest << std::setprecision(17) << "index\tedges\tsidecar";
  for (auto name : kThetaNames) manifest << '\t' << name;
  manifest << '\n';

  Dataset kept;
  for (std::size_t i = 0; i < n; ++i) {
    SimulationRecord rec = simulate_record(prior, sim, master_seed, i);
    const std::string stem = record_stem(i);
    save_edge_list(dir / "graphs" / (stem + ".edges"), rec.sample.graph);
    std::ofstream side(dir / "graphs" / (stem + ".json"));
    if (!side) throw IoError("cannot write sidecar for record " + stem);
    write_sidecar(side, rec.sample.theta, master_seed, i, rec.diagnostics);
    manifest << i << "\tgraphs/" << stem << ".edges\tgraphs/" << stem << ".json";
    write_theta_columns(manifest, rec.sample.theta);
    manifest << '\n';
    if (keep_in_memory) kept.push_back(std::move(rec.sample));
  }
  if (!manifest) throw IoError("write failure on dataset manifest");
  return kept;
}

Dataset read_dataset(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.tsv");
  if (!manifest) throw IoError("cannot open " + (dir / "manifest.tsv").string());
  std::string line;
  std::size_t line_no = 0;
  Dataset out;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    std::istringstream fields(line);
    std::size_t index = 0;
    std::string edges, sidecar;
    std::array<double, Theta::kDim> v{};
    fields >> index >> edges >> sidecar;
    for (double& x : v) fields >> x;
    if (!fields) throw ParseError("malformed dataset manifest row", line_no);
    Sample s{Theta::from_flat(v), load_edge_list(dir / edges).graph};
    out.push_back(std::move(s));
  }
  return out;
}

void validate_run_config(const RunConfig& c) {
  if (c.batch_size == 0) throw ContractError("batch_size must be >= 1");
  if (c.max_epochs == 0) throw ContractError("max_epochs must be >= 1");
  if (c.patience == 0) throw ContractError("patience must be positive");
  if (c.val_splits == 0) throw ContractError("val_splits must be >= 1");
  if (!(c.lr >= 0.0) || !std::isfinite(c.lr)) throw ContractError("lr must be finite and non-negative");
  validate_sim_config(c.sim);
}

namespace {

// Per-sample negative log density, evaluated in chunks.
std::vector<double> per_sample_loss(const ModelWeights& w, std::span<const Sample> set, std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(set.size());
  for (std::size_t start = 0; start < set.size(); start += batch_size) {
    const std::size_t stop = std::min(set.size(), start + batch_size);
    ad::Tape tape;
    const BoundWeights bound = bind_weights(tape, w, false);
    std::vector<const Graph*> graphs;
    std::vector<Theta> thetas;
    for (std::size_t i = start; i < stop; ++i) {
      graphs.push_back(&set[i].graph);
      thetas.push_back(set[i].theta);
    }
    const GraphBatch batch = batch_graphs(graphs);
    const ad::Var raw = head_forward(bound, gnn_forward(bound, batch));
    const ad::Var log_q = mixture_log_prob(w.arch, raw, thetas);
    for (Eigen::Index r = 0; r < log_q.rows(); ++r) out.push_back(-log_q.value()(r, 0));
  }
  return out;
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::pair<double, double> split_range(std::span<const double> losses, std::size_t splits) {
  const std::size_t n = losses.size();
  splits = std::clamp<std::size_t>(splits, 1, n);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < splits; ++s) {
    const std::size_t begin = s * n / splits;
    const std::size_t end = (s + 1) * n / splits;
    const double m = mean_of(losses.subspan(begin, end - begin));
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  return {lo, hi};
}

}  // namespace

double evaluate_epe(const ModelWeights& weights, std::span<const Sample> set, std::size_t batch_size) {
  if (set.empty()) throw ContractError("evaluate_epe: empty set");
  const auto losses = per_sample_loss(weights, set, std::max<std::size_t>(batch_size, 1));
  return mean_of(losses);
}

std::pair<double, double> split_epe_range(const ModelWeights& weights, std::span<const Sample> set,
                                          std::size_t splits, std::size_t batch_size) {
  if (set.empty()) throw ContractError("split_epe_range: empty set");
  return split_range(per_sample_loss(weights, set, std::max<std::size_t>(batch_size, 1)), splits);
}

TrainResult train(const RunConfig& config, ModelWeights initial, std::span<const Sample> train_set,
                  std::span<const Sample> val_set, const EpochCallback& on_epoch,
                  const std::optional<std::filesystem::path>& snapshot_path) {
  validate_run_config(config);
  if (train_set.empty() || val_set.empty()) throw ContractError("train: datasets must be nonempty");

  ModelWeights weights = std::move(initial);
  ad::AdamConfig adam_config;
  adam_config.lr = config.lr;
  ad::AdamState adam = ad::make_adam(adam_config, weights.params);
  Rng shuffle_rng(derive_seed(config.master_seed, 0x5eed7a1));

  TrainResult result{weights, {}};
  TrainingLog& log = result.log;
  try {
    log.initial_val_epe = mean_of(per_sample_loss(weights, val_set, config.batch_size));
  } catch (const NumericError&) {
    if (snapshot_path) save_model(weights, *snapshot_path);
    throw;
  }

  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<const Sample*> batch;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double weighted_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(&train_set[order[i]]);
      weights.zero_grad();
      double loss = std::numeric_limits<double>::quiet_NaN();
      try {
        loss = epe_loss_and_gradient(weights, batch);
      } catch (const NumericError&) {
      }
      if (!std::isfinite(loss)) {
        if (snapshot_path) save_model(weights, *snapshot_path);
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                           std::to_string(start) +
                           (snapshot_path ? ", weights saved to " + snapshot_path->string() : std::string()));
      }
      weighted_loss += loss * static_cast<double>(stop - start);
      ad::adam_step(adam, weights.params);
    }

    const auto losses = per_sample_loss(weights, val_set, config.batch_size);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_epe = weighted_loss / static_cast<double>(order.size());
    rec.val_epe = mean_of(losses);
    std::tie(rec.val_split_min, rec.val_split_max) = split_range(losses, config.val_splits);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (rec.val_epe < best) {
      best = rec.val_epe;
      result.weights = weights;
      log.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      log.early_stopped = true;
      break;
    }
  }
  return result;
}

void write_training_log(std::ostream& out, const TrainingLog& log) {
  const auto old = out.precision(10);
  out << "epoch\ttrain_epe\tval_epe\tval_split_min\tval_split_max\twall_seconds\n";
  for (const auto& e : log.epochs) {
    out << e.epoch << '\t' << e.train_epe << '\t' << e.val_epe << '\t' << e.val_split_min << '\t'
        << e.val_split_max << '\t' << e.wall_seconds << '\n';
  }
  out.precision(old);
}

std::vector<Theta> sample_mixture(const MixtureDensityParams& params, std::size_t n, Rng& rng) {
  if (params.weights.size() != params.components.size() || params.weights.empty()) {
    throw DimensionError("sample_mixture: weights and components disagree");
  }
  std::discrete_distribution<std::size_t> pick(params.weights.begin(), params.weights.end());
  std::vector<Theta> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const MixtureComponent& c = params.components[pick(rng)];
    Theta t;
    t.alpha = sample_dirichlet(c.alpha_conc, rng);
    t.beta = sample_dirichlet(c.beta_conc, rng);
    t.lambda_g = sample_gamma(c.g_shape, 1.0 / c.g_rate, rng);
    t.lambda_e = sample_gamma(c.e_shape, 1.0 / c.e_rate, rng);
    out.push_back(t);
  }
  return out;
}

std::vector<Theta> sample_posterior(const ModelWeights& weights, const Graph& g, std::size_t n, Rng& rng) {
  return sample_mixture(posterior_params(weights, g), n, rng);
}

std::array<double, Theta::kDim> mixture_means(const MixtureDensityParams& params) {
  std::array<double, Theta::kDim> m{};
  for (std::size_t k = 0; k < params.components.size(); ++k) {
    const auto& c = params.components[k];
    const double w = params.weights[k];
    m[0] += w * c.g_shape / c.g_rate;
    m[1] += w * c.e_shape / c.e_rate;
    const double sa = c.alpha_conc[0] + c.alpha_conc[1] + c.alpha_conc[2];
    const double sb = c.beta_conc[0] + c.beta_conc[1] + c.beta_conc[2];
    for (std::size_t j = 0; j < 3; ++j) {
      m[2 + j] += w * c.alpha_conc[j] / sa;
      m[5 + j] += w * c.beta_conc[j] / sb;
    }
  }
  return m;
}

double empirical_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ContractError("empirical_quantile: no draws");
  const double n = static_cast<double>(sorted.size());
  const double h = n * p + 0.5;  // 1-based position
  if (h <= 1.0) return sorted.front();
  if (h >= n) return sorted.back();
  const double lower = std::floor(h);
  const auto k = static_cast<std::size_t>(lower) - 1;
  return sorted[k] + (h - lower) * (sorted[k + 1] - sorted[k]);
}

std::pair<double, double> credible_interval(std::span<const double> draws, double gamma_pct) {
  if (draws.empty()) throw ContractError("credible_interval: no draws");
  if (!(gamma_pct >= 0.0 && gamma_pct <= 100.0)) throw ContractError("credible_interval: gamma outside [0, 100]");
  std::vector<double> sorted(draws.begin(), draws.end());
  std::sort(sorted.begin(), sorted.end());
  const double tail = (1.0 - gamma_pct / 100.0) / 2.0;
  return {empirical_quantile(sorted, tail), empirical_quantile(sorted, 1.0 - tail)};
}

std::vector<double> marginal(std::span<const Theta> draws, std::size_t k) {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& t : draws) out.push_back(t.flat()[k]);
  return out;
}

void write_theta_table(std::ostream& out, std::span<const Theta> draws) {
  const auto old = out.precision(17);
  for (std::size_t k = 0; k < kThetaNames.size(); ++k) out << (k ? "\t" : "") << kThetaNames[k];
  out << '\n';
  for (const auto& t : draws) {
    const auto v = t.flat();
    for (std::size_t k = 0; k < v.size(); ++k) out << (k ? "\t" : "") << v[k];
    out << '\n';
  }
  out.precision(old);
}

}  // namespace mechnet

// SPDX-License-Identifier: Apache-2.0

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mechnet/mechnet.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;

const char* const kThetaColumns[8] = {"lambda_g", "lambda_e", "alpha_RA", "alpha_PA",
                                      "alpha_NPA", "beta_TF", "beta_NPA_PA", "beta_RA_PA"};

struct CliError : std::runtime_error {
  CliError(int code, const std::string& what) : std::runtime_error(what), exit_code(code) {}
  int exit_code;
};

void check(mn_status status, const char* what) {
  if (status == MN_OK) return;
  int code = kExitFailure;
  switch (status) {
    case MN_ERR_INVALID_ARGUMENT:
    case MN_ERR_OUT_OF_RANGE:
    case MN_ERR_CONTRACT: code = kExitConfig; break;
    case MN_ERR_PARSE:
    case MN_ERR_IO: code = kExitIo; break;
    case MN_ERR_NUMERIC: code = kExitNumeric; break;
    default: break;
  }
  throw CliError(code, std::string(what) + ": " + mn_status_string(status) + ": " + mn_last_error());
}

struct GraphDeleter {
  void operator()(mn_graph* g) const { mn_graph_free(g); }
};
struct ModelDeleter {
  void operator()(mn_model* m) const { mn_model_free(m); }
};
struct DatasetDeleter {
  void operator()(mn_dataset* d) const { mn_dataset_free(d); }
};
struct PoolDeleter {
  void operator()(mn_abc_pool* p) const { mn_abc_pool_free(p); }
};
using GraphPtr = std::unique_ptr<mn_graph, GraphDeleter>;
using ModelPtr = std::unique_ptr<mn_model, ModelDeleter>;
using DatasetPtr = std::unique_ptr<mn_dataset, DatasetDeleter>;
using PoolPtr = std::unique_ptr<mn_abc_pool, PoolDeleter>;

json default_config() {
  json gammas = json::array();
  for (int g = 5; g <= 95; g += 5) gammas.push_back(g);
  return json{
      {"seed", 1},
      {"sim", {{"seed_nodes", 4}, {"final_nodes", 100}, {"npa_epsilon", 1e-4}, {"max_mechanism_retries", 20}}},
      {"prior",
       {{"rate_shape", 2.0}, {"rate_second", 2.0}, {"parameterization", "shape_scale"},
        {"dirichlet_concentration", 0.5}}},
      {"theta",
       {{"lambda_g", 5.0},
        {"lambda_e", 5.0},
        {"alpha", {0.95, 0.025, 0.025}},
        {"beta", {0.025, 0.95, 0.025}}}},
      {"model",
       {{"variant", "higher_order"},
        {"gnn_layers", 5},
        {"gnn_width", 20},
        {"mlp_hidden_layers", 3},
        {"mlp_width", 64},
        {"components", 5}}},
      {"train",
       {{"n_train", 20000},
        {"n_val", 5000},
        {"lr", 5e-4},
        {"max_epochs", 100},
        {"patience", 10},
        {"batch_size", 128},
        {"val_splits", 250}}},
      {"validate",
       {{"n_rep", 200},
        {"n_draws", 1000},
        {"gammas", gammas},
        {"abc_pool_size", 100000},
        {"abc_accept_fraction", 0.002},
        {"n_pp", 1000}}},
      {"input", {{"format", "edges"}, {"min_count", 1}}},
  };
}

bool same_kind(const json& want, const json& got) {
  if (want.is_number_integer()) return got.is_number_integer();
  if (want.is_number()) return got.is_number();
  if (want.is_string()) return got.is_string();
  if (want.is_array()) return got.is_array();
  if (want.is_object()) return got.is_object();
  return want.type() == got.type();
}

// Overlays `patch` onto `base`, rejecting keys or value kinds the defaults
// do not know about.
void merge_checked(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw CliError(kExitConfig, "config" + path + " must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key_path = path + "." + it.key();
    if (!base.contains(it.key())) throw CliError(kExitConfig, "unknown config key " + key_path.substr(1));
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_checked(slot, it.value(), key_path);
    } else {
      if (!same_kind(slot, it.value())) throw CliError(kExitConfig, "wrong type for config key " + key_path.substr(1));
      slot = it.value();
    }
  }
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw CliError(kExitConfig, "--set expects key=value, got " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string p; std::getline(ss, p, '.');) parts.push_back(p);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  merge_checked(config, patch, "");
}

template <typename T>
T get(const json& config, const char* section, const char* key) {
  try {
    return config.at(section).at(key).get<T>();
  } catch (const json::exception& e) {
    throw CliError(kExitConfig, std::string("config ") + section + "." + key + ": " + e.what());
  }
}

std::size_t get_count(const json& config, const char* section, const char* key) {
  const auto v = get<std::int64_t>(config, section, key);
  if (v < 0) throw CliError(kExitConfig, std::string("config ") + section + "." + key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

mn_sim_config sim_config(const json& c) {
  mn_sim_config s{};
  s.seed_nodes = get_count(c, "sim", "seed_nodes");
  s.final_nodes = get_count(c, "sim", "final_nodes");
  s.npa_epsilon = get<double>(c, "sim", "npa_epsilon");
  s.max_mechanism_retries = get<int>(c, "sim", "max_mechanism_retries");
  return s;
}

mn_prior prior_config(const json& c) {
  mn_prior p{};
  p.rate_shape = get<double>(c, "prior", "rate_shape");
  p.rate_second = get<double>(c, "prior", "rate_second");
  const auto param = get<std::string>(c, "prior", "parameterization");
  if (param == "shape_scale") {
    p.parameterization = MN_GAMMA_SHAPE_SCALE;
  } else if (param == "shape_rate") {
    p.parameterization = MN_GAMMA_SHAPE_RATE;
  } else {
    throw CliError(kExitConfig, "prior.parameterization must be shape_scale or shape_rate");
  }
  p.dirichlet_concentration = get<double>(c, "prior", "dirichlet_concentration");
  return p;
}

mn_theta theta_config(const json& c) {
  mn_theta t{};
  t.lambda_g = get<double>(c, "theta", "lambda_g");
  t.lambda_e = get<double>(c, "theta", "lambda_e");
  const auto alpha = get<std::vector<double>>(c, "theta", "alpha");
  const auto beta = get<std::vector<double>>(c, "theta", "beta");
  if (alpha.size() != 3 || beta.size() != 3) throw CliError(kExitConfig, "theta.alpha and theta.beta need 3 entries");
  for (int k = 0; k < 3; ++k) {
    t.alpha[k] = alpha[k];
    t.beta[k] = beta[k];
  }
  return t;
}

mn_architecture arch_config(const json& c) {
  mn_architecture a{};
  const auto variant = get<std::string>(c, "model", "variant");
  if (variant == "higher_order") {
    a.variant = MN_LAYER_HIGHER_ORDER;
  } else if (variant == "gcn") {
    a.variant = MN_LAYER_GCN;
  } else if (variant == "gin") {
    a.variant = MN_LAYER_GIN;
  } else {
    throw CliError(kExitConfig, "model.variant must be higher_order, gcn or gin");
  }
  a.gnn_layers = get_count(c, "model", "gnn_layers");
  a.gnn_width = get_count(c, "model", "gnn_width");
  a.mlp_hidden_layers = get_count(c, "model", "mlp_hidden_layers");
  a.mlp_width = get_count(c, "model", "mlp_width");
  a.components = get_count(c, "model", "components");
  return a;
}

std::vector<double> gamma_grid(const json& c) {
  const auto g = get<std::vector<double>>(c, "validate", "gammas");
  if (g.empty()) throw CliError(kExitConfig, "validate.gammas must not be empty");
  for (double x : g) {
    if (!(x >= 0.0 && x <= 100.0)) throw CliError(kExitConfig, "validate.gammas entries must lie in [0, 100]");
  }
  return g;
}

std::uint64_t seed_of(const json& c) {
  try {
    return c.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw CliError(kExitConfig, std::string("config seed: ") + e.what());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw CliError(kExitIo, "cannot write " + path.string());
  out.precision(17);
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw CliError(kExitIo, "write failed: " + path.string());
}

void write_theta_header(std::ostream& out) {
  for (int k = 0; k < 8; ++k) out << (k ? "\t" : "") << kThetaColumns[k];
  out << '\n';
}

void write_theta_row(std::ostream& out, const mn_theta& t) {
  out << t.lambda_g << '\t' << t.lambda_e;
  for (double a : t.alpha) out << '\t' << a;
  for (double b : t.beta) out << '\t' << b;
  out << '\n';
}

std::vector<double> theta_column(const std::vector<mn_theta>& draws, int k) {
  std::vector<double> col;
  col.reserve(draws.size());
  for (const auto& t : draws) {
    const double flat[8] = {t.lambda_g, t.lambda_e, t.alpha[0], t.alpha[1], t.alpha[2], t.beta[0], t.beta[1], t.beta[2]};
    col.push_back(flat[k]);
  }
  return col;
}

GraphPtr load_input_graph(const json& c, const std::string& input) {
  if (input.empty()) throw CliError(kExitConfig, "--input is required");
  mn_graph* g = nullptr;
  const auto format = get<std::string>(c, "input", "format");
  if (format == "edges") {
    check(mn_graph_load_edge_list(input.c_str(), &g), "loading edge list");
  } else if (format == "contacts") {
    check(mn_graph_load_contacts(input.c_str(), get_count(c, "input", "min_count"), &g), "loading contacts");
  } else {
    throw CliError(kExitConfig, "input.format must be edges or contacts");
  }
  return GraphPtr(g);
}

ModelPtr load_checkpoint(const std::string& path) {
  if (path.empty()) throw CliError(kExitConfig, "--checkpoint is required");
  mn_model* m = nullptr;
  check(mn_model_load(path.c_str(), &m), "loading checkpoint");
  return ModelPtr(m);
}

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;
  std::string out_dir = ".";
  std::string input;
  std::string val_input;
  std::string checkpoint;
  std::string pool;
  std::int64_t n = -1;
  std::string format;
};

void write_manifest(const fs::path& dir, const std::string& verb, const json& config, const Options& opt) {
  json manifest{{"verb", verb}, {"config", config}};
  json inputs = json::object();
  if (!opt.input.empty()) inputs["input"] = opt.input;
  if (!opt.val_input.empty()) inputs["val_input"] = opt.val_input;
  if (!opt.checkpoint.empty()) inputs["checkpoint"] = opt.checkpoint;
  if (!opt.pool.empty()) inputs["pool"] = opt.pool;
  manifest["inputs"] = inputs;
  const fs::path path = dir / "manifest.json";
  auto out = open_out(path);
  out << manifest.dump(2) << '\n';
  finish(out, path);
}

std::size_t count_or(const Options& opt, std::size_t fallback) {
  return opt.n >= 0 ? static_cast<std::size_t>(opt.n) : fallback;
}

void run_simulate(const json& c, const fs::path& out_dir) {
  const auto theta = theta_config(c);
  const auto sim = sim_config(c);
  mn_graph* raw = nullptr;
  mn_diagnostics diag{};
  check(mn_simulate(&theta, &sim, seed_of(c), &raw, &diag), "simulate");
  GraphPtr g(raw);
  check(mn_graph_save_edge_list(g.get(), (out_dir / "graph.edges").c_str()), "saving graph");
  const fs::path path = out_dir / "diagnostics.tsv";
  auto out = open_out(path);
  const char* growth[3] = {"RA", "PA", "NPA"};
  const char* evolution[3] = {"TF", "NPA_PA", "RA_PA"};
  out << "kind\tmechanism\tattempts\tskipped\n";
  for (int k = 0; k < 3; ++k) {
    out << "growth\t" << growth[k] << '\t' << diag.growth_attempts[k] << '\t' << diag.growth_skipped[k] << '\n';
  }
  for (int k = 0; k < 3; ++k) {
    out << "evolution\t" << evolution[k] << '\t' << diag.evolution_attempts[k] << '\t' << diag.evolution_skipped[k]
        << '\n';
  }
  finish(out, path);
}

void run_make_dataset(const json& c, const Options& opt, const fs::path& out_dir) {
  const auto prior = prior_config(c);
  const auto sim = sim_config(c);
  const std::size_t n = count_or(opt, get_count(c, "train", "n_train"));
  check(mn_dataset_save(n, &prior, &sim, seed_of(c), out_dir.c_str()), "writing dataset");
}

DatasetPtr dataset_from(const std::string& dir, std::size_t n, const mn_prior& prior, const mn_sim_config& sim,
                        std::uint64_t seed) {
  mn_dataset* d = nullptr;
  if (!dir.empty()) {
    check(mn_dataset_load(dir.c_str(), &d), "loading dataset");
  } else {
    check(mn_dataset_generate(n, &prior, &sim, seed, &d), "generating dataset");
  }
  return DatasetPtr(d);
}

struct TrainLogs {
  std::ofstream* log;
  std::ofstream* timing;
};

void on_epoch(const mn_epoch_record* r, void* user) {
  auto* logs = static_cast<TrainLogs*>(user);
  *logs->log << r->epoch << '\t' << r->train_epe << '\t' << r->val_epe << '\t' << r->val_split_min << '\t'
             << r->val_split_max << '\n';
  logs->log->flush();
  *logs->timing << r->epoch << '\t' << r->wall_seconds << '\n';
  std::fprintf(stderr, "epoch %zu train %.6f val %.6f\n", r->epoch, r->train_epe, r->val_epe);
}

void run_train(const json& c, const Options& opt, const fs::path& out_dir) {
  const auto prior = prior_config(c);
  const auto sim = sim_config(c);
  const auto arch = arch_config(c);
  const std::uint64_t seed = seed_of(c);
  const std::size_t n_train = count_or(opt, get_count(c, "train", "n_train"));
  const std::size_t n_val = get_count(c, "train", "n_val");
  // Training and validation sets come from disjoint RNG streams.
  auto train_set = dataset_from(opt.input, n_train, prior, sim, seed);
  auto val_set = dataset_from(opt.val_input, n_val, prior, sim, seed ^ 0x5bd1e9955bd1e995ULL);

  mn_train_config tc{};
  tc.lr = get<double>(c, "train", "lr");
  tc.max_epochs = get_count(c, "train", "max_epochs");
  tc.patience = get_count(c, "train", "patience");
  tc.batch_size = get_count(c, "train", "batch_size");
  tc.val_splits = get_count(c, "train", "val_splits");
  tc.master_seed = seed;

  mn_model* raw = nullptr;
  check(mn_model_create(&arch, seed, &raw), "creating model");
  ModelPtr model(raw);

  const fs::path log_path = out_dir / "training_log.tsv";
  const fs::path timing_path = out_dir / "timing.tsv";
  auto log = open_out(log_path);
  auto timing = open_out(timing_path);
  double initial = 0.0;
  check(mn_model_epe(model.get(), val_set.get(), &initial), "initial validation EPE");
  log << "epoch\ttrain_epe\tval_epe\tval_split_min\tval_split_max\n";
  log << 0 << '\t' << "nan" << '\t' << initial << '\t' << "nan" << '\t' << "nan" << '\n';
  timing << "epoch\twall_seconds\n";
  TrainLogs logs{&log, &timing};
  check(mn_model_train(model.get(), &tc, train_set.get(), val_set.get(), on_epoch, &logs), "training");
  finish(log, log_path);
  finish(timing, timing_path);
  check(mn_model_save(model.get(), (out_dir / "model.bin").c_str()), "saving model");
}

void run_infer(const json& c, const Options& opt, const fs::path& out_dir) {
  auto model = load_checkpoint(opt.checkpoint);
  auto g = load_input_graph(c, opt.input);
  const std::size_t n = count_or(opt, get_count(c, "validate", "n_draws"));
  if (n == 0) throw CliError(kExitConfig, "need at least one posterior draw");
  std::vector<mn_theta> draws(n);
  check(mn_model_sample_posterior(model.get(), g.get(), n, seed_of(c), draws.data()), "sampling posterior");
  double means[8];
  check(mn_model_posterior_mean(model.get(), g.get(), means), "posterior mean");

  const fs::path draws_path = out_dir / "posterior_draws.tsv";
  auto out = open_out(draws_path);
  write_theta_header(out);
  for (const auto& t : draws) write_theta_row(out, t);
  finish(out, draws_path);

  const fs::path ci_path = out_dir / "credible_intervals.tsv";
  auto ci = open_out(ci_path);
  ci << "parameter\tgamma\tlower\tupper\tmean\tmedian\n";
  for (int k = 0; k < 8; ++k) {
    const auto col = theta_column(draws, k);
    double mlo = 0.0, mhi = 0.0;
    check(mn_credible_interval(col.data(), col.size(), 0.0, &mlo, &mhi), "median");
    for (double gamma : gamma_grid(c)) {
      double lo = 0.0, hi = 0.0;
      check(mn_credible_interval(col.data(), col.size(), gamma, &lo, &hi), "credible interval");
      ci << kThetaColumns[k] << '\t' << gamma << '\t' << lo << '\t' << hi << '\t' << means[k] << '\t' << mlo << '\n';
    }
  }
  finish(ci, ci_path);
}

void run_coverage(const json& c, const Options& opt, const fs::path& out_dir) {
  auto model = load_checkpoint(opt.checkpoint);
  const auto prior = prior_config(c);
  const auto sim = sim_config(c);
  const auto gammas = gamma_grid(c);
  const std::size_t n_rep = count_or(opt, get_count(c, "validate", "n_rep"));
  const std::size_t n_draws = get_count(c, "validate", "n_draws");
  std::vector<double> coverage(8 * gammas.size());
  check(mn_sbc_coverage(model.get(), &prior, &sim, n_rep, gammas.data(), gammas.size(), n_draws, seed_of(c),
                        coverage.data()),
        "coverage");
  const fs::path path = out_dir / "coverage.tsv";
  auto out = open_out(path);
  out << "parameter\tgamma\tcoverage\treplications\n";
  for (int k = 0; k < 8; ++k) {
    for (std::size_t g = 0; g < gammas.size(); ++g) {
      out << kThetaColumns[k] << '\t' << gammas[g] << '\t' << coverage[k * gammas.size() + g] << '\t' << n_rep
          << '\n';
    }
  }
  finish(out, path);
}

void run_abc(const json& c, const Options& opt, const fs::path& out_dir) {
  auto g = load_input_graph(c, opt.input);
  mn_abc_pool* raw = nullptr;
  if (!opt.pool.empty() && fs::exists(opt.pool)) {
    check(mn_abc_pool_load(opt.pool.c_str(), &raw), "loading ABC pool");
  } else {
    const auto prior = prior_config(c);
    const auto sim = sim_config(c);
    const std::size_t n = count_or(opt, get_count(c, "validate", "abc_pool_size"));
    check(mn_abc_pool_build(n, &prior, &sim, seed_of(c), &raw), "building ABC pool");
  }
  PoolPtr pool(raw);
  const fs::path pool_path = opt.pool.empty() ? out_dir / "abc_pool.tsv" : fs::path(opt.pool);
  if (!fs::exists(pool_path)) check(mn_abc_pool_save(pool.get(), pool_path.c_str()), "saving ABC pool");

  const double frac = get<double>(c, "validate", "abc_accept_fraction");
  const std::size_t capacity = mn_abc_pool_size(pool.get());
  std::vector<mn_theta> thetas(capacity);
  std::vector<size_t> indices(capacity);
  std::size_t accepted = 0;
  check(mn_abc_run(pool.get(), g.get(), frac, thetas.data(), indices.data(), capacity, &accepted), "rejection ABC");
  const fs::path path = out_dir / "abc_accepted.tsv";
  auto out = open_out(path);
  out << "rank\tpool_index\t";
  write_theta_header(out);
  for (std::size_t i = 0; i < accepted; ++i) {
    out << i << '\t' << indices[i] << '\t';
    write_theta_row(out, thetas[i]);
  }
  finish(out, path);
}

void run_ppc(const json& c, const Options& opt, const fs::path& out_dir) {
  auto model = load_checkpoint(opt.checkpoint);
  auto g = load_input_graph(c, opt.input);
  const auto sim = sim_config(c);
  const std::size_t n_pp = count_or(opt, get_count(c, "validate", "n_pp"));
  std::vector<double> observed(MN_SUMMARY_COUNT);
  std::vector<double> predictive(n_pp * MN_SUMMARY_COUNT);
  check(mn_ppc_run(model.get(), g.get(), &sim, n_pp, seed_of(c), observed.data(), predictive.data()), "ppc");
  const fs::path path = out_dir / "ppc.tsv";
  auto out = open_out(path);
  out << "statistic\tsample\tvalue\n";
  for (std::size_t k = 0; k < MN_SUMMARY_COUNT; ++k) {
    out << mn_summary_name(k) << "\tobserved\t" << observed[k] << '\n';
    for (std::size_t i = 0; i < n_pp; ++i) {
      out << mn_summary_name(k) << '\t' << i << '\t' << predictive[i * MN_SUMMARY_COUNT + k] << '\n';
    }
  }
  finish(out, path);
}

void run_summaries(const json& c, const Options& opt, const fs::path& out_dir) {
  auto g = load_input_graph(c, opt.input);
  double values[MN_SUMMARY_COUNT];
  check(mn_graph_summaries(g.get(), values), "summaries");
  const fs::path path = out_dir / "summaries.tsv";
  auto out = open_out(path);
  out << "statistic\tvalue\n";
  for (std::size_t k = 0; k < MN_SUMMARY_COUNT; ++k) out << mn_summary_name(k) << '\t' << values[k] << '\n';
  finish(out, path);
}

json resolve_config(const Options& opt) {
  json config = default_config();
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in) throw CliError(kExitIo, "cannot open config " + opt.config_path);
    json file = json::parse(in, nullptr, false, true);
    if (file.is_discarded()) throw CliError(kExitConfig, "config " + opt.config_path + " is not valid JSON");
    if (file.is_object() && file.contains("verb") && file.contains("config")) file = file["config"];
    merge_checked(config, file, "");
  }
  for (const auto& s : opt.overrides) apply_override(config, s);
  if (opt.seed >= 0) config["seed"] = opt.seed;
  if (!opt.format.empty()) config["input"]["format"] = opt.format;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation-based inference for mechanistic network models"};
  app.require_subcommand(1, 1);
  Options opt;
  const char* verbs[] = {"simulate", "make-dataset", "train", "infer", "coverage", "abc", "ppc", "summaries"};
  const char* help[] = {"simulate one network from config theta",
                        "write (theta, graph) pairs drawn from the prior",
                        "train the GNN mixture density network",
                        "posterior draws and credible intervals for an observed network",
                        "simulation-based calibration coverage of a trained model",
                        "rejection ABC baseline on summary statistics",
                        "posterior predictive check for an observed network",
                        "summary statistics of a network"};
  for (int v = 0; v < 8; ++v) {
    auto* sub = app.add_subcommand(verbs[v], help[v]);
    sub->add_option("--config", opt.config_path, "JSON config file or a previous run's manifest.json");
    sub->add_option("--set", opt.overrides, "override a config leaf, e.g. sim.final_nodes=200");
    sub->add_option("--seed", opt.seed, "master seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", opt.out_dir, "output directory");
    sub->add_option("--n", opt.n, "count (dataset size, draws, replications, pool or predictive samples)")
        ->check(CLI::NonNegativeNumber);
    const std::string name = verbs[v];
    if (name == "train" || name == "infer" || name == "abc" || name == "ppc" || name == "summaries") {
      sub->add_option("--input", opt.input, name == "train" ? "training dataset directory" : "observed network");
    }
    if (name == "train") sub->add_option("--val-input", opt.val_input, "validation dataset directory");
    if (name == "infer" || name == "coverage" || name == "ppc") {
      sub->add_option("--checkpoint", opt.checkpoint, "trained model");
    }
    if (name == "abc") sub->add_option("--pool", opt.pool, "pool table to reuse or create");
    if (name == "infer" || name == "abc" || name == "ppc" || name == "summaries") {
      sub->add_option("--format", opt.format, "input format")->check(CLI::IsMember({"edges", "contacts"}));
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    const json config = resolve_config(opt);
    const fs::path out_dir = opt.out_dir;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw CliError(kExitIo, "cannot create " + out_dir.string() + ": " + ec.message());
    write_manifest(out_dir, verb, config, opt);
    if (verb == "simulate") {
      run_simulate(config, out_dir);
    } else if (verb == "make-dataset") {
      run_make_dataset(config, opt, out_dir);
    } else if (verb == "train") {
      run_train(config, opt, out_dir);
    } else if (verb == "infer") {
      run_infer(config, opt, out_dir);
    } else if (verb == "coverage") {
      run_coverage(config, opt, out_dir);
    } else if (verb == "abc") {
      run_abc(config, opt, out_dir);
    } else if (verb == "ppc") {
      run_ppc(config, opt, out_dir);
    } else {
      run_summaries(config, opt, out_dir);
    }
  } catch (const CliError& e) {
    std::cerr << "mechnet " << verb << ": " << e.what() << '\n';
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "mechnet " << verb << ": " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}

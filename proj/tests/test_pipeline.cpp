// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mechnet/checkpoint.hpp"
#include "mechnet/error.hpp"
#include "mechnet/pipeline.hpp"
#include "oracles.hpp"

using namespace mechnet;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mechnet_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Type-5 quantile by scanning the interpolation nodes (k - 0.5) / n.
double quantile_oracle(std::vector<double> x, double p) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  if (p <= 0.5 / n) return x.front();
  if (p >= (n - 0.5) / n) return x.back();
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double p0 = (k + 0.5) / n, p1 = (k + 1.5) / n;
    if (p >= p0 && p <= p1) return x[k] + (p - p0) / (p1 - p0) * (x[k + 1] - x[k]);
  }
  return x.back();
}

SimConfig small_sim(std::size_t nodes) {
  SimConfig s;
  s.final_nodes = nodes;
  return s;
}

}  // namespace

TEST_CASE("credible_interval") {
  std::vector<double> draws;
  for (int i = 0; i < 100; ++i) draws.push_back(i + 0.5);
  const auto [lo, hi] = credible_interval(draws, 90.0);
  CHECK(lo == doctest::Approx(5.0));
  CHECK(hi == doctest::Approx(95.0));
  CHECK(lo == doctest::Approx(quantile_oracle(draws, 0.05)));

  const std::vector<double> constant(17, 3.25);
  CHECK(credible_interval(constant, 80.0) == std::pair{3.25, 3.25});

  Rng rng(1);
  std::normal_distribution<double> normal;
  std::vector<double> noise;
  for (int i = 0; i < 37; ++i) noise.push_back(normal(rng));
  const auto [m1, m2] = credible_interval(noise, 0.0);
  CHECK(m1 == m2);
  CHECK(m1 == doctest::Approx(quantile_oracle(noise, 0.5)));
  for (double g : {5.0, 33.0, 50.0, 95.0, 100.0}) {
    const auto [a, b] = credible_interval(noise, g);
    CHECK(a == doctest::Approx(quantile_oracle(noise, (1 - g / 100) / 2)).epsilon(1e-12));
    CHECK(b == doctest::Approx(quantile_oracle(noise, (1 + g / 100) / 2)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(credible_interval(std::vector<double>{}, 50.0), ContractError);
}

TEST_CASE("sample_mixture") {
  Rng rng(2);
  MixtureComponent c;
  c.alpha_conc = {2, 3, 5};
  c.beta_conc = {1, 1, 1};
  c.g_shape = 2;
  c.g_rate = 2;
  c.e_shape = 3;
  c.e_rate = 1;
  const MixtureDensityParams p{{1.0}, {c}};
  const auto draws = sample_mixture(p, 100000, rng);
  double lg = 0.0;
  for (const auto& t : draws) {
    REQUIRE(t.lambda_g > 0.0);
    REQUIRE(std::abs(t.alpha[0] + t.alpha[1] + t.alpha[2] - 1.0) < 1e-12);
    lg += t.lambda_g;
  }
  CHECK(std::abs(lg / draws.size() - 1.0) < 0.02);

  SUBCASE("sample means approach analytic mixture means") {
    MixtureComponent d = c;
    d.alpha_conc = {6, 1, 1};
    d.g_shape = 9;
    d.g_rate = 1.5;
    const MixtureDensityParams mix{{0.3, 0.7}, {c, d}};
    const auto xs = sample_mixture(mix, 100000, rng);
    const auto means = mixture_means(mix);
    for (std::size_t k = 0; k < Theta::kDim; ++k) {
      const auto col = marginal(xs, k);
      double m = 0.0, sq = 0.0;
      for (double x : col) m += x;
      m /= col.size();
      for (double x : col) sq += (x - m) * (x - m);
      const double se = std::sqrt(sq / (col.size() - 1) / col.size());
      CHECK_MESSAGE(std::abs(m - means[k]) < 3 * se, kThetaNames[k]);
    }
  }

  SUBCASE("huge concentrations collapse onto the centre") {
    MixtureComponent sharp;
    sharp.alpha_conc = {6e6, 2e6, 2e6};
    sharp.beta_conc = {1e6, 1e6, 8e6};
    sharp.g_shape = 5e6;
    sharp.g_rate = 1e6;
    sharp.e_shape = 2e6;
    sharp.e_rate = 1e6;
    for (const auto& t : sample_mixture({{1.0}, {sharp}}, 200, rng)) {
      CHECK(std::abs(t.alpha[0] - 0.6) < 1e-2);
      CHECK(std::abs(t.beta[2] - 0.8) < 1e-2);
      CHECK(std::abs(t.lambda_g - 5.0) < 1e-2);
    }
  }
}

TEST_CASE("tensor container and model checkpoint round trip bit-exactly") {
  const fs::path dir = scratch_dir("ckpt");
  Rng rng(3);
  std::vector<NamedArray> arrays{{"a", ad::Matrix::Random(3, 4)}, {"empty", ad::Matrix(0, 2)}, {"b", ad::Matrix::Random(1, 1)}};
  arrays[0].value(1, 2) = -0.0;
  arrays[2].value(0, 0) = std::nextafter(1.0, 2.0);
  write_tensor_container(dir / "t.bin", arrays);
  const auto back = read_tensor_container(dir / "t.bin");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].name == arrays[i].name);
    REQUIRE(back[i].value.rows() == arrays[i].value.rows());
    REQUIRE(back[i].value.cols() == arrays[i].value.cols());
    CHECK(std::memcmp(back[i].value.data(), arrays[i].value.data(), sizeof(double) * arrays[i].value.size()) == 0);
  }

  for (auto v : {LayerVariant::kHigherOrder, LayerVariant::kGcn, LayerVariant::kGin}) {
    Architecture arch;
    arch.variant = v;
    const ModelWeights w = init_weights(arch, 4);
    save_model(w, dir / "m.bin");
    CHECK(fs::exists(manifest_path(dir / "m.bin")));
    const ModelWeights r = load_model(dir / "m.bin");
    CHECK(r.arch == w.arch);
    REQUIRE(r.params.size() == w.params.size());
    for (std::size_t i = 0; i < w.params.size(); ++i) {
      CHECK(r.params[i].name == w.params[i].name);
      CHECK(r.params[i].value == w.params[i].value);
    }
  }

  std::ofstream(dir / "junk.bin") << "not a container";
  CHECK_THROWS_AS(read_tensor_container(dir / "junk.bin"), ParseError);
  CHECK_THROWS_AS(load_model(dir / "missing.bin"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("datasets") {
  const Prior prior;
  const SimConfig sim = small_sim(30);
  SUBCASE("empty dataset") {
    const fs::path dir = scratch_dir("ds0");
    write_dataset(dir, 0, prior, sim, 1);
    CHECK(read_dataset(dir).empty());
    fs::remove_all(dir);
  }
  SUBCASE("same seed, same bytes; records regenerate independently") {
    const fs::path a = scratch_dir("dsa"), b = scratch_dir("dsb");
    const auto mem = write_dataset(a, 12, prior, sim, 77, true);
    write_dataset(b, 12, prior, sim, 77);
    CHECK(slurp(a / "manifest.tsv") == slurp(b / "manifest.tsv"));
    CHECK(slurp(a / "graphs" / "0000005.edges") == slurp(b / "graphs" / "0000005.edges"));
    CHECK(slurp(a / "graphs" / "0000005.json") == slurp(b / "graphs" / "0000005.json"));
    const auto loaded = read_dataset(a);
    REQUIRE(loaded.size() == 12);
    for (std::size_t i = 0; i < 12; ++i) {
      CHECK(loaded[i].theta == mem[i].theta);
      CHECK(loaded[i].graph.sorted_edges() == mem[i].graph.sorted_edges());
    }
    const auto rec = simulate_record(prior, sim, 77, 7);
    CHECK(rec.sample.theta == mem[7].theta);
    CHECK(generate_dataset(12, prior, sim, 77)[3].theta == mem[3].theta);
    fs::remove_all(a);
    fs::remove_all(b);
  }
  SUBCASE("invariant scan over a thousand draws") {
    const auto ds = generate_dataset(1000, prior, small_sim(40), 5);
    for (const auto& s : ds) {
      REQUIRE(s.graph.node_count() == 40);
      REQUIRE(std::abs(s.theta.alpha[0] + s.theta.alpha[1] + s.theta.alpha[2] - 1.0) < 1e-12);
      REQUIRE(std::abs(s.theta.beta[0] + s.theta.beta[1] + s.theta.beta[2] - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("training loop") {
  const Prior prior;
  const SimConfig sim = small_sim(20);
  const auto train_set = generate_dataset(50, prior, sim, 10);
  const auto val_set = generate_dataset(20, prior, sim, 11);
  Architecture arch;
  arch.variant = LayerVariant::kHigherOrder;
  RunConfig config;
  config.sim = sim;
  config.batch_size = 16;
  config.val_splits = 5;

  SUBCASE("frozen weights stop after patience and return the initial weights") {
    config.lr = 0.0;
    config.patience = 1;
    const ModelWeights init = init_weights(arch, 1);
    const auto result = train(config, init, train_set, val_set);
    CHECK(result.log.epochs.size() == 2);
    CHECK(result.log.early_stopped);
    for (std::size_t i = 0; i < init.params.size(); ++i) CHECK(result.weights.params[i].value == init.params[i].value);
  }
  SUBCASE("one epoch regardless of patience") {
    config.max_epochs = 1;
    config.patience = 10;
    CHECK(train(config, init_weights(arch, 1), train_set, val_set).log.epochs.size() == 1);
  }
  SUBCASE("validation EPE descends and the log is reproducible") {
    config.max_epochs = 5;
    std::vector<EpochRecord> seen;
    const auto a = train(config, init_weights(arch, 2), train_set, val_set,
                         [&](const EpochRecord& r) { seen.push_back(r); });
    const auto b = train(config, init_weights(arch, 2), train_set, val_set);
    CHECK(seen.size() == a.log.epochs.size());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : a.log.epochs) {
      best = std::min(best, e.val_epe);
      CHECK(e.val_split_min <= e.val_epe);
      CHECK(e.val_split_max >= e.val_epe);
    }
    CHECK(best < a.log.initial_val_epe);
    REQUIRE(a.log.epochs.size() == b.log.epochs.size());
    for (std::size_t i = 0; i < a.log.epochs.size(); ++i) {
      CHECK(a.log.epochs[i].train_epe == b.log.epochs[i].train_epe);
      CHECK(a.log.epochs[i].val_epe == b.log.epochs[i].val_epe);
    }
    CHECK(evaluate_epe(a.weights, val_set, 7) == doctest::Approx(best).epsilon(1e-12));
    std::ostringstream out;
    write_training_log(out, a.log);
    CHECK(out.str().rfind("epoch\ttrain_epe\tval_epe\tval_split_min\tval_split_max\twall_seconds\n", 0) == 0);
  }
  SUBCASE("split range brackets the mean") {
    const auto w = init_weights(arch, 3);
    const auto [lo, hi] = split_epe_range(w, val_set, 4, 8);
    const double m = evaluate_epe(w, val_set, 8);
    CHECK(lo <= m);
    CHECK(hi >= m);
    const auto [one_lo, one_hi] = split_epe_range(w, val_set, 1, 8);
    CHECK(one_lo == doctest::Approx(m));
    CHECK(one_hi == doctest::Approx(m));
  }
  SUBCASE("non-finite loss aborts with a snapshot") {
    ModelWeights bad = init_weights(arch, 4);
    for (auto& p : bad.params)
      if (p.name == "head.0.bias") p.value.setConstant(std::numeric_limits<double>::quiet_NaN());
    const fs::path dir = scratch_dir("snap");
    CHECK_THROWS_AS(train(config, bad, train_set, val_set, {}, dir / "snap.bin"), NumericError);
    CHECK(fs::exists(dir / "snap.bin"));
    fs::remove_all(dir);
  }
  SUBCASE("config validation") {
    RunConfig bad = config;
    bad.batch_size = 0;
    CHECK_THROWS_AS(validate_run_config(bad), ContractError);
    bad = config;
    bad.lr = -1;
    CHECK_THROWS_AS(validate_run_config(bad), ContractError);
    CHECK_THROWS_AS(train(config, init_weights(arch, 1), {}, val_set), ContractError);
  }
}

TEST_CASE("posterior summaries are invariant under relabeling") {
  Rng rng(12);
  Architecture arch;
  const ModelWeights w = init_weights(arch, 13);
  const Graph g = oracle::random_graph(30, 0.15, rng);
  const Graph h = g.relabeled(oracle::random_permutation(30, rng));
  Rng r1(5), r2(5);
  const auto a = sample_posterior(w, g, 500, r1);
  const auto b = sample_posterior(w, h, 500, r2);
  for (std::size_t k = 0; k < Theta::kDim; ++k) {
    const auto ia = credible_interval(marginal(a, k), 80.0);
    const auto ib = credible_interval(marginal(b, k), 80.0);
    CHECK(std::abs(ia.first - ib.first) < 1e-10);
    CHECK(std::abs(ia.second - ib.second) < 1e-10);
  }
}

TEST_CASE("write_theta_table") {
  Theta t;
  t.lambda_g = 1.5;
  std::ostringstream out;
  write_theta_table(out, std::vector<Theta>{t});
  CHECK(out.str().rfind("lambda_g\tlambda_e\talpha_RA\talpha_PA\talpha_NPA\tbeta_TF\tbeta_NPA_PA\tbeta_RA_PA\n1.5\t", 0) == 0);
}

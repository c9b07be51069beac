#include <cmath>

#include "doctest.h"
#include "dina/errors.hpp"
#include "dina/interp_neural.hpp"
#include "dina/rng.hpp"
#include "dina/synth.hpp"

using namespace dina;

namespace {

struct Fixture {
  Dataset data;
  DinaModel model;
  std::vector<int> ids{0, 1, 2, 3};

  static ModelConfig model_config() {
    ModelConfig mc;
    mc.image.stage_blocks = {1, 1};
    mc.neural.neurons = 40;
    mc.neural.mlp_hidden = 64;
    return mc;
  }
  static SynthConfig synth_config() {
    SynthConfig sc;
    sc.stimuli = 20;
    sc.neurons = 40;
    return sc;
  }
  Fixture() : data(synth_dataset(4, synth_config())), model(model_config()) {}
};

}  // namespace

TEST_CASE("kept neuron counts and magnitude masks") {
  CHECK(kept_neurons(0.01, 256) == 3);
  CHECK(kept_neurons(0.5, 256) == 128);
  CHECK(kept_neurons(1.0, 256) == 256);
  CHECK(kept_neurons(0.001, 256) == 1);
  CHECK(kept_neurons(0.1, 10) == 1);
  const std::vector<float> r{0.5f, -2.0f, 0.5f, 1.0f, 0.0f};
  CHECK(top_magnitude_mask(r, 2) == std::vector<bool>{false, true, false, true, false});
  CHECK(top_magnitude_mask(r, 3) == std::vector<bool>{true, true, false, true, false});
}

TEST_CASE("ablation config validation") {
  AblationConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.fractions = {};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.fractions = {0.0, 0.5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.fractions = {0.5, 0.2};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.fractions = {0.5, 1.2};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(parse_ablation_mode(to_string(AblationMode::Random)) == AblationMode::Random);
}

TEST_CASE("ablation curves") {
  const Fixture f;
  AblationConfig cfg;
  cfg.samplings = 3;
  const auto sorted = ablation_curve(f.model, f.data, f.ids, AblationMode::Sorted, cfg);
  const auto random = ablation_curve(f.model, f.data, f.ids, AblationMode::Random, cfg);
  REQUIRE(sorted.mean.size() == cfg.fractions.size());
  CHECK(sorted.mean.back() == 1.0);
  CHECK(random.mean.back() == 1.0);
  for (double m : sorted.mean) CHECK(std::isfinite(m));
  const auto again = ablation_curve(f.model, f.data, f.ids, AblationMode::Random, cfg, 2);
  CHECK(again.mean == random.mean);
  CHECK(again.std == random.std);
  cfg.seed = 8;
  CHECK(ablation_curve(f.model, f.data, f.ids, AblationMode::Random, cfg).mean != random.mean);
  cfg.threshold = 0.0;
  CHECK(ablation_curve(f.model, f.data, f.ids, AblationMode::Sorted, cfg).threshold_fraction == cfg.fractions.front());
}

TEST_CASE("log-normal fit") {
  Rng rng(7);
  std::vector<double> w(100000);
  for (double& x : w) x = std::exp(rng.normal(-5.0, 1.0));
  const auto fit = fit_lognormal(w);
  CHECK(std::abs(fit.mu + 5.0) < 0.05);
  CHECK(std::abs(fit.sigma - 1.0) < 0.05);
  CHECK(fit.skewness > 0.0);
  CHECK(fit.ks < 0.01);
  CHECK(fit.count == 100000);

  std::vector<double> logs(w.size());
  std::transform(w.begin(), w.end(), logs.begin(), [](double x) { return std::log(x); });
  CHECK(fit_lognormal_logs(logs).mu == doctest::Approx(fit.mu));

  const std::vector<double> uniform(50, 1.0 / 51.0);
  const auto flat = fit_lognormal(uniform);
  CHECK(flat.sigma == 0.0);
  CHECK(flat.mu == doctest::Approx(-std::log(51.0)));
  CHECK_THROWS_AS(fit_lognormal(std::vector<double>{0.1, 0.0}), ContractError);
  CHECK_THROWS_AS(fit_lognormal(std::vector<double>{}), InsufficientDataError);
}

TEST_CASE("attention distribution") {
  const Fixture f;
  const auto st = attention_distribution(f.model, f.data, f.ids);
  CHECK(st.weights.size() == 4u * 40u * 39u);
  CHECK(st.log_weights.size() == st.weights.size());
  for (double l : st.log_weights) CHECK(l <= 0.0);
  // off-diagonal weights of each row sum to one minus the self weight
  double row0 = 0.0;
  for (int j = 0; j < 39; ++j) row0 += st.weights[static_cast<std::size_t>(j)];
  CHECK(row0 < 1.0);
  CHECK(std::isfinite(st.fit.mu));
  const auto avg = attention_distribution(f.model, f.data, f.ids, true);
  CHECK(avg.weights.size() == 40u * 39u);
}

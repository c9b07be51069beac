#include <cmath>

#include "doctest.h"
#include "dina/errors.hpp"
#include "dina/evaluator.hpp"
#include "dina/rng.hpp"
#include "dina/synth.hpp"

using namespace dina;

namespace {

std::vector<FeatureMap> random_maps(int n, Rng& rng) {
  std::vector<FeatureMap> maps(static_cast<std::size_t>(n), FeatureMap(kMapHeight, kMapWidth));
  for (auto& m : maps) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.normal());
  }
  return maps;
}

std::vector<int> iota_ids(int n, int start = 0) {
  std::vector<int> ids(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = start + i;
  return ids;
}

SimilarityMatrix from_scores(const MatrixRd& scores) {
  SimilarityMatrix s;
  s.values = scores;
  s.ids = iota_ids(static_cast<int>(scores.rows()));
  s.zero_query.assign(scores.rows(), 0);
  s.zero_gallery.assign(scores.rows(), 0);
  return s;
}

}  // namespace

TEST_CASE("similarity matrix") {
  Rng rng(1);
  const auto maps = random_maps(6, rng);
  const auto ids = iota_ids(6, 10);
  const auto same = similarity_matrix(maps, maps, ids);
  for (int i = 0; i < 6; ++i) CHECK(same.values(i, i) == doctest::Approx(1.0));
  CHECK(same.values.maxCoeff() <= 1.0);
  CHECK(same.values.minCoeff() >= -1.0);

  std::vector<FeatureMap> onehot(4, FeatureMap::Zero(kMapHeight, kMapWidth));
  for (int i = 0; i < 4; ++i) onehot[static_cast<std::size_t>(i)](i, 3 * i) = 2.0f;
  const auto orth = similarity_matrix(onehot, onehot, iota_ids(4));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(orth.values(i, j) == (i == j ? 1.0 : 0.0));
  }
  CHECK(diagonal_advantage(orth) == doctest::Approx(1.0));

  auto with_zero = maps;
  with_zero[2].setZero();
  const auto z = similarity_matrix(with_zero, maps, ids);
  CHECK(z.flagged(2, 0));
  CHECK(z.values.row(2).isZero());
  CHECK_FALSE(z.flagged(1, 0));

  CHECK_THROWS_AS(similarity_matrix(maps, maps, {1, 2, 3, 4, 5, 5}), ContractError);
  CHECK_THROWS_AS(similarity_matrix(maps, maps, iota_ids(5)), DimensionError);
}

TEST_CASE("top-k retrieval") {
  MatrixRd eye = MatrixRd::Identity(12, 12) + 0.01 * MatrixRd::Ones(12, 12);
  const auto rep = topk_retrieval(from_scores(eye));
  CHECK(rep.top1 == 1.0);
  CHECK(rep.top10 == 1.0);
  CHECK(rep.at(5) == 1.0);

  // ties rank the lower column index first
  const auto tied = topk_retrieval(from_scores(MatrixRd::Zero(12, 12)), {1, 5, 10});
  CHECK(tied.ranks[0] == 1);
  CHECK(tied.ranks[3] == 4);
  CHECK(tied.top1 == doctest::Approx(1.0 / 12));
  CHECK(tied.top10 == doctest::Approx(10.0 / 12));

  // each row: one score only
  MatrixRd anti = -MatrixRd::Identity(12, 12);
  const auto worst = topk_retrieval(from_scores(anti));
  for (int r : worst.ranks) CHECK(r == 12);
  CHECK(worst.top10 == 0.0);

  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixRd s(30, 30);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform(-1, 1);
    const auto r = topk_retrieval(from_scores(s));
    CHECK(r.top1 <= r.top5);
    CHECK(r.top5 <= r.top10);
  }
  CHECK_THROWS_AS(topk_retrieval(from_scores(MatrixRd::Zero(4, 4)), {1, 5}), ConfigError);
  CHECK_THROWS_AS(topk_retrieval(from_scores(MatrixRd::Zero(4, 4)), {0}), ConfigError);
}

TEST_CASE("map correspondence") {
  Rng rng(4);
  MapSet maps;
  maps.ids = iota_ids(5);
  maps.image = random_maps(5, rng);
  maps.neural = maps.image;
  const auto cs = map_correspondence_stats(maps);
  for (double s : cs.ssim) CHECK(s == doctest::Approx(1.0));
  CHECK(cs.mean == doctest::Approx(1.0));
  CHECK(cs.std == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cs.mismatched_mean < 0.5);
}

TEST_CASE("spectrum report") {
  Rng rng(6);
  MatrixRf noise(40, kImagePixels);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = static_cast<float>(rng.uniform());
  // rank-3 maps
  std::vector<FeatureMap> low(40, FeatureMap(kMapHeight, kMapWidth));
  const auto basis = random_maps(3, rng);
  for (auto& m : low) {
    m = static_cast<float>(rng.normal()) * basis[0] + static_cast<float>(rng.normal()) * basis[1] +
        static_cast<float>(rng.normal()) * basis[2];
  }
  const auto rep = spectrum_report(noise, low, low);
  CHECK(rep.image_maps.fractions == rep.neural_maps.fractions);
  auto lead5 = [](const VarianceSpectrum& s) {
    double t = 0;
    for (std::size_t k = 0; k < 5; ++k) t += s.fractions[k];
    return t;
  };
  CHECK(lead5(rep.image_maps) > lead5(rep.images));
  for (const auto* s : {&rep.images, &rep.image_maps, &rep.neural_maps}) {
    double total = 0;
    for (double f : s->fractions) total += f;
    CHECK(total == doctest::Approx(1.0));
  }
  CHECK(stack_maps(low).rows() == 40);
  CHECK(stack_maps(low).cols() == kMapSize);
}

TEST_CASE("untrained model baselines") {
  SynthConfig sc;
  sc.stimuli = 280;
  sc.neurons = 64;
  const Dataset data = synth_dataset(11, sc);
  ModelConfig mc;
  mc.image.stage_blocks = {1, 1};
  mc.neural.neurons = 64;
  const DinaModel model(mc);
  const MapSet maps = compute_maps(model, data, iota_ids(280), 1);
  const auto sim = similarity_matrix(maps);

  // diagonal advantage against its column-permutation distribution
  const double adv = diagonal_advantage(sim);
  Rng rng(2);
  std::vector<double> perm_adv;
  for (int p = 0; p < 200; ++p) {
    const auto perm = rng.permutation(280);
    SimilarityMatrix shuffled = sim;
    for (int j = 0; j < 280; ++j) shuffled.values.col(j) = sim.values.col(perm[static_cast<std::size_t>(j)]);
    perm_adv.push_back(diagonal_advantage(shuffled));
  }
  double m = 0, v = 0;
  for (double a : perm_adv) m += a / 200;
  for (double a : perm_adv) v += (a - m) * (a - m) / 199;
  CHECK(std::abs(adv - m) < 3.0 * std::sqrt(v));

  // matched vs cyclically mismatched ssim: paired difference not significant
  const auto cs = map_correspondence_stats(maps);
  MapSet shifted = maps;
  std::rotate(shifted.image.begin(), shifted.image.begin() + 1, shifted.image.end());
  const auto mis = map_correspondence_stats(shifted);
  double dm = 0, dv = 0;
  for (int i = 0; i < 280; ++i) dm += (cs.ssim[static_cast<std::size_t>(i)] - mis.ssim[static_cast<std::size_t>(i)]) / 280;
  for (int i = 0; i < 280; ++i) {
    const double d = cs.ssim[static_cast<std::size_t>(i)] - mis.ssim[static_cast<std::size_t>(i)] - dm;
    dv += d * d / 279;
  }
  CHECK(std::abs(dm) / std::sqrt(dv / 280) < 1.96);
  CHECK(cs.mismatched_mean == doctest::Approx(mis.mean));

  SynthConfig other = sc;
  other.neurons = 63;
  CHECK_THROWS_AS(compute_maps(model, synth_dataset(1, other), {0}), DimensionError);
}

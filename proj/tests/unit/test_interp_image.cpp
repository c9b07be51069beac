#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "doctest.h"
#include "dina/errors.hpp"
#include "dina/interp_image.hpp"
#include "dina/rng.hpp"
#include "dina/ssim.hpp"

using namespace dina;
using MaskU8 = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace {

StimulusImage random_image(std::uint64_t seed) {
  Rng rng(seed);
  StimulusImage img(kImageHeight, kImageWidth);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<float>(rng.uniform());
  return img;
}

MatrixRd bump(double cy, double cx, double sigma) {
  MatrixRd m(kImageHeight, kImageWidth);
  for (int r = 0; r < kImageHeight; ++r) {
    for (int c = 0; c < kImageWidth; ++c) {
      m(r, c) = std::exp(-((r - cy) * (r - cy) + (c - cx) * (c - cx)) / (2 * sigma * sigma));
    }
  }
  return m;
}

// Feature map driven only by the pixels of a 20x20 patch at (24, 120).
FeatureFunction patch_model() {
  Rng rng(17);
  auto weights = std::make_shared<MatrixRf>(kMapSize, 400);
  for (Eigen::Index i = 0; i < weights->size(); ++i) weights->data()[i] = static_cast<float>(rng.normal());
  return [weights](const StimulusImage& img) {
    Eigen::VectorXf patch(400);
    for (int r = 0; r < 20; ++r) {
      for (int c = 0; c < 20; ++c) patch(r * 20 + c) = img(24 + r, 120 + c);
    }
    Eigen::VectorXf out = (*weights * patch).array().tanh();
    return FeatureMap(Eigen::Map<const MatrixRf>(out.data(), kMapHeight, kMapWidth));
  };
}

std::vector<double> ranks(const MatrixRd& m) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(m.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return m.data()[a] < m.data()[b]; });
  std::vector<double> r(idx.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && m.data()[idx[j + 1]] == m.data()[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
    i = j + 1;
  }
  return r;
}

double spearman(const MatrixRd& a, const MatrixRd& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const Eigen::Map<const Eigen::VectorXd> x(ra.data(), static_cast<Eigen::Index>(ra.size()));
  const Eigen::Map<const Eigen::VectorXd> y(rb.data(), static_cast<Eigen::Index>(rb.size()));
  const Eigen::VectorXd xc = x.array() - x.mean(), yc = y.array() - y.mean();
  return xc.dot(yc) / (xc.norm() * yc.norm());
}

Blob box_blob(int r0, int r1, int c0, int c1) {
  MatrixRd rf = MatrixRd::Zero(kImageHeight, kImageWidth);
  rf.block(r0, c0, r1 - r0, c1 - c0).setOnes();
  auto blobs = extract_blobs(rf);
  REQUIRE(blobs.size() == 1);
  return blobs[0];
}

}  // namespace

TEST_CASE("gaussian mask") {
  const auto m = gaussian_mask(30, 100, 4.0);
  CHECK(m.values(30 - m.top, 100 - m.left) == 1.0);
  CHECK(m.values(30 - m.top, 104 - m.left) == doctest::Approx(std::exp(-0.5)));
  CHECK(m.values(30 - m.top, 112 - m.left) == doctest::Approx(std::exp(-4.5)));
  CHECK(m.values.rows() == 25);
  CHECK(m.values.cols() == 25);
  const auto corner = gaussian_mask(0, 0, 4.0);
  CHECK(corner.top == 0);
  CHECK(corner.values.rows() == 13);
  OcclusionConfig cfg;
  CHECK(cfg.window() == 25);
  cfg.sigma = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("occlusion") {
  OcclusionConfig cfg;
  const StimulusImage flat = StimulusImage::Constant(kImageHeight, kImageWidth, 0.3f);
  CHECK(occlude(flat, 34, 135, cfg) == flat);
  const auto img = random_image(1);
  OcclusionConfig none = cfg;
  none.alpha = 0.0;
  CHECK(occlude(img, 34, 135, none) == img);

  const auto occ = occlude(img, 34, 135, cfg);
  const auto m = gaussian_mask(34, 135, cfg.sigma);
  const double support_mean =
      img.block(m.top, m.left, m.values.rows(), m.values.cols()).cast<double>().mean();
  CHECK(occ(34, 135) == doctest::Approx(support_mean).epsilon(1e-6));
  CHECK(occ(0, 0) == img(0, 0));
}

TEST_CASE("receptive-field maps") {
  OcclusionConfig cfg;
  cfg.stride = 4;
  const auto img = random_image(2);

  const FeatureFunction constant = [](const StimulusImage&) { return FeatureMap::Constant(kMapHeight, kMapWidth, 0.5f); };
  const auto flat = rf_map(img, constant, cfg);
  CHECK(flat.degenerate);
  CHECK(flat.values.isZero());

  const auto model = patch_model();
  const auto rf = rf_map(img, model, cfg, 1);
  CHECK_FALSE(rf.degenerate);
  CHECK(rf.values.minCoeff() == doctest::Approx(0.0));
  CHECK(rf.values.maxCoeff() == doctest::Approx(1.0));
  Eigen::Index r = 0, c = 0;
  rf.values.maxCoeff(&r, &c);
  CHECK(r >= 24);
  CHECK(r < 44);
  CHECK(c >= 120);
  CHECK(c < 140);

  OcclusionConfig cos_cfg = cfg;
  cos_cfg.metric = DeltaMetric::Cos;
  const auto rf_cos = rf_map(img, model, cos_cfg, 1);
  CHECK(spearman(rf.values, rf_cos.values) > 0.5);

  // thread count does not change the result
  CHECK(rf_map(img, model, cfg, 3).raw == rf.raw);
}

TEST_CASE("blob extraction") {
  CHECK(extract_blobs(MatrixRd::Constant(kImageHeight, kImageWidth, 0.5)).empty());

  const auto one = extract_blobs(bump(34, 100, 5.0));
  REQUIRE(one.size() == 1);
  const double analytic = M_PI * 25.0 * 2.0 * std::log(1.0 / 0.6);
  CHECK(std::abs(one[0].area - analytic) / analytic < 0.15);
  CHECK(one[0].centroid_row == doctest::Approx(34.0));
  CHECK(one[0].centroid_col == doctest::Approx(100.0));

  const MatrixRd two = bump(20, 60, 5.0).cwiseMax(bump(45, 200, 5.0));
  CHECK(extract_blobs(two).size() == 2);

  BlobConfig big;
  big.min_area = 100;
  CHECK(extract_blobs(bump(34, 100, 5.0), big).empty());

  RfImportanceMap degenerate;
  degenerate.values = MatrixRd::Ones(kImageHeight, kImageWidth);
  degenerate.degenerate = true;
  CHECK(extract_blobs(degenerate).empty());
}

TEST_CASE("segment descriptors") {
  std::vector<Pixel> line;
  for (int c = 0; c < 15; ++c) line.emplace_back(5, c);
  const auto straight = make_segment(line);
  CHECK(std::abs(straight.tortuosity - 1.0) < 1e-6);
  CHECK(straight.orientation == doctest::Approx(0.0));

  std::vector<Pixel> diag;
  for (int k = 0; k < 10; ++k) diag.emplace_back(k, k);
  CHECK(std::abs(make_segment(diag).tortuosity - 1.0) < 1e-6);

  // rasterized half circle of radius 20, traced by the skeleton walker
  const int radius = 20;
  MaskU8 arc = MaskU8::Zero(2 * radius + 5, 2 * radius + 5);
  for (int k = 0; k <= 2000; ++k) {
    const double t = M_PI * k / 2000.0;
    arc(static_cast<int>(std::lround(radius + 2 - radius * std::sin(t))),
        static_cast<int>(std::lround(radius + 2 + radius * std::cos(t)))) = 1;
  }
  const auto segs = skeleton_segments(thin(arc));
  REQUIRE(segs.size() == 1);
  CHECK(std::abs(segs[0].tortuosity - M_PI / 2) / (M_PI / 2) < 0.05);

  CHECK(orientation_coherence({0.0, 0.0, 0.0}) == doctest::Approx(1.0));
  CHECK(orientation_coherence({0.3, 0.3}, false) == doctest::Approx(1.0));
  CHECK(std::abs(orientation_coherence({0.0, M_PI / 2}, true)) < 1e-6);
  // axial: opposite directions are the same orientation
  CHECK(orientation_coherence({0.0, M_PI}, true) == doctest::Approx(1.0));
  CHECK(std::abs(orientation_coherence({0.0, M_PI}, false)) < 1e-6);
}

TEST_CASE("thinning and skeleton walk") {
  MaskU8 bar = MaskU8::Zero(9, 30);
  bar.block(3, 2, 3, 26).setOnes();
  const MaskU8 sk = thin(bar);
  for (int c = 0; c < 30; ++c) CHECK(sk.col(c).cast<int>().sum() <= 1);
  const auto segs = skeleton_segments(sk);
  REQUIRE(segs.size() == 1);
  CHECK(std::abs(std::sin(segs[0].orientation)) < 1e-9);

  // a plus sign splits at the junction into four arms; the junction
  // cluster itself only contributes 2-pixel links
  MaskU8 plus = MaskU8::Zero(21, 21);
  plus.row(10).segment(2, 17).setOnes();
  plus.col(10).segment(2, 17).setOnes();
  const auto parts = skeleton_segments(plus);
  CHECK(std::count_if(parts.begin(), parts.end(), [](const Segment& s) { return s.pixels.size() >= 3; }) == 4);

  // a closed ring becomes two halves
  MaskU8 ring = MaskU8::Zero(12, 12);
  ring.block(2, 2, 1, 8).setOnes();
  ring.block(9, 2, 1, 8).setOnes();
  ring.block(2, 2, 8, 1).setOnes();
  ring.block(2, 9, 8, 1).setOnes();
  const auto halves = skeleton_segments(thin(ring));
  CHECK(halves.size() == 2);
}

TEST_CASE("otsu and sobel") {
  std::vector<double> v;
  for (int i = 0; i < 50; ++i) v.push_back(0.1 + 0.001 * i);
  for (int i = 0; i < 50; ++i) v.push_back(0.9 + 0.001 * i);
  const double t = otsu_threshold(v);
  CHECK(std::count_if(v.begin(), v.end(), [&](double x) { return x > t; }) == 50);
  CHECK_THROWS_AS(otsu_threshold({}), InsufficientDataError);
  MatrixRd step = MatrixRd::Zero(8, 8);
  step.rightCols(4).setOnes();
  const MatrixRd mag = sobel_magnitude(step);
  CHECK(mag(4, 0) == 0.0);
  CHECK(mag(4, 3) == doctest::Approx(4.0));
}

TEST_CASE("shape-texture index closed forms") {
  CHECK(shape_texture_index(0.7, 1.0).texture == 0.0);
  CHECK(shape_texture_index(0.7, 1.0).sti == 0.7);
  CHECK(std::abs(shape_texture_index(0.0, 5.0).sti - (-(1 - std::exp(-4.0)))) < 1e-4);
  CHECK(std::abs(shape_texture_index(0.0, 5.0).sti - (-0.9817)) < 1e-4);
  CHECK(std::abs(shape_texture_index(0.8, 1.2).sti - 0.6187) < 1e-4);
  const auto st = shape_texture_index(0.4, 2.0, 0.5);
  CHECK(st.sti == 0.4 - st.texture);
  CHECK_THROWS_AS(shape_texture_index(0.5, 0.99), ContractError);
  CHECK_THROWS_AS(shape_texture_index(1.5, 1.0), ContractError);
  CHECK_THROWS_AS(shape_texture_index(0.5, 1.0, 0.0), ContractError);
  CHECK(sti_bin(-1.0) == 0);
  CHECK(sti_bin(-0.85) == 1);
  CHECK(sti_bin(0.0) == 9);
  CHECK(sti_bin(0.05) == 10);
  CHECK(sti_bin(1.0) == 19);
}

TEST_CASE("STI report on bar and texture fixtures") {
  Rng rng(5);
  std::vector<std::vector<Blob>> bars, textures;
  for (int i = 0; i < 6; ++i) {
    StimulusImage img = StimulusImage::Constant(kImageHeight, kImageWidth, 0.5f);
    const int row = 20 + 4 * i, col = 60 + 10 * i;
    img.block(row, col, 4, 60).setConstant(1.0f);
    Blob b = box_blob(row - 6, row + 10, col - 6, col + 66);
    describe_blob(b, img);
    CHECK(b.valid);
    bars.push_back({b});

    StimulusImage noise = img;
    for (int r = row - 6; r < row + 10; ++r) {
      for (int c = col - 6; c < col + 66; ++c) noise(r, c) = static_cast<float>(rng.uniform());
    }
    Blob t = box_blob(row - 6, row + 10, col - 6, col + 66);
    describe_blob(t, noise);
    textures.push_back({t});
  }
  const std::vector<int> ids{0, 1, 2, 3, 4, 5};
  const auto bar_rep = sti_report(bars, ids);
  const auto tex_rep = sti_report(textures, ids);
  CHECK_FALSE(bar_rep.empty);
  CHECK(bar_rep.median_sti > 0.0);
  CHECK(tex_rep.median_sti < bar_rep.median_sti);
  int total = 0;
  for (int h : bar_rep.histogram) total += h;
  CHECK(total == static_cast<int>(bar_rep.records.size()));

  // a blob on a flat image has no edges and is excluded
  Blob flat = box_blob(10, 30, 10, 40);
  describe_blob(flat, StimulusImage::Constant(kImageHeight, kImageWidth, 0.5f));
  CHECK_FALSE(flat.valid);
  const auto excl = sti_report({{flat}}, {3});
  CHECK(excl.empty);
  CHECK(excl.excluded_per_image[0] == 1);

  const auto empty = sti_report({{}, {}}, {0, 1});
  CHECK(empty.empty);
  CHECK(empty.records.empty());
  CHECK(empty.blobs_per_image == std::vector<int>{0, 0});
}

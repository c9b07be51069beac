#include "dina/synth.hpp"

#include <algorithm>
#include <cmath>

#include "dina/errors.hpp"
#include "dina/rng.hpp"
#include "dina/stimulus.hpp"

namespace dina {

std::string to_string(PairingMode m) { return m == PairingMode::Linked ? "linked" : "unlinked"; }

PairingMode parse_pairing(const std::string& s) {
  if (s == "linked") return PairingMode::Linked;
  if (s == "unlinked") return PairingMode::Unlinked;
  throw ConfigError("unknown pairing mode '" + s + "' (linked, unlinked)");
}

void SynthConfig::validate() const {
  if (stimuli < 20) throw ConfigError("synth: need at least 20 stimuli");
  if (neurons < 16) throw ConfigError("synth: need at least 16 neurons");
  if (!(snr > 0.0)) throw ConfigError("synth: snr must be positive");
  if (min_patches < 0 || max_patches < min_patches || min_bars < 0 || max_bars < min_bars) {
    throw ConfigError("synth: bad patch/bar count range");
  }
  if (lowdim < 1) throw ConfigError("synth: lowdim must be positive");
}

namespace {

constexpr double kPi = 3.14159265358979323846;

int pick(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1))); }

// Adds amp * envelope * carrier over a window around (cy, cx).
template <typename Profile>
void stamp(Eigen::Ref<MatrixRd> img, double cy, double cx, double radius, Profile&& profile) {
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int y1 = std::min(kImageHeight - 1, static_cast<int>(std::ceil(cy + radius)));
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int x1 = std::min(kImageWidth - 1, static_cast<int>(std::ceil(cx + radius)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) img(y, x) += profile(y - cy, x - cx);
}

void add_gabor(Eigen::Ref<MatrixRd> img, Rng& rng) {
  const double cy = rng.uniform(0, kImageHeight), cx = rng.uniform(0, kImageWidth);
  const double sigma = rng.uniform(3.0, 9.0);
  const double theta = rng.uniform(0, kPi);
  const double lambda = rng.uniform(6.0, 18.0);
  const double phase = rng.uniform(0, 2 * kPi);
  const double amp = rng.uniform(0.15, 0.4) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  const double c = std::cos(theta), s = std::sin(theta);
  stamp(img, cy, cx, 3 * sigma, [&](double dy, double dx) {
    const double u = dx * c + dy * s;
    const double env = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
    return amp * env * std::cos(2 * kPi * u / lambda + phase);
  });
}

void add_bar(Eigen::Ref<MatrixRd> img, Rng& rng) {
  const double cy = rng.uniform(0, kImageHeight), cx = rng.uniform(0, kImageWidth);
  const double half_len = rng.uniform(8.0, 40.0);
  const double half_width = rng.uniform(1.0, 3.0);
  const double theta = rng.uniform(0, kPi);
  const double amp = rng.uniform(0.2, 0.45) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  const double c = std::cos(theta), s = std::sin(theta);
  stamp(img, cy, cx, half_len + 2 * half_width, [&](double dy, double dx) {
    const double along = dx * c + dy * s;
    const double across = -dx * s + dy * c;
    // soft edges, one pixel wide
    const double a = std::clamp(half_len + 0.5 - std::abs(along), 0.0, 1.0);
    const double b = std::clamp(half_width + 0.5 - std::abs(across), 0.0, 1.0);
    return amp * a * b;
  });
}

}  // namespace

MatrixRf synth_images(std::uint64_t seed, int stimuli, const SynthConfig& cfg) {
  Rng rng(seed);
  MatrixRf out(stimuli, kImagePixels);
  MatrixRd img(kImageHeight, kImageWidth);
  for (int s = 0; s < stimuli; ++s) {
    img.setConstant(0.5);
    const int patches = pick(rng, cfg.min_patches, cfg.max_patches);
    for (int i = 0; i < patches; ++i) add_gabor(img, rng);
    const int bars = pick(rng, cfg.min_bars, cfg.max_bars);
    for (int i = 0; i < bars; ++i) add_bar(img, rng);
    out.row(s) = Eigen::Map<const Eigen::RowVectorXd>(img.data(), kImagePixels).cwiseMax(0.0).cwiseMin(1.0).cast<float>();
  }
  return out;
}

MatrixRf synth_filters(std::uint64_t seed, int neurons) {
  Rng rng(seed);
  MatrixRf out = MatrixRf::Zero(neurons, kImagePixels);
  MatrixRd f(kImageHeight, kImageWidth);
  for (int n = 0; n < neurons; ++n) {
    f.setZero();
    const double cy = rng.uniform(8, kImageHeight - 8), cx = rng.uniform(8, kImageWidth - 8);
    const double sigma = rng.uniform(3.0, 8.0);
    const double theta = rng.uniform(0, kPi);
    const double lambda = rng.uniform(6.0, 16.0);
    const double phase = rng.uniform(0, 2 * kPi);
    const double c = std::cos(theta), s = std::sin(theta);
    stamp(f, cy, cx, 3 * sigma, [&](double dy, double dx) {
      const double u = dx * c + dy * s;
      return std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma)) * std::cos(2 * kPi * u / lambda + phase);
    });
    const double norm = f.norm();
    out.row(n) = (Eigen::Map<const Eigen::RowVectorXd>(f.data(), kImagePixels) / norm).cast<float>();
  }
  return out;
}

Dataset synth_dataset(std::uint64_t seed, const SynthConfig& cfg) {
  cfg.validate();
  Dataset d;
  d.animal_id = cfg.animal_id;
  d.condition = cfg.condition;
  const MatrixRf natural = synth_images(sub_seed(seed, 0), cfg.stimuli, cfg);
  if (cfg.condition == StimulusCondition::Whitened) {
    d.images = whiten_images(natural);
  } else if (cfg.condition == StimulusCondition::LowDim8) {
    d.images = lowdim_images(natural, cfg.lowdim);
  } else {
    d.images = natural;
  }

  // The readout is a property of the population: offsets and gains are
  // calibrated once on the natural set and applied unchanged to whichever
  // set is shown, so transformed images can carry less response signal.
  const MatrixRf filters = synth_filters(sub_seed(seed, 1), cfg.neurons);
  const Eigen::RowVectorXd mean_image = natural.cast<double>().colwise().mean();
  const MatrixRd reference = (natural.cast<double>().rowwise() - mean_image) * filters.cast<double>().transpose();
  const MatrixRd drive = cfg.condition == StimulusCondition::Natural
                             ? reference
                             : MatrixRd((d.images.cast<double>().rowwise() - mean_image) * filters.cast<double>().transpose());

  Rng rng(sub_seed(seed, 2));
  d.responses.resize(cfg.stimuli, cfg.neurons);
  for (int n = 0; n < cfg.neurons; ++n) {
    const auto ref = reference.col(n);
    const double mu = ref.mean();
    const double sd = std::sqrt((ref.array() - mu).square().mean());
    const double gain = sd > 0 ? 1.0 / sd : 0.0;
    const double bias = rng.uniform(-0.5, 0.5);
    for (int s = 0; s < cfg.stimuli; ++s) {
      const double signal = gain * (drive(s, n) - mu) + bias;
      const double noisy = signal + rng.normal(0.0, 1.0 / cfg.snr);
      d.responses(s, n) = static_cast<float>(std::max(noisy, 0.0));
    }
  }
  if (cfg.mode == PairingMode::Unlinked) {
    const auto perm = Rng(sub_seed(seed, 3)).permutation(cfg.stimuli);
    MatrixRf shuffled(d.responses.rows(), d.responses.cols());
    for (int s = 0; s < cfg.stimuli; ++s) shuffled.row(s) = d.responses.row(perm[s]);
    d.responses = std::move(shuffled);
  }
  return d;
}

}  // namespace dina

#include "dina/interp_neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dina/errors.hpp"
#include "dina/parallel.hpp"
#include "dina/rng.hpp"
#include "dina/ssim.hpp"

namespace dina {

std::string to_string(AblationMode m) { return m == AblationMode::Sorted ? "sorted" : "random"; }

AblationMode parse_ablation_mode(const std::string& s) {
  if (s == "sorted") return AblationMode::Sorted;
  if (s == "random") return AblationMode::Random;
  throw ConfigError("unknown ablation mode '" + s + "' (sorted, random)");
}

void AblationConfig::validate() const {
  if (fractions.empty()) throw ConfigError("ablation: fraction list is empty");
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] > 0.0 && fractions[i] <= 1.0)) throw ConfigError("ablation: fractions must lie in (0, 1]");
    if (i > 0 && !(fractions[i] > fractions[i - 1])) throw ConfigError("ablation: fractions must increase strictly");
  }
  if (samplings < 1) throw ConfigError("ablation: samplings must be at least 1");
}

int kept_neurons(double fraction, int neurons) {
  const int k = static_cast<int>(std::ceil(fraction * neurons - 1e-9));
  return std::clamp(k, 1, neurons);
}

namespace {

std::vector<bool> mask_from_order(const std::vector<int>& order, int keep) {
  std::vector<bool> mask(order.size(), false);
  for (int i = 0; i < keep; ++i) mask[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
  return mask;
}

std::vector<int> magnitude_order(std::span<const float> magnitudes) {
  std::vector<int> order(magnitudes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(magnitudes[static_cast<std::size_t>(a)]) > std::abs(magnitudes[static_cast<std::size_t>(b)]);
  });
  return order;
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

std::vector<bool> top_magnitude_mask(std::span<const float> responses, int keep) {
  return mask_from_order(magnitude_order(responses), std::clamp(keep, 0, static_cast<int>(responses.size())));
}

AblationCurve ablation_curve(const DinaModel& model, const Dataset& data, const std::vector<int>& ids,
                             AblationMode mode, const AblationConfig& cfg, int threads) {
  cfg.validate();
  if (ids.empty()) throw InsufficientDataError("ablation: no stimuli");
  const int n = data.neurons();
  if (n != model.neurons()) throw DimensionError("ablation: dataset and model neuron counts differ");

  std::vector<int> global_order;
  if (mode == AblationMode::Sorted && cfg.global_ranking) {
    std::vector<float> mean_abs(static_cast<std::size_t>(n), 0.0f);
    for (int id : ids) {
      const auto r = data.response(id);
      for (int i = 0; i < n; ++i) mean_abs[static_cast<std::size_t>(i)] += std::abs(r[static_cast<std::size_t>(i)]);
    }
    global_order = magnitude_order(mean_abs);
  }

  const std::size_t nf = cfg.fractions.size();
  const int passes = mode == AblationMode::Random ? cfg.samplings : 1;
  // score[pass][stimulus][fraction]
  std::vector<double> score(static_cast<std::size_t>(passes) * ids.size() * nf);
  auto at = [&](int pass, std::size_t s, std::size_t f) -> double& {
    return score[(static_cast<std::size_t>(pass) * ids.size() + s) * nf + f];
  };
  parallel_for(static_cast<int>(ids.size()), threads, [&](int k) {
    const std::size_t s = static_cast<std::size_t>(k);
    const auto r = data.response(ids[s]);
    const FeatureMap full = model.neural_map(r);
    for (int pass = 0; pass < passes; ++pass) {
      std::vector<int> order;
      if (mode == AblationMode::Random) {
        Rng rng(sub_seed(sub_seed(cfg.seed, static_cast<std::uint64_t>(pass)), static_cast<std::uint64_t>(k)));
        order = rng.permutation(n);
      } else {
        order = cfg.global_ranking ? global_order : magnitude_order(r);
      }
      for (std::size_t f = 0; f < nf; ++f) {
        const int keep = kept_neurons(cfg.fractions[f], n);
        at(pass, s, f) = ssim(model.neural_map(r, mask_from_order(order, keep)), full);
      }
    }
  });

  AblationCurve curve;
  curve.mode = mode;
  curve.fractions = cfg.fractions;
  for (std::size_t f = 0; f < nf; ++f) {
    std::vector<double> samples;
    if (mode == AblationMode::Random) {
      for (int pass = 0; pass < passes; ++pass) {
        double m = 0.0;
        for (std::size_t s = 0; s < ids.size(); ++s) m += at(pass, s, f);
        samples.push_back(m / static_cast<double>(ids.size()));
      }
    } else {
      for (std::size_t s = 0; s < ids.size(); ++s) samples.push_back(at(0, s, f));
    }
    double m = 0.0, sd = 0.0;
    mean_std(samples, m, sd);
    curve.mean.push_back(m);
    curve.std.push_back(sd);
    if (curve.threshold_fraction < 0.0 && m >= cfg.threshold) curve.threshold_fraction = cfg.fractions[f];
  }
  return curve;
}

LogNormalFit fit_lognormal(std::span<const double> values) {
  std::vector<double> logs;
  logs.reserve(values.size());
  for (double v : values) {
    if (!(v > 0.0)) throw ContractError("fit_lognormal: non-positive value");
    logs.push_back(std::log(v));
  }
  return fit_lognormal_logs(logs);
}

LogNormalFit fit_lognormal_logs(std::span<const double> log_values) {
  if (log_values.empty()) throw InsufficientDataError("fit_lognormal: no values");
  LogNormalFit fit;
  fit.count = log_values.size();
  const double n = static_cast<double>(log_values.size());
  std::vector<double> logs(log_values.begin(), log_values.end());
  double raw_mean = 0.0;
  for (double l : logs) {
    if (!std::isfinite(l)) throw ContractError("fit_lognormal: non-finite log-value");
    raw_mean += std::exp(l);
  }
  raw_mean /= n;
  fit.mu = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
  double ss = 0.0, m2 = 0.0, m3 = 0.0;
  for (double l : logs) {
    ss += (l - fit.mu) * (l - fit.mu);
    const double d = std::exp(l) - raw_mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  fit.sigma = std::sqrt(ss / n);
  m2 /= n;
  m3 /= n;
  fit.skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;

  if (fit.sigma > 0.0) {
    std::sort(logs.begin(), logs.end());
    const double scale = 1.0 / (fit.sigma * std::sqrt(2.0));
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const double cdf = 0.5 * std::erfc(-(logs[i] - fit.mu) * scale);
      fit.ks = std::max({fit.ks, (static_cast<double>(i) + 1.0) / n - cdf, cdf - static_cast<double>(i) / n});
    }
  }
  return fit;
}

AttentionStats attention_distribution(const DinaModel& model, const Dataset& data, const std::vector<int>& ids,
                                      bool average_first, int threads) {
  if (ids.empty()) throw InsufficientDataError("attention_distribution: no stimuli");
  const int n = model.neurons();
  if (data.neurons() != n) throw DimensionError("attention_distribution: dataset and model neuron counts differ");
  std::vector<MatrixRd> mats(ids.size());
  parallel_for(static_cast<int>(ids.size()), threads, [&](int k) {
    NoGradGuard guard;
    PopulationState<float> state;
    model.neural().forward(data.response(ids[static_cast<std::size_t>(k)]), &state);
    // Log-softmax recomputed in double: peaked rows underflow to exact zeros.
    const auto& tower = model.neural();
    const MatrixRd e = state.embedded.matrix().template cast<double>();
    const MatrixRd q = e * tower.query_weight().matrix().template cast<double>();
    const MatrixRd kk = e * tower.key_weight().matrix().template cast<double>();
    MatrixRd logits = q * kk.transpose() / std::sqrt(static_cast<double>(e.cols()));
    logits.colwise() -= logits.rowwise().maxCoeff();
    const Eigen::VectorXd lse = logits.array().exp().rowwise().sum().log();
    logits.colwise() -= lse;
    mats[static_cast<std::size_t>(k)] = std::move(logits);
  });
  if (average_first) {
    // log of the mean weight, via log-sum-exp across stimuli
    MatrixRd hi = mats.front();
    for (const auto& m : mats) hi = hi.cwiseMax(m);
    MatrixRd acc = MatrixRd::Zero(n, n);
    for (const auto& m : mats) acc.array() += (m - hi).array().exp();
    MatrixRd avg = hi.array() + (acc.array() / static_cast<double>(ids.size())).log();
    mats.assign(1, std::move(avg));
  }
  AttentionStats st;
  const std::size_t pooled = mats.size() * static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1);
  st.weights.reserve(pooled);
  st.log_weights.reserve(pooled);
  for (const auto& m : mats) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        st.log_weights.push_back(m(i, j));
        st.weights.push_back(std::exp(m(i, j)));
      }
    }
  }
  st.fit = fit_lognormal_logs(st.log_weights);
  return st;
}

}  // namespace dina

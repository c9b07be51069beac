#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dina/dataset.hpp"
#include "dina/model.hpp"

namespace dina {

enum class AblationMode { Sorted, Random };

std::string to_string(AblationMode m);
AblationMode parse_ablation_mode(const std::string& s);

struct AblationConfig {
  std::vector<double> fractions{0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0};
  int samplings = 10;          // Random mode only
  bool global_ranking = false; // Sorted mode: rank by mean |r| over the stimuli instead of per stimulus
  double threshold = 0.9;
  std::uint64_t seed = 7;

  void validate() const;
};

/// Number of neurons kept at fraction f: ceil(f N), at least one.
int kept_neurons(double fraction, int neurons);

/// Top-k neurons by |r| (ties to the lower index) as a keep mask.
std::vector<bool> top_magnitude_mask(std::span<const float> responses, int keep);

struct AblationCurve {
  AblationMode mode = AblationMode::Sorted;
  std::vector<double> fractions;
  std::vector<double> mean;  // ssim against the full-population map, per fraction
  std::vector<double> std;   // across samplings (Random); across stimuli (Sorted)
  double threshold_fraction = -1.0;  // smallest fraction with mean >= threshold; -1 if none
};

AblationCurve ablation_curve(const DinaModel& model, const Dataset& data, const std::vector<int>& ids,
                             AblationMode mode, const AblationConfig& cfg = {}, int threads = 1);

struct LogNormalFit {
  double mu = 0.0;
  double sigma = 0.0;     // maximum-likelihood (1/n) std of log-values
  double skewness = 0.0;  // of the raw values
  double ks = 0.0;        // Kolmogorov-Smirnov distance of the logs to N(mu, sigma)
  std::size_t count = 0;
};

/// Throws ContractError on any non-positive value.
LogNormalFit fit_lognormal(std::span<const double> values);
/// Same fit from log-values; raw values for the skewness are exp(log).
LogNormalFit fit_lognormal_logs(std::span<const double> log_values);

struct AttentionStats {
  std::vector<double> weights;      // pooled off-diagonal weights
  std::vector<double> log_weights;  // their logs, from a log-domain softmax
  LogNormalFit fit;
};

/// Off-diagonal population-attention weights over the given stimuli. With
/// `average_first`, the N x N matrices are averaged across stimuli before pooling.
AttentionStats attention_distribution(const DinaModel& model, const Dataset& data, const std::vector<int>& ids,
                                      bool average_first = false, int threads = 1);

}  // namespace dina

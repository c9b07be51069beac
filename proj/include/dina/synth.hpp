#pragma once

#include <cstdint>

#include "dina/dataset.hpp"

namespace dina {

enum class PairingMode { Linked, Unlinked };

std::string to_string(PairingMode m);
PairingMode parse_pairing(const std::string& s);

struct SynthConfig {
  int stimuli = 640;
  int neurons = 256;
  PairingMode mode = PairingMode::Linked;
  StimulusCondition condition = StimulusCondition::Natural;
  double snr = 4.0;       // signal sd / noise sd of each neuron's drive
  int min_patches = 2;    // Gabor patches per image
  int max_patches = 5;
  int min_bars = 1;       // oriented bars per image
  int max_bars = 3;
  int lowdim = 8;         // components kept for the low-dimensional condition
  std::string animal_id = "synthetic";

  void validate() const;
};

/// Images only: mid-gray background with random Gabor patches and bars, in [0, 1].
MatrixRf synth_images(std::uint64_t seed, int stimuli, const SynthConfig& cfg = {});

/// Receptive-field filters of the synthetic population, N x (68*270): each
/// neuron reads a localized Gabor-windowed patch of the image.
MatrixRf synth_filters(std::uint64_t seed, int neurons);

/// Images (transformed per `condition`) with rectified linear readout
/// responses plus Gaussian noise. Unlinked mode permutes the response rows
/// so pairs carry no shared structure.
Dataset synth_dataset(std::uint64_t seed, const SynthConfig& cfg);

}  // namespace dina

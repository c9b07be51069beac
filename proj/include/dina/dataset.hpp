#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dina/types.hpp"

namespace dina {

enum class StimulusCondition : std::uint8_t { Natural = 0, Whitened = 1, LowDim8 = 2 };

std::string to_string(StimulusCondition c);
StimulusCondition parse_condition(const std::string& s);

/// Paired stimuli and stimulus-averaged population responses.
struct Dataset {
  MatrixRf images;     // S x (68*270), one flattened image per row
  MatrixRf responses;  // S x N
  std::string animal_id = "synthetic";
  StimulusCondition condition = StimulusCondition::Natural;

  int stimuli() const { return static_cast<int>(images.rows()); }
  int neurons() const { return static_cast<int>(responses.cols()); }

  StimulusImage image(int s) const {
    return Eigen::Map<const StimulusImage>(images.row(s).data(), kImageHeight, kImageWidth);
  }
  std::span<const float> response(int s) const {
    return {responses.row(s).data(), static_cast<std::size_t>(responses.cols())};
  }

  /// Throws DataError on inconsistent extents or non-finite values.
  void validate() const;
};

inline constexpr std::uint16_t kDatasetVersion = 1;

/// Header fields of a dataset file, read without the payload.
struct DatasetInfo {
  std::uint16_t version = 0;
  std::uint32_t stimuli = 0;
  std::uint32_t neurons = 0;
  std::uint16_t height = 0;
  std::uint16_t width = 0;
  std::string animal_id;
  StimulusCondition condition = StimulusCondition::Natural;
};

std::string encode_dataset(const Dataset& d);
/// `clamped`, when given, reports whether any image value was pulled into [0, 1].
Dataset decode_dataset(std::string_view bytes, bool* clamped = nullptr);
DatasetInfo decode_dataset_info(std::string_view bytes);

void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path, bool* clamped = nullptr);
DatasetInfo inspect_dataset(const std::filesystem::path& path);

/// Plain-text import for tiny fixtures: one image per line (68*270 values)
/// and one response vector per line, comma separated.
Dataset load_dataset_csv(const std::filesystem::path& images_csv, const std::filesystem::path& responses_csv,
                         bool* clamped = nullptr);

}  // namespace dina

#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dina/types.hpp"

namespace dina {

enum class DeltaMetric { Cos, Ssim };

std::string to_string(DeltaMetric m);
DeltaMetric parse_delta_metric(const std::string& s);

struct OcclusionConfig {
  double sigma = 4.0;   // Gaussian occluder width, px
  int stride = 2;       // center grid spacing, px
  double alpha = 1.0;   // occlusion strength
  int repeats = 5;
  DeltaMetric metric = DeltaMetric::Ssim;
  double eps = 1e-8;
  /// Repeat passes are skipped when the feature function is deterministic;
  /// set to false for stochastic models so every repeat is evaluated.
  bool deterministic = true;

  /// Truncated window edge, 6 sigma + 1 rounded to the next odd integer.
  int window() const;
  void validate() const;
};

/// Peak-normalized Gaussian truncated to the occluder window and clipped at
/// the image borders. values(i, j) belongs to pixel (top + i, left + j).
struct GaussianMask {
  int top = 0;
  int left = 0;
  MatrixRd values;
};

GaussianMask gaussian_mask(int cy, int cx, double sigma, int height = kImageHeight, int width = kImageWidth);

/// (1 - alpha G) I + alpha G mean_G(I), mean taken over the mask support.
StimulusImage occlude(const StimulusImage& img, int cy, int cx, const OcclusionConfig& cfg);

struct RfImportanceMap {
  MatrixRd values;      // 68 x 270, min-max normalized
  MatrixRd raw;         // accumulated map before normalization
  DeltaMetric metric = DeltaMetric::Ssim;
  int repeats = 0;
  bool degenerate = false;  // raw map constant; values left at zero
  bool untrained = false;   // set by callers that know the model is untrained
};

using FeatureFunction = std::function<FeatureMap(const StimulusImage&)>;

/// Occlusion sensitivity sweep over a stride grid of centers. Each center's
/// perturbation Delta is spread back with the occluder Gaussian:
/// R = sum_k Delta_k G_k / (sum_k G_k + eps). `feature` must be safe to call
/// concurrently when threads > 1.
RfImportanceMap rf_map(const StimulusImage& img, const FeatureFunction& feature, const OcclusionConfig& cfg,
                       int threads = 1);

// ---- blobs and skeleton descriptors ---------------------------------------

struct BlobConfig {
  double tau = 0.6;           // threshold on the normalized RF map
  int min_area = 20;          // px
  int min_segment_pixels = 3; // shorter skeleton segments are ignored
  bool axial = true;          // double orientations before the resultant
  double alpha_sti = 1.0;
  double eps = 1e-8;

  void validate() const;
};

using Pixel = std::pair<int, int>;  // (row, col)

struct Segment {
  std::vector<Pixel> pixels;  // ordered along the skeleton
  double orientation = 0.0;   // atan2(dy, dx) from first to last pixel
  double path_length = 0.0;   // summed Euclidean steps
  double tortuosity = 1.0;
};

struct Blob {
  std::vector<Pixel> pixels;
  int area = 0;
  double centroid_row = 0.0;
  double centroid_col = 0.0;
  std::vector<Segment> segments;
  double coherence = 0.0;
  double tortuosity = 1.0;
  double texture = 0.0;
  double sti = 0.0;
  bool valid = false;  // false when the blob has no usable edge segments
};

/// 8-connected components of values > tau, smallest ones dropped. Components
/// are ordered by their first pixel in raster order.
std::vector<Blob> extract_blobs(const MatrixRd& rf, const BlobConfig& cfg = {});
std::vector<Blob> extract_blobs(const RfImportanceMap& rf, const BlobConfig& cfg = {});

MatrixRd sobel_magnitude(const MatrixRd& img);
/// Otsu threshold over 256 bins spanning [min, max] of the values.
double otsu_threshold(const std::vector<double>& values);
/// Zhang-Suen thinning followed by removal of redundant staircase corners.
/// Nonzero entries are foreground.
Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> thin(
    const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& mask);
/// Splits a 1-px skeleton into segments at endpoints and branch points.
/// Closed loops without such points are cut into two halves.
std::vector<Segment> skeleton_segments(
    const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& skeleton, double eps = 1e-8);

Segment make_segment(std::vector<Pixel> pixels, double eps = 1e-8);
/// Mean resultant length of the orientations (doubled first when axial).
double orientation_coherence(const std::vector<double>& orientations, bool axial = true);

struct ShapeTexture {
  double texture;
  double sti;
};

/// Tex = 1 - exp(-alpha (T - 1)), STI = R - Tex. T < 1 is a contract error.
ShapeTexture shape_texture_index(double coherence, double tortuosity, double alpha = 1.0);

/// Edge skeleton descriptors of one blob on its stimulus; fills segments,
/// coherence, tortuosity, texture, sti and valid.
void describe_blob(Blob& blob, const StimulusImage& img, const BlobConfig& cfg = {});

// ---- report ---------------------------------------------------------------

struct BlobRecord {
  int image_id = 0;
  int blob_id = 0;
  Blob blob;
};

struct StiReport {
  std::vector<BlobRecord> records;        // valid blobs only
  std::vector<int> blobs_per_image;       // all blobs, valid or not
  std::vector<int> excluded_per_image;    // blobs without usable edges
  std::vector<int> histogram;             // 20 bins of width 0.1 over (-1, 1]
  double median_sti = 0.0;
  double mean_area = 0.0;
  bool empty = true;
};

inline constexpr int kStiBins = 20;
/// Bin k covers (-1 + 0.1 k, -1 + 0.1 (k + 1)].
int sti_bin(double sti);

/// `blobs[i]` are the described blobs of image i.
StiReport sti_report(const std::vector<std::vector<Blob>>& blobs, const std::vector<int>& image_ids);

}  // namespace dina

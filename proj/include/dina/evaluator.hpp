#pragma once

#include <cstdint>
#include <vector>

#include "dina/dataset.hpp"
#include "dina/model.hpp"
#include "dina/pca.hpp"
#include "dina/types.hpp"

namespace dina {

/// Image- and neural-tower maps for a list of stimulus ids, in id order.
struct MapSet {
  std::vector<int> ids;
  std::vector<FeatureMap> image;
  std::vector<FeatureMap> neural;
};

MapSet compute_maps(const DinaModel& model, const Dataset& data, const std::vector<int>& ids, int threads = 1);

/// Rows are neural queries, columns the image gallery; both axes share `ids`.
/// Entries touching a zero-norm map hold 0 and are flagged.
struct SimilarityMatrix {
  MatrixRd values;
  std::vector<int> ids;
  std::vector<std::uint8_t> zero_query;    // per row
  std::vector<std::uint8_t> zero_gallery;  // per column

  int size() const { return static_cast<int>(ids.size()); }
  bool flagged(int i, int j) const { return zero_query[static_cast<std::size_t>(i)] || zero_gallery[static_cast<std::size_t>(j)]; }
};

SimilarityMatrix similarity_matrix(const std::vector<FeatureMap>& neural, const std::vector<FeatureMap>& image,
                                   const std::vector<int>& ids);
SimilarityMatrix similarity_matrix(const MapSet& maps);

/// Mean matched (diagonal) minus mean mismatched similarity over unflagged entries.
double diagonal_advantage(const SimilarityMatrix& sim);

struct RetrievalReport {
  std::vector<int> ks;
  std::vector<double> accuracy;  // per k
  std::vector<int> ranks;        // 1-based rank of the matching image per query
  double top1 = 0.0, top5 = 0.0, top10 = 0.0;

  double at(int k) const;
};

/// Query i hits at k when its own column ranks within the k largest entries
/// of row i. Equal scores rank the lower column index first.
RetrievalReport topk_retrieval(const SimilarityMatrix& sim, const std::vector<int>& ks = {1, 5, 10});

struct CorrespondenceStats {
  std::vector<double> ssim;  // matched pairs, per query
  double mean = 0.0, std = 0.0;
  // neural map i against image map i+1 (cyclic)
  double mismatched_mean = 0.0, mismatched_std = 0.0;
};

CorrespondenceStats map_correspondence_stats(const MapSet& maps);

struct SpectrumReport {
  VarianceSpectrum images, image_maps, neural_maps;
};

SpectrumReport spectrum_report(const MatrixRf& images, const std::vector<FeatureMap>& image_maps,
                               const std::vector<FeatureMap>& neural_maps);

/// Stacks maps as flattened rows.
MatrixRd stack_maps(const std::vector<FeatureMap>& maps);

}  // namespace dina

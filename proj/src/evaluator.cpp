#include "dina/evaluator.hpp"

#include <algorithm>
#include <cmath>

#include "dina/errors.hpp"
#include "dina/parallel.hpp"
#include "dina/ssim.hpp"

namespace dina {

MapSet compute_maps(const DinaModel& model, const Dataset& data, const std::vector<int>& ids, int threads) {
  if (data.neurons() != model.neurons()) {
    throw DimensionError("dataset has " + std::to_string(data.neurons()) + " neurons, model expects " +
                         std::to_string(model.neurons()));
  }
  MapSet out;
  out.ids = ids;
  out.image.resize(ids.size());
  out.neural.resize(ids.size());
  parallel_for(static_cast<int>(ids.size()), threads, [&](int k) {
    const int id = ids[static_cast<std::size_t>(k)];
    out.image[static_cast<std::size_t>(k)] = model.image_map(data.image(id));
    out.neural[static_cast<std::size_t>(k)] = model.neural_map(data.response(id));
  });
  return out;
}

SimilarityMatrix similarity_matrix(const std::vector<FeatureMap>& neural, const std::vector<FeatureMap>& image,
                                   const std::vector<int>& ids) {
  if (neural.size() != image.size() || neural.size() != ids.size()) {
    throw DimensionError("similarity_matrix: query, gallery and id counts differ");
  }
  std::vector<int> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ContractError("similarity_matrix: duplicate stimulus id");
  }
  const MatrixRd q = stack_maps(neural), g = stack_maps(image);
  const Eigen::VectorXd qn = q.rowwise().norm(), gn = g.rowwise().norm();
  SimilarityMatrix sim;
  sim.ids = ids;
  const auto n = static_cast<Eigen::Index>(ids.size());
  sim.zero_query.resize(ids.size());
  sim.zero_gallery.resize(ids.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    sim.zero_query[static_cast<std::size_t>(i)] = !(qn(i) > 0.0);
    sim.zero_gallery[static_cast<std::size_t>(i)] = !(gn(i) > 0.0);
  }
  sim.values = q * g.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      sim.values(i, j) = sim.flagged(static_cast<int>(i), static_cast<int>(j))
                             ? 0.0
                             : std::clamp(sim.values(i, j) / (qn(i) * gn(j)), -1.0, 1.0);
    }
  }
  return sim;
}

SimilarityMatrix similarity_matrix(const MapSet& maps) { return similarity_matrix(maps.neural, maps.image, maps.ids); }

double diagonal_advantage(const SimilarityMatrix& sim) {
  double diag = 0.0, off = 0.0;
  long nd = 0, no = 0;
  for (int i = 0; i < sim.size(); ++i) {
    for (int j = 0; j < sim.size(); ++j) {
      if (sim.flagged(i, j)) continue;
      if (i == j) {
        diag += sim.values(i, j);
        ++nd;
      } else {
        off += sim.values(i, j);
        ++no;
      }
    }
  }
  if (nd == 0 || no == 0) return 0.0;
  return diag / static_cast<double>(nd) - off / static_cast<double>(no);
}

double RetrievalReport::at(int k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return accuracy[i];
  }
  throw ConfigError("retrieval report has no top-" + std::to_string(k) + " entry");
}

RetrievalReport topk_retrieval(const SimilarityMatrix& sim, const std::vector<int>& ks) {
  const int n = sim.size();
  if (sim.values.rows() != n || sim.values.cols() != n) throw DimensionError("topk_retrieval: matrix must be square");
  if (n == 0) throw InsufficientDataError("topk_retrieval: empty matrix");
  for (int k : ks) {
    if (k < 1 || k > n) {
      throw ConfigError("topk_retrieval: k=" + std::to_string(k) + " outside 1.." + std::to_string(n));
    }
  }
  RetrievalReport rep;
  rep.ks = ks;
  rep.ranks.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double own = sim.values(i, i);
    int rank = 1;
    for (int j = 0; j < n; ++j) {
      const double s = sim.values(i, j);
      if (s > own || (s == own && j < i)) ++rank;
    }
    rep.ranks[static_cast<std::size_t>(i)] = rank;
  }
  for (int k : ks) {
    const auto hits = std::count_if(rep.ranks.begin(), rep.ranks.end(), [k](int r) { return r <= k; });
    rep.accuracy.push_back(static_cast<double>(hits) / n);
  }
  auto pick = [&](int k) {
    const auto it = std::find(ks.begin(), ks.end(), k);
    return it == ks.end() ? 0.0 : rep.accuracy[static_cast<std::size_t>(it - ks.begin())];
  };
  rep.top1 = pick(1);
  rep.top5 = pick(5);
  rep.top10 = pick(10);
  return rep;
}

namespace {

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double x : v) sd += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(sd / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

CorrespondenceStats map_correspondence_stats(const MapSet& maps) {
  if (maps.image.size() != maps.neural.size()) throw DimensionError("map_correspondence_stats: unpaired maps");
  CorrespondenceStats st;
  const std::size_t n = maps.image.size();
  std::vector<double> mismatched;
  for (std::size_t i = 0; i < n; ++i) {
    st.ssim.push_back(ssim(maps.neural[i], maps.image[i]));
    if (n > 1) mismatched.push_back(ssim(maps.neural[i], maps.image[(i + 1) % n]));
  }
  mean_std(st.ssim, st.mean, st.std);
  mean_std(mismatched, st.mismatched_mean, st.mismatched_std);
  return st;
}

MatrixRd stack_maps(const std::vector<FeatureMap>& maps) {
  if (maps.empty()) return MatrixRd(0, 0);
  const Eigen::Index p = maps.front().size();
  MatrixRd out(static_cast<Eigen::Index>(maps.size()), p);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (maps[i].size() != p) throw DimensionError("stack_maps: maps differ in size");
    out.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXf>(maps[i].data(), p).cast<double>();
  }
  return out;
}

SpectrumReport spectrum_report(const MatrixRf& images, const std::vector<FeatureMap>& image_maps,
                               const std::vector<FeatureMap>& neural_maps) {
  return {pca_variance_spectrum(images), pca_variance_spectrum(stack_maps(image_maps)),
          pca_variance_spectrum(stack_maps(neural_maps))};
}

}  // namespace dina

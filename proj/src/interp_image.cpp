#include "dina/interp_image.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <set>

#include "dina/errors.hpp"
#include "dina/parallel.hpp"
#include "dina/ssim.hpp"

namespace dina {

using MaskU8 = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::string to_string(DeltaMetric m) { return m == DeltaMetric::Cos ? "cos" : "ssim"; }

DeltaMetric parse_delta_metric(const std::string& s) {
  if (s == "cos") return DeltaMetric::Cos;
  if (s == "ssim") return DeltaMetric::Ssim;
  throw ConfigError("unknown occlusion metric '" + s + "' (cos, ssim)");
}

int OcclusionConfig::window() const { return 2 * static_cast<int>(std::ceil(3.0 * sigma - 1e-9)) + 1; }

void OcclusionConfig::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("occlusion: sigma must be positive");
  if (stride < 1) throw ConfigError("occlusion: stride must be at least 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("occlusion: alpha must be in (0, 1]");
  if (repeats < 1) throw ConfigError("occlusion: repeats must be at least 1");
  if (!(eps > 0.0)) throw ConfigError("occlusion: eps must be positive");
}

GaussianMask gaussian_mask(int cy, int cx, double sigma, int height, int width) {
  if (!(sigma > 0.0)) throw ConfigError("gaussian_mask: sigma must be positive");
  const int half = static_cast<int>(std::ceil(3.0 * sigma - 1e-9));
  GaussianMask m;
  m.top = std::max(0, cy - half);
  m.left = std::max(0, cx - half);
  const int bottom = std::min(height - 1, cy + half);
  const int right = std::min(width - 1, cx + half);
  m.values.resize(std::max(0, bottom - m.top + 1), std::max(0, right - m.left + 1));
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int i = 0; i < m.values.rows(); ++i) {
    for (int j = 0; j < m.values.cols(); ++j) {
      const double dy = m.top + i - cy, dx = m.left + j - cx;
      m.values(i, j) = std::exp(-(dy * dy + dx * dx) * inv);
    }
  }
  return m;
}

StimulusImage occlude(const StimulusImage& img, int cy, int cx, const OcclusionConfig& cfg) {
  const GaussianMask g = gaussian_mask(cy, cx, cfg.sigma, static_cast<int>(img.rows()), static_cast<int>(img.cols()));
  StimulusImage out = img;
  if (g.values.size() == 0) return out;
  const auto patch = img.block(g.top, g.left, g.values.rows(), g.values.cols()).cast<double>();
  const double mean = patch.mean();
  const Eigen::ArrayXXd w = cfg.alpha * g.values.array();
  out.block(g.top, g.left, g.values.rows(), g.values.cols()) =
      ((1.0 - w) * patch.array() + w * mean).cast<float>().matrix();
  return out;
}

RfImportanceMap rf_map(const StimulusImage& img, const FeatureFunction& feature, const OcclusionConfig& cfg,
                       int threads) {
  cfg.validate();
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  std::vector<std::pair<int, int>> centers;
  for (int y = 0; y < h; y += cfg.stride)
    for (int x = 0; x < w; x += cfg.stride) centers.emplace_back(y, x);

  const FeatureMap base = feature(img);
  const int passes = cfg.deterministic ? 1 : cfg.repeats;
  MatrixRd total = MatrixRd::Zero(h, w);
  for (int rep = 0; rep < passes; ++rep) {
    std::vector<double> delta(centers.size());
    parallel_for(static_cast<int>(centers.size()), threads, [&](int k) {
      const auto [cy, cx] = centers[static_cast<std::size_t>(k)];
      const FeatureMap f = feature(occlude(img, cy, cx, cfg));
      delta[static_cast<std::size_t>(k)] =
          cfg.metric == DeltaMetric::Cos ? 1.0 - cosine_similarity(base, f) : 1.0 - ssim(base, f);
    });
    MatrixRd num = MatrixRd::Zero(h, w), den = MatrixRd::Zero(h, w);
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const GaussianMask g = gaussian_mask(centers[k].first, centers[k].second, cfg.sigma, h, w);
      num.block(g.top, g.left, g.values.rows(), g.values.cols()) += delta[k] * g.values;
      den.block(g.top, g.left, g.values.rows(), g.values.cols()) += g.values;
    }
    total += (num.array() / (den.array() + cfg.eps)).matrix();
  }
  RfImportanceMap out;
  out.metric = cfg.metric;
  out.repeats = cfg.repeats;
  out.raw = total / static_cast<double>(passes);
  const double lo = out.raw.minCoeff(), hi = out.raw.maxCoeff();
  if (!(hi - lo > 1e-12 * std::max(1.0, std::abs(hi)))) {
    out.degenerate = true;
    out.values = MatrixRd::Zero(h, w);
  } else {
    out.values = (out.raw.array() - lo) / (hi - lo);
  }
  return out;
}

// ---- blobs ---------------------------------------------------------------

void BlobConfig::validate() const {
  if (!(tau >= 0.0 && tau < 1.0)) throw ConfigError("blobs: tau must be in [0, 1)");
  if (min_area < 1) throw ConfigError("blobs: min_area must be at least 1");
  if (min_segment_pixels < 2) throw ConfigError("blobs: min_segment_pixels must be at least 2");
  if (!(alpha_sti > 0.0)) throw ConfigError("blobs: alpha_sti must be positive");
  if (!(eps > 0.0)) throw ConfigError("blobs: eps must be positive");
}

namespace {

constexpr int kDr[8] = {-1, -1, 0, 1, 1, 1, 0, -1};  // N, NE, E, SE, S, SW, W, NW
constexpr int kDc[8] = {0, 1, 1, 1, 0, -1, -1, -1};

}  // namespace

std::vector<Blob> extract_blobs(const MatrixRd& rf, const BlobConfig& cfg) {
  cfg.validate();
  const int h = static_cast<int>(rf.rows()), w = static_cast<int>(rf.cols());
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> seen =
      Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(h, w);
  std::vector<Blob> blobs;
  std::vector<Pixel> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (seen(r, c) || !(rf(r, c) > cfg.tau)) continue;
      Blob b;
      stack.assign(1, {r, c});
      seen(r, c) = 1;
      while (!stack.empty()) {
        const Pixel p = stack.back();
        stack.pop_back();
        b.pixels.push_back(p);
        for (int k = 0; k < 8; ++k) {
          const int rr = p.first + kDr[k], cc = p.second + kDc[k];
          if (rr < 0 || rr >= h || cc < 0 || cc >= w || seen(rr, cc) || !(rf(rr, cc) > cfg.tau)) continue;
          seen(rr, cc) = 1;
          stack.emplace_back(rr, cc);
        }
      }
      b.area = static_cast<int>(b.pixels.size());
      if (b.area < cfg.min_area) continue;
      std::sort(b.pixels.begin(), b.pixels.end());
      double sr = 0.0, sc = 0.0;
      for (const auto& [pr, pc] : b.pixels) {
        sr += pr;
        sc += pc;
      }
      b.centroid_row = sr / b.area;
      b.centroid_col = sc / b.area;
      blobs.push_back(std::move(b));
    }
  }
  return blobs;
}

std::vector<Blob> extract_blobs(const RfImportanceMap& rf, const BlobConfig& cfg) {
  if (rf.degenerate) return {};
  return extract_blobs(rf.values, cfg);
}

MatrixRd sobel_magnitude(const MatrixRd& img) {
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  auto at = [&](int r, int c) { return img(std::clamp(r, 0, h - 1), std::clamp(c, 0, w - 1)); };
  MatrixRd out(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double gx = (at(r - 1, c + 1) + 2 * at(r, c + 1) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2 * at(r, c - 1) + at(r + 1, c - 1));
      const double gy = (at(r + 1, c - 1) + 2 * at(r + 1, c) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2 * at(r - 1, c) + at(r - 1, c + 1));
      out(r, c) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

double otsu_threshold(const std::vector<double>& values) {
  if (values.empty()) throw InsufficientDataError("otsu_threshold: no values");
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn, hi = *mx;
  if (!(hi > lo)) return hi;
  constexpr int kBins = 256;
  std::vector<double> hist(kBins, 0.0);
  const double width = (hi - lo) / kBins;
  for (double v : values) hist[std::min(kBins - 1, static_cast<int>((v - lo) / width))] += 1.0;
  const double n = static_cast<double>(values.size());
  double total_mean = 0.0;
  for (int k = 0; k < kBins; ++k) total_mean += k * hist[k];
  total_mean /= n;
  double w0 = 0.0, m0 = 0.0, best = -1.0;
  int best_k = 0;
  for (int k = 0; k < kBins - 1; ++k) {
    w0 += hist[k] / n;
    m0 += k * hist[k] / n;
    const double w1 = 1.0 - w0;
    if (w0 <= 0.0 || w1 <= 0.0) continue;
    const double mu0 = m0 / w0, mu1 = (total_mean - m0) / w1;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_k = k;
    }
  }
  return lo + (best_k + 1) * width;
}

MaskU8 thin(const MaskU8& mask) {
  const int h = static_cast<int>(mask.rows()), w = static_cast<int>(mask.cols());
  MaskU8 m = MaskU8::Zero(h + 2, w + 2);
  m.block(1, 1, h, w) = mask.unaryExpr([](std::uint8_t v) -> std::uint8_t { return v ? 1 : 0; });
  auto nb = [&](int r, int c, int k) { return m(r + kDr[k], c + kDc[k]); };

  std::vector<Pixel> remove;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      remove.clear();
      for (int r = 1; r <= h; ++r) {
        for (int c = 1; c <= w; ++c) {
          if (!m(r, c)) continue;
          int count = 0, transitions = 0;
          for (int k = 0; k < 8; ++k) {
            count += nb(r, c, k);
            transitions += (!nb(r, c, k) && nb(r, c, (k + 1) % 8));
          }
          if (count < 2 || count > 6 || transitions != 1) continue;
          const int n = nb(r, c, 0), e = nb(r, c, 2), s = nb(r, c, 4), wv = nb(r, c, 6);
          const bool ok = pass == 0 ? (n * e * s == 0 && e * s * wv == 0) : (n * e * wv == 0 && n * s * wv == 0);
          if (ok) remove.emplace_back(r, c);
        }
      }
      for (const auto& [r, c] : remove) m(r, c) = 0;
      changed = changed || !remove.empty();
    }
  }

  // Drop corner pixels of 4-connected staircases: a pixel with two
  // perpendicular 4-neighbors whose neighbor set stays 8-connected without it.
  for (int r = 1; r <= h; ++r) {
    for (int c = 1; c <= w; ++c) {
      if (!m(r, c)) continue;
      const int n = nb(r, c, 0), e = nb(r, c, 2), s = nb(r, c, 4), wv = nb(r, c, 6);
      if (!((n || s) && (e || wv))) continue;
      std::vector<int> ring;
      for (int k = 0; k < 8; ++k) {
        if (nb(r, c, k)) ring.push_back(k);
      }
      std::vector<int> label(ring.size(), -1);
      int components = 0;
      for (std::size_t i = 0; i < ring.size(); ++i) {
        if (label[i] >= 0) continue;
        label[i] = components;
        std::vector<std::size_t> todo{i};
        while (!todo.empty()) {
          const std::size_t a = todo.back();
          todo.pop_back();
          for (std::size_t b = 0; b < ring.size(); ++b) {
            if (label[b] >= 0) continue;
            const int dr = std::abs(kDr[ring[a]] - kDr[ring[b]]), dc = std::abs(kDc[ring[a]] - kDc[ring[b]]);
            if (dr <= 1 && dc <= 1) {
              label[b] = components;
              todo.push_back(b);
            }
          }
        }
        ++components;
      }
      if (components == 1) m(r, c) = 0;
    }
  }
  return m.block(1, 1, h, w);
}

Segment make_segment(std::vector<Pixel> pixels, double eps) {
  Segment s;
  s.pixels = std::move(pixels);
  if (s.pixels.empty()) return s;
  for (std::size_t i = 1; i < s.pixels.size(); ++i) {
    const double dr = s.pixels[i].first - s.pixels[i - 1].first;
    const double dc = s.pixels[i].second - s.pixels[i - 1].second;
    s.path_length += std::sqrt(dr * dr + dc * dc);
  }
  const double dy = s.pixels.back().first - s.pixels.front().first;
  const double dx = s.pixels.back().second - s.pixels.front().second;
  s.orientation = std::atan2(dy, dx);
  s.tortuosity = s.path_length / (std::sqrt(dx * dx + dy * dy) + eps);
  if (s.pixels.size() < 2) s.tortuosity = 1.0;
  return s;
}

std::vector<Segment> skeleton_segments(const MaskU8& skeleton, double eps) {
  const int h = static_cast<int>(skeleton.rows()), w = static_cast<int>(skeleton.cols());
  auto on = [&](int r, int c) { return r >= 0 && r < h && c >= 0 && c < w && skeleton(r, c) != 0; };
  auto index = [&](int r, int c) { return static_cast<long>(r) * w + c; };
  auto neighbors = [&](int r, int c) {
    std::vector<Pixel> out;
    for (int k = 0; k < 8; ++k) {
      if (on(r + kDr[k], c + kDc[k])) out.emplace_back(r + kDr[k], c + kDc[k]);
    }
    return out;
  };

  std::set<std::pair<long, long>> used;  // undirected edges already walked
  auto edge = [&](const Pixel& a, const Pixel& b) {
    const long ia = index(a.first, a.second), ib = index(b.first, b.second);
    return std::make_pair(std::min(ia, ib), std::max(ia, ib));
  };
  std::vector<std::uint8_t> visited(static_cast<std::size_t>(h) * w, 0);
  std::vector<Segment> segments;

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!on(r, c)) continue;
      const auto start_nb = neighbors(r, c);
      if (start_nb.size() == 2) continue;  // interior pixels are reached from nodes
      visited[static_cast<std::size_t>(index(r, c))] = 1;
      for (const Pixel& first : start_nb) {
        if (used.count(edge({r, c}, first))) continue;
        std::vector<Pixel> path{{r, c}, first};
        used.insert(edge({r, c}, first));
        Pixel prev{r, c}, cur = first;
        while (true) {
          visited[static_cast<std::size_t>(index(cur.first, cur.second))] = 1;
          const auto nb = neighbors(cur.first, cur.second);
          if (nb.size() != 2) break;
          const Pixel next = nb[0] == prev ? nb[1] : nb[0];
          if (used.count(edge(cur, next))) break;
          used.insert(edge(cur, next));
          path.push_back(next);
          prev = cur;
          cur = next;
        }
        segments.push_back(make_segment(std::move(path), eps));
      }
    }
  }

  // Closed loops made only of degree-2 pixels.
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!on(r, c) || visited[static_cast<std::size_t>(index(r, c))]) continue;
      std::vector<Pixel> loop{{r, c}};
      visited[static_cast<std::size_t>(index(r, c))] = 1;
      Pixel prev{r, c}, cur = neighbors(r, c).front();
      while (!(cur == Pixel{r, c})) {
        loop.push_back(cur);
        visited[static_cast<std::size_t>(index(cur.first, cur.second))] = 1;
        const auto nb = neighbors(cur.first, cur.second);
        if (nb.size() != 2) break;
        const Pixel next = nb[0] == prev ? nb[1] : nb[0];
        prev = cur;
        cur = next;
      }
      const std::size_t mid = loop.size() / 2;
      std::vector<Pixel> a(loop.begin(), loop.begin() + static_cast<std::ptrdiff_t>(mid) + 1);
      std::vector<Pixel> b(loop.begin() + static_cast<std::ptrdiff_t>(mid), loop.end());
      b.push_back(loop.front());
      segments.push_back(make_segment(std::move(a), eps));
      segments.push_back(make_segment(std::move(b), eps));
    }
  }
  return segments;
}

double orientation_coherence(const std::vector<double>& orientations, bool axial) {
  if (orientations.empty()) return 0.0;
  std::complex<double> acc(0.0, 0.0);
  for (double t : orientations) acc += std::polar(1.0, axial ? 2.0 * t : t);
  return std::min(1.0, std::abs(acc) / static_cast<double>(orientations.size()));
}

ShapeTexture shape_texture_index(double coherence, double tortuosity, double alpha) {
  if (!(tortuosity >= 1.0)) throw ContractError("shape_texture_index: tortuosity below 1");
  if (!(coherence >= 0.0 && coherence <= 1.0)) throw ContractError("shape_texture_index: coherence outside [0, 1]");
  if (!(alpha > 0.0)) throw ContractError("shape_texture_index: alpha must be positive");
  const double tex = 1.0 - std::exp(-alpha * (tortuosity - 1.0));
  return {tex, coherence - tex};
}

void describe_blob(Blob& blob, const StimulusImage& img, const BlobConfig& cfg) {
  blob.segments.clear();
  blob.valid = false;
  if (blob.pixels.empty()) return;
  int r0 = blob.pixels.front().first, r1 = r0, c0 = blob.pixels.front().second, c1 = c0;
  for (const auto& [r, c] : blob.pixels) {
    r0 = std::min(r0, r);
    r1 = std::max(r1, r);
    c0 = std::min(c0, c);
    c1 = std::max(c1, c);
  }
  const MatrixRd mag = sobel_magnitude(img.cast<double>());
  std::vector<double> values;
  values.reserve(blob.pixels.size());
  for (const auto& [r, c] : blob.pixels) values.push_back(mag(r, c));
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mx - *mn < 1e-9) return;  // no edges inside the blob
  const double thr = otsu_threshold(values);

  MaskU8 edges = MaskU8::Zero(r1 - r0 + 1, c1 - c0 + 1);
  for (const auto& [r, c] : blob.pixels) {
    if (mag(r, c) > thr) edges(r - r0, c - c0) = 1;
  }
  std::vector<double> angles;
  double tort = 0.0;
  for (Segment& s : skeleton_segments(thin(edges), cfg.eps)) {
    if (static_cast<int>(s.pixels.size()) < cfg.min_segment_pixels) continue;
    for (auto& p : s.pixels) {
      p.first += r0;
      p.second += c0;
    }
    angles.push_back(s.orientation);
    tort += s.tortuosity;
    blob.segments.push_back(std::move(s));
  }
  if (blob.segments.empty()) return;
  blob.coherence = orientation_coherence(angles, cfg.axial);
  blob.tortuosity = std::max(1.0, tort / static_cast<double>(blob.segments.size()));
  const ShapeTexture st = shape_texture_index(blob.coherence, blob.tortuosity, cfg.alpha_sti);
  blob.texture = st.texture;
  blob.sti = st.sti;
  blob.valid = true;
}

int sti_bin(double sti) {
  const int k = static_cast<int>(std::ceil((sti + 1.0) / 0.1 - 1e-9)) - 1;
  return std::clamp(k, 0, kStiBins - 1);
}

StiReport sti_report(const std::vector<std::vector<Blob>>& blobs, const std::vector<int>& image_ids) {
  if (blobs.size() != image_ids.size()) throw DimensionError("sti_report: one blob list per image id expected");
  StiReport rep;
  rep.histogram.assign(kStiBins, 0);
  std::vector<double> stis;
  double area = 0.0;
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    rep.blobs_per_image.push_back(static_cast<int>(blobs[i].size()));
    int excluded = 0;
    for (std::size_t b = 0; b < blobs[i].size(); ++b) {
      const Blob& blob = blobs[i][b];
      if (!blob.valid) {
        ++excluded;
        continue;
      }
      rep.records.push_back({image_ids[i], static_cast<int>(b), blob});
      rep.histogram[static_cast<std::size_t>(sti_bin(blob.sti))] += 1;
      stis.push_back(blob.sti);
      area += blob.area;
    }
    rep.excluded_per_image.push_back(excluded);
  }
  rep.empty = stis.empty();
  if (!rep.empty) {
    std::sort(stis.begin(), stis.end());
    const std::size_t m = stis.size() / 2;
    rep.median_sti = stis.size() % 2 ? stis[m] : 0.5 * (stis[m - 1] + stis[m]);
    rep.mean_area = area / static_cast<double>(stis.size());
  }
  return rep;
}

}  // namespace dina

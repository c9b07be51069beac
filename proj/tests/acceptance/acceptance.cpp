// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dina/binary_io.hpp"
#include "dina/cli.hpp"
#include "dina/evaluator.hpp"
#include "dina/interp_image.hpp"
#include "dina/interp_neural.hpp"
#include "dina/pca.hpp"
#include "dina/stimulus.hpp"
#include "dina/synth.hpp"
#include "dina/trainer.hpp"
#include "../grad_cases.hpp"

using namespace dina;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void progress(const std::string& s) {
  std::fprintf(stderr, "  .. %s\n", s.c_str());
  std::fflush(stderr);
}

// ---- shared training runs ----------------------------------------------------

ModelConfig acceptance_model(int neurons, std::uint64_t seed) {
  ModelConfig mc;
  mc.image = ImageTowerConfig::compact();
  mc.image.stage_blocks = {1, 1};
  mc.neural.neurons = neurons;
  mc.seed = seed;
  return mc;
}

TrainConfig acceptance_training(std::uint64_t seed) {
  TrainConfig tc;
  tc.seed = seed;
  tc.max_epochs = 200;
  tc.patience = 10;
  tc.image_optimizer.weight_decay = 0.05;
  return tc;
}

struct TrainedRun {
  std::unique_ptr<DinaModel> model;
  Dataset data;
  SplitIndex split;
  TrainResult result;
  RetrievalReport retrieval;
  double train_seconds = 0.0;
};

TrainedRun train_run(std::uint64_t seed, PairingMode mode, StimulusCondition condition) {
  SynthConfig sc;
  sc.mode = mode;
  sc.condition = condition;
  TrainedRun run;
  run.data = synth_dataset(seed, sc);
  const TrainConfig tc = acceptance_training(seed);
  run.split = make_split(run.data.stimuli(), tc);
  run.model = std::make_unique<DinaModel>(acceptance_model(run.data.neurons(), seed));
  const auto t0 = std::chrono::steady_clock::now();
  run.result = train(*run.model, run.data, run.split, tc);
  run.train_seconds = seconds_since(t0);
  const MapSet maps = compute_maps(*run.model, run.data, run.split.test_ids, 1);
  run.retrieval = topk_retrieval(similarity_matrix(maps));
  progress(fmt("seed %llu %s/%s: %d epochs (best %d) in %.0f s, top1 %.4f",
               static_cast<unsigned long long>(seed), to_string(mode).c_str(), to_string(condition).c_str(),
               run.result.epochs_run, run.result.best_epoch, run.train_seconds, run.retrieval.top1));
  return run;
}

std::map<StimulusCondition, TrainedRun> g_linked;
std::vector<RetrievalReport> g_reports;  // every retrieval report produced in this process

TrainedRun& linked(StimulusCondition c) {
  auto it = g_linked.find(c);
  if (it == g_linked.end()) {
    it = g_linked.emplace(c, train_run(7, PairingMode::Linked, c)).first;
    g_reports.push_back(it->second.retrieval);
  }
  return it->second;
}

double chance_sigma(double p, double trials) { return std::sqrt(p * (1.0 - p) / trials); }

// ---- criteria ----------------------------------------------------------------

Outcome gradients() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::string worst_name;
  std::size_t checked = 0;
  for (const auto& op : testing::op_cases()) {
    const auto gc = testing::check_case(op);
    checked += gc.checked;
    if (gc.worst >= worst) {
      worst = gc.worst;
      worst_name = op.name;
    }
    if (gc.checked == 0) o.require(false, op.name + " checked nothing");
  }
  o.require(worst < 1e-3, fmt("ops: worst rel err %.2e (%s) over %zu entries", worst, worst_name.c_str(), checked));

  Rng rng(2);
  auto a = testing::random_tensor({4, 1024}, rng), b = testing::random_tensor({4, 1024}, rng);
  double worst_nce = 0.0;
  std::size_t nce_checked = 0;
  for (double tau : {0.01, 0.1, 1.0}) {
    const auto gc = testing::grad_check({a, b}, [&] { return infonce_loss(a, b, tau); });
    worst_nce = std::max(worst_nce, gc.worst);
    nce_checked += gc.checked;
  }
  o.require(worst_nce < 1e-3, fmt("InfoNCE B=4: worst rel err %.2e over %zu entries", worst_nce, nce_checked));
  const double secs = seconds_since(t0);
  o.require(secs < 60.0, fmt("%.1f s", secs));
  return o;
}

Outcome shapes() {
  Outcome o;
  const ImageTower<float> tower(ImageTowerConfig::standard(), 7);
  const Dataset d = synth_dataset(7, [] {
    SynthConfig sc;
    sc.stimuli = 20;
    return sc;
  }());
  NoGradGuard guard;
  ImageForwardTrace trace;
  const Tensor out = tower.forward(d.image(0), PathwayKeep::Both, &trace);
  o.require(trace.stage2 == Shape{128, 16, 64}, "stage-2 " + shape_string(trace.stage2));
  // the single output channel is squeezed: 1x16x64 is stored as 16x64
  o.require(out.shape() == Shape{16, 64}, "image output " + shape_string(out.shape()));
  const NeuralTower<float> neural({.neurons = d.neurons()}, 7);
  const Tensor nout = neural.forward(d.response(0));
  o.require(nout.shape() == Shape{16, 64}, fmt("neural N=%d output ", d.neurons()) + shape_string(nout.shape()));
  return o;
}

Outcome infonce_closed_forms() {
  Outcome o;
  const TensorD same = TensorD::from_matrix(MatrixRd::Ones(128, 1024));
  const double uniform = infonce_loss(same, same, 0.01).item();
  o.require(std::abs(uniform - std::log(128.0)) < 1e-4 && std::abs(uniform - 4.8520) < 1e-4,
            fmt("uniform B=128 %.6f", uniform));
  const TensorD eye = TensorD::from_matrix(MatrixRd::Identity(128, 1024));
  const double ortho = infonce_loss(eye, eye, 0.01).item();
  o.require(ortho < 1e-6, fmt("orthonormal tau=0.01 %.3e", ortho));
  const TensorD two = TensorD::from_matrix(MatrixRd::Identity(2, 2));
  const double b2 = infonce_loss(two, two, 1.0).item();
  o.require(std::abs(b2 - 0.3133) < 1e-4, fmt("B=2 tau=1 identity %.6f", b2));
  return o;
}

Outcome end_to_end() {
  Outcome o;
  const TrainedRun& run = linked(StimulusCondition::Natural);
  const int n_test = static_cast<int>(run.split.test_ids.size());
  const double chance = 1.0 / n_test;
  o.require(n_test == 64, fmt("%d-way test set", n_test));
  o.require(run.retrieval.top1 > 10.0 * chance, fmt("linked top1 %.4f vs 10x chance %.4f", run.retrieval.top1,
                                                     10.0 * chance));
  o.require(run.result.epochs_run <= 200, fmt("%d epochs", run.result.epochs_run));
  o.require(run.train_seconds < 1800.0, fmt("%.0f s single-threaded", run.train_seconds));

  double sum = 0.0;
  const int seeds = 20;
  for (int s = 1; s <= seeds; ++s) {
    TrainedRun control = train_run(static_cast<std::uint64_t>(s), PairingMode::Unlinked, StimulusCondition::Natural);
    g_reports.push_back(control.retrieval);
    sum += control.retrieval.top1;
  }
  const double mean = sum / seeds;
  const double bound = 3.0 * chance_sigma(chance, static_cast<double>(n_test) * seeds);
  o.require(std::abs(mean - chance) <= bound,
            fmt("unlinked mean top1 %.4f over %d seeds, chance %.4f +- %.4f", mean, seeds, chance, bound));
  return o;
}

Outcome retrieval_baseline() {
  Outcome o;
  const int n = 280, seeds = 100;
  double sum = 0.0;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(1000 + static_cast<std::uint64_t>(s));
    SimilarityMatrix sim;
    sim.values.resize(n, n);
    for (Eigen::Index i = 0; i < sim.values.size(); ++i) sim.values.data()[i] = rng.normal();
    sim.ids.resize(n);
    for (int i = 0; i < n; ++i) sim.ids[static_cast<std::size_t>(i)] = i;
    sim.zero_query.assign(n, 0);
    sim.zero_gallery.assign(n, 0);
    const auto r = topk_retrieval(sim);
    g_reports.push_back(r);
    sum += r.top1;
  }
  const double mean = sum / seeds, chance = 1.0 / n;
  const double bound = 3.0 * chance_sigma(chance, static_cast<double>(n) * seeds);
  o.require(std::abs(mean - chance) <= bound, fmt("random 280-way top1 %.5f, chance %.5f +- %.5f", mean, chance, bound));
  int bad = 0;
  for (const auto& r : g_reports) bad += !(r.top1 <= r.top5 && r.top5 <= r.top10);
  o.require(bad == 0, fmt("top1<=top5<=top10 on %zu reports (%d violations)", g_reports.size(), bad));
  return o;
}

Outcome occlusion_fixtures() {
  Outcome o;
  OcclusionConfig cfg;
  const StimulusImage flat = StimulusImage::Constant(kImageHeight, kImageWidth, 0.37f);
  bool unchanged = true;
  for (int cy : {0, 20, 34, 67}) {
    for (int cx : {0, 100, 135, 269}) unchanged = unchanged && occlude(flat, cy, cx, cfg) == flat;
  }
  o.require(unchanged, "constant image unchanged by occlusion");

  // feature map driven only by a 20x20 patch at (24, 120)
  Rng rng(17);
  MatrixRf weights(kMapSize, 400);
  for (Eigen::Index i = 0; i < weights.size(); ++i) weights.data()[i] = static_cast<float>(rng.normal());
  const FeatureFunction planted = [&weights](const StimulusImage& img) {
    Eigen::VectorXf patch(400);
    for (int r = 0; r < 20; ++r) {
      for (int c = 0; c < 20; ++c) patch(r * 20 + c) = img(24 + r, 120 + c);
    }
    Eigen::VectorXf out = (weights * patch).array().tanh();
    return FeatureMap(Eigen::Map<const MatrixRf>(out.data(), kMapHeight, kMapWidth));
  };
  StimulusImage img(kImageHeight, kImageWidth);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<float>(rng.uniform());
  const auto rf = rf_map(img, planted, cfg);
  Eigen::Index r = 0, c = 0;
  rf.values.maxCoeff(&r, &c);
  o.require(r >= 24 && r < 44 && c >= 120 && c < 140, fmt("planted RF argmax at (%d, %d)", int(r), int(c)));

  const double sigma = 5.0;
  MatrixRd bump(kImageHeight, kImageWidth);
  for (int y = 0; y < kImageHeight; ++y) {
    for (int x = 0; x < kImageWidth; ++x) {
      bump(y, x) = std::exp(-((y - 34.0) * (y - 34.0) + (x - 100.0) * (x - 100.0)) / (2 * sigma * sigma));
    }
  }
  const auto blobs = extract_blobs(bump);
  const double analytic = M_PI * sigma * sigma * 2.0 * std::log(1.0 / 0.6);
  o.require(blobs.size() == 1, fmt("%zu blob(s) at tau 0.6", blobs.size()));
  if (!blobs.empty()) {
    const double err = std::abs(blobs[0].area - analytic) / analytic;
    o.require(err <= 0.15, fmt("area %d vs %.1f (%.1f%%)", blobs[0].area, analytic, 100 * err));
  }
  return o;
}

Outcome shape_descriptors() {
  Outcome o;
  std::vector<Pixel> line;
  for (int c = 0; c < 25; ++c) line.emplace_back(7, c);
  const double t_line = make_segment(line).tortuosity;
  o.require(std::abs(t_line - 1.0) <= 1e-6, fmt("straight T %.8f", t_line));

  const int radius = 20;
  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> arc =
      decltype(arc)::Zero(2 * radius + 5, 2 * radius + 5);
  for (int k = 0; k <= 2000; ++k) {
    const double t = M_PI * k / 2000.0;
    arc(static_cast<int>(std::lround(radius + 2 - radius * std::sin(t))),
        static_cast<int>(std::lround(radius + 2 + radius * std::cos(t)))) = 1;
  }
  const auto segs = skeleton_segments(thin(arc));
  if (segs.size() != 1) {
    o.require(false, fmt("half circle gave %zu segments", segs.size()));
  } else {
    const double err = std::abs(segs[0].tortuosity - M_PI / 2) / (M_PI / 2);
    o.require(err <= 0.05, fmt("half-circle T %.4f (%.2f%%)", segs[0].tortuosity, 100 * err));
  }

  const double r_same = orientation_coherence({0.4, 0.4, 0.4, 0.4});
  o.require(std::abs(r_same - 1.0) <= 1e-12, fmt("identical R %.12f", r_same));
  const double r_orth = orientation_coherence({0.0, M_PI / 2}, true);
  o.require(std::abs(r_orth) <= 1e-6, fmt("orthogonal axial R %.2e", r_orth));

  const double s1 = shape_texture_index(0.0, 5.0, 1.0).sti;
  const double s2 = shape_texture_index(0.8, 1.2, 1.0).sti;
  const double s3 = shape_texture_index(0.55, 1.0, 1.0).sti;
  o.require(std::abs(s1 - (-(1.0 - std::exp(-4.0)))) <= 1e-4 && std::abs(s1 + 0.9817) <= 1e-4,
            fmt("STI(R=0,T=5) %.6f", s1));
  o.require(std::abs(s2 - (0.8 - (1.0 - std::exp(-0.2)))) <= 1e-4 && std::abs(s2 - 0.6187) <= 1e-4,
            fmt("STI(R=0.8,T=1.2) %.6f", s2));
  o.require(std::abs(s3 - 0.55) <= 1e-4, fmt("STI(R=0.55,T=1) %.6f", s3));
  return o;
}

Outcome ablation() {
  Outcome o;
  const TrainedRun& run = linked(StimulusCondition::Natural);
  const AblationConfig cfg;
  const auto sorted = ablation_curve(*run.model, run.data, run.split.test_ids, AblationMode::Sorted, cfg);
  const auto random = ablation_curve(*run.model, run.data, run.split.test_ids, AblationMode::Random, cfg);
  const std::size_t last = sorted.fractions.size() - 1;
  o.require(sorted.fractions[last] == 1.0 && sorted.mean[last] == 1.0 && random.mean[last] == 1.0,
            fmt("f=1: sorted %.17g random %.17g", sorted.mean[last], random.mean[last]));
  std::string worst;
  double margin = 1e9;
  bool ordered = true;
  for (std::size_t i = 0; i < sorted.fractions.size(); ++i) {
    const double d = sorted.mean[i] - random.mean[i];
    ordered = ordered && d >= 0.0;
    if (i != last && d < margin) {
      margin = d;
      worst = fmt("f=%.2f sorted %.4f random %.4f", sorted.fractions[i], sorted.mean[i], random.mean[i]);
    }
  }
  o.require(ordered, "sorted >= random at every fraction, tightest below f=1: " + worst);
  return o;
}

Outcome lognormal_recovery() {
  Outcome o;
  Rng rng(2024);
  std::vector<double> w(100000);
  for (double& x : w) x = std::exp(rng.normal(-5.0, 1.0));
  const auto fit = fit_lognormal(w);
  o.require(std::abs(fit.mu + 5.0) <= 0.05, fmt("mu %.4f", fit.mu));
  o.require(std::abs(fit.sigma - 1.0) <= 0.05, fmt("sigma %.4f", fit.sigma));
  return o;
}

Outcome image_conditions() {
  Outcome o;
  const MatrixRf images = synth_images(7, 640);
  const auto spec = pca_variance_spectrum(whiten_images(images));
  double lo = 1.0, hi = 0.0;
  int kept = 0;
  for (double f : spec.fractions) {
    if (f < 1e-9) continue;
    lo = std::min(lo, f);
    hi = std::max(hi, f);
    ++kept;
  }
  o.require(hi / lo < 1.2, fmt("whitened spectrum max/min %.4f over %d components", hi / lo, kept));

  const MatrixRf low = lowdim_images(images, 8);
  const MatrixRd centered = low.cast<double>().rowwise() - low.cast<double>().colwise().mean();
  const Eigen::VectorXd sv = Eigen::BDCSVD<MatrixRd>(centered).singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-5 * sv(0);
  o.require(rank <= 8, fmt("8D reconstruction rank %d", rank));

  const double natural = linked(StimulusCondition::Natural).retrieval.top1;
  const TrainedRun& lowrun = linked(StimulusCondition::LowDim8);
  const TrainedRun& white = linked(StimulusCondition::Whitened);
  const double chance = 1.0 / static_cast<double>(lowrun.split.test_ids.size());
  o.require(lowrun.retrieval.top1 > 5.0 * chance,
            fmt("8D top1 %.4f vs 5x chance %.4f", lowrun.retrieval.top1, 5.0 * chance));
  o.require(white.retrieval.top1 < natural, fmt("whitened top1 %.4f vs natural %.4f", white.retrieval.top1, natural));
  return o;
}

int cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::vector<const char*> argv{"dina"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream os, es;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), os, es);
  if (out) *out = os.str();
  if (code != 0) progress("cli exit " + std::to_string(code) + ": " + es.str());
  return code;
}

Outcome determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "dina_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream cfg(root / "run.ini");
    cfg << "[synth]\nstimuli = 60\nneurons = 32\n[image]\nstage_blocks = 1,1\n[neural]\nmlp_hidden = 64\n"
           "[train]\nbatch_size = 16\nmax_epochs = 3\n[eval]\nks = 1,2,5\n[rfmap]\nstride = 4\n[ablate]\nsamplings = 3\n";
  }
  const std::vector<std::string> commands{"synth", "train", "eval", "simmatrix", "spectra", "maskpath",
                                          "rfmap", "blobs", "sti", "ablate", "attnstats", "info"};
  std::map<std::string, std::string> stdout_of[2];
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path dir = root / (pass ? "b" : "a");
    const std::string data = (dir / "synth.bin").string(), ckpt = (dir / "model.ckpt").string();
    const std::vector<std::string> common{"--config", (root / "run.ini").string(), "--seed", "11",
                                          "--threads", "1", "--out-dir", dir.string()};
    auto run = [&](const std::string& cmd, std::vector<std::string> extra) {
      std::vector<std::string> args = common;
      args.push_back(cmd);
      args.insert(args.end(), extra.begin(), extra.end());
      std::string out;
      const bool ok = cli(args, &out) == 0;
      // printed paths name the run directory
      for (std::size_t at; (at = out.find(dir.string())) != std::string::npos;) out.replace(at, dir.string().size(), "<dir>");
      stdout_of[pass][cmd] = out;
      return ok;
    };
    bool ok = run("synth", {"-o", data});
    ok = ok && run("train", {data, "-o", ckpt, "--quiet"});
    for (const char* cmd : {"eval", "simmatrix", "spectra", "maskpath", "ablate", "attnstats"}) {
      ok = ok && run(cmd, {ckpt, data});
    }
    for (const char* cmd : {"rfmap", "blobs", "sti"}) ok = ok && run(cmd, {ckpt, data, "--limit", "1"});
    ok = ok && run("info", {ckpt});
    if (!ok) {
      o.require(false, "a subcommand failed");
      return o;
    }
  }

  // Manifests record the run directory and are excluded.
  std::set<std::string> names[2];
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& e : fs::directory_iterator(root / (pass ? "b" : "a"))) {
      const std::string n = e.path().filename().string();
      if (n.find("_manifest.json") == std::string::npos) names[pass].insert(n);
    }
  }
  o.require(names[0] == names[1], fmt("%zu output files in each run", names[0].size()));
  int csv = 0, differing = 0;
  std::string first_diff;
  for (const auto& n : names[0]) {
    if (!names[1].count(n)) continue;
    csv += n.ends_with(".csv");
    if (read_file(root / "a" / n) != read_file(root / "b" / n)) {
      ++differing;
      first_diff += (first_diff.empty() ? "" : " ") + n;
    }
  }
  for (const auto& cmd : commands) {
    if (!stdout_of[0][cmd].empty() && stdout_of[0][cmd] != stdout_of[1][cmd]) {
      ++differing;
      first_diff += (first_diff.empty() ? "" : " ") + cmd + "-stdout";
    }
  }
  o.require(differing == 0, fmt("%d CSV files among %zu outputs of %zu subcommands byte-identical", csv,
                                names[0].size(), commands.size()) +
                                (differing ? ", differing: " + first_diff : ""));
  fs::remove_all(root);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", gradients},
      {2, "shape contract", shapes},
      {3, "InfoNCE closed forms", infonce_closed_forms},
      {4, "end-to-end learning", end_to_end},
      {5, "retrieval monotonicity and chance baseline", retrieval_baseline},
      {6, "occlusion fixtures", occlusion_fixtures},
      {7, "shape descriptors", shape_descriptors},
      {8, "ablation contract", ablation},
      {9, "log-normal recovery", lognormal_recovery},
      {10, "whitened and low-dimensional images", image_conditions},
      {11, "determinism", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::printf("[%s] %2d %s (%.0f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds_since(t0),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

#include "dina/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <array>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dina/binary_io.hpp"
#include "dina/checkpoint.hpp"
#include "dina/config.hpp"
#include "dina/dataset.hpp"
#include "dina/errors.hpp"
#include "dina/evaluator.hpp"
#include "dina/interp_image.hpp"
#include "dina/interp_neural.hpp"
#include "dina/output.hpp"
#include "dina/parallel.hpp"
#include "dina/ssim.hpp"
#include "dina/synth.hpp"
#include "dina/trainer.hpp"

namespace fs = std::filesystem;

namespace dina {

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::optional<int> threads;
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  RunConfig cfg;
  fs::path out_dir;
  RunManifest manifest;

  int threads() const { return cfg.threads; }

  fs::path output(const std::string& name) {
    const fs::path p = out_dir / name;
    manifest.outputs.push_back(p.string());
    return p;
  }
  void finish() { manifest.save(out_dir / (manifest.command + "_manifest.json")); }
};

Context make_context(const Globals& g, const std::string& command, std::ostream& out, std::ostream& err) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
  if (g.seed) cfg.apply_seed(*g.seed);
  if (g.threads) cfg.threads = *g.threads;
  cfg.validate();
  fs::create_directories(g.out_dir);
  Context ctx{out, err, cfg, fs::path(g.out_dir), {}};
  ctx.manifest.command = command;
  ctx.manifest.config_hash = config_hash(cfg);
  ctx.manifest.seed = cfg.seed;
  ctx.manifest.threads = cfg.threads;
  if (!g.config_path.empty()) ctx.manifest.inputs.push_back(g.config_path);
  return ctx;
}

Dataset read_dataset(Context& ctx, const std::string& path) {
  bool clamped = false;
  Dataset d = load_dataset(path, &clamped);
  if (clamped) ctx.err << "warning: " << path << ": image values outside [0, 1] were clamped\n";
  ctx.manifest.inputs.push_back(path);
  return d;
}

struct Loaded {
  Checkpoint ckpt;
  DinaModel model;
  Dataset data;
  std::vector<int> test_ids;
};

Loaded read_model_and_data(Context& ctx, const std::string& ckpt_path, const std::string& data_path) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  ctx.manifest.inputs.push_back(ckpt_path);
  Dataset data = read_dataset(ctx, data_path);
  if (data.neurons() != ckpt.config.neural.neurons) {
    throw DimensionError("checkpoint expects " + std::to_string(ckpt.config.neural.neurons) + " neurons, dataset " +
                         data_path + " has " + std::to_string(data.neurons()));
  }
  std::vector<int> ids;
  if (ckpt.dataset_stimuli == data.stimuli() && !ckpt.test_ids.empty()) {
    ids = ckpt.test_ids;
  } else {
    ids = make_split(data.stimuli(), ctx.cfg.train).test_ids;
    ctx.err << "warning: checkpoint split does not match this dataset; using a fresh test split\n";
  }
  if (ckpt.best_epoch == 0) ctx.err << "warning: checkpoint holds untrained weights\n";
  DinaModel model = restore_model(ckpt);
  return {std::move(ckpt), std::move(model), std::move(data), std::move(ids)};
}

std::vector<int> pick_images(const Loaded& l, const std::vector<int>& requested, int limit) {
  std::vector<int> ids = requested;
  if (ids.empty()) ids.assign(l.test_ids.begin(), l.test_ids.begin() + std::min<std::ptrdiff_t>(limit, std::ssize(l.test_ids)));
  for (int id : ids) {
    if (id < 0 || id >= l.data.stimuli()) throw DimensionError("image id " + std::to_string(id) + " out of range");
  }
  return ids;
}

// ---- subcommands ----------------------------------------------------------

struct SynthArgs {
  std::string output;
  std::optional<int> stimuli, neurons;
  std::optional<std::string> mode, condition;
};

int cmd_synth(Context& ctx, const SynthArgs& a) {
  SynthConfig sc = ctx.cfg.synth;
  if (a.stimuli) sc.stimuli = *a.stimuli;
  if (a.neurons) sc.neurons = *a.neurons;
  if (a.mode) sc.mode = parse_pairing(*a.mode);
  if (a.condition) sc.condition = parse_condition(*a.condition);
  const Dataset d = synth_dataset(ctx.cfg.seed, sc);
  const fs::path out = a.output.empty() ? ctx.out_dir / "synth.bin" : fs::path(a.output);
  save_dataset(d, out);
  ctx.manifest.outputs.push_back(out.string());

  CsvWriter csv({"neuron", "mean_response", "zero_fraction"});
  for (int n = 0; n < d.neurons(); ++n) {
    const auto col = d.responses.col(n);
    csv.cell(n).cell(static_cast<double>(col.mean())).cell((col.array() == 0.0f).cast<double>().mean()).end_row();
  }
  csv.save(ctx.output("synth_neurons.csv"));
  ctx.manifest.summary = {{"stimuli", d.stimuli()}, {"neurons", d.neurons()}, {"mode", to_string(sc.mode)},
                          {"condition", to_string(sc.condition)}};
  ctx.out << "wrote " << out.string() << " (" << d.stimuli() << " stimuli, " << d.neurons() << " neurons)\n";
  return 0;
}

int cmd_train(Context& ctx, const std::string& data_path, std::string output, bool quiet) {
  const Dataset d = read_dataset(ctx, data_path);
  ModelConfig mc = ctx.cfg.model;
  mc.neural.neurons = d.neurons();
  DinaModel model(mc);
  const SplitIndex split = make_split(d.stimuli(), ctx.cfg.train);
  const TrainResult r = train(model, d, split, ctx.cfg.train, [&](const EpochRecord& e) {
    if (!quiet) ctx.err << "epoch " << e.epoch << "  train " << format_number(e.train_loss) << "  val " << format_number(e.val_loss) << "\n";
  });
  const fs::path out = output.empty() ? ctx.out_dir / "model.ckpt" : fs::path(output);
  save_checkpoint(out, make_checkpoint(model, &r, &split, d.stimuli()));
  ctx.manifest.outputs.push_back(out.string());

  CsvWriter curve({"epoch", "train_loss", "val_loss"});
  for (const auto& e : r.history) curve.cell(e.epoch).cell(e.train_loss).cell(e.val_loss).end_row();
  curve.save(ctx.output("loss_curve.csv"));
  CsvWriter sp({"stimulus_id", "split"});
  auto put = [&](const std::vector<int>& ids, const char* name) {
    std::vector<int> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    for (int id : sorted) sp.cell(id).cell(std::string(name)).end_row();
  };
  put(split.train_ids, "train");
  put(split.val_ids, "val");
  put(split.test_ids, "test");
  sp.save(ctx.output("split.csv"));
  ctx.manifest.summary = {{"initial_batch_loss", r.initial_batch_loss}, {"initial_val_loss", r.initial_val_loss},
                          {"best_val_loss", r.best_val_loss},         {"best_epoch", r.best_epoch},
                          {"epochs_run", r.epochs_run},               {"stopped_early", r.stopped_early}};
  ctx.out << "best val loss " << format_number(r.best_val_loss) << " at epoch " << r.best_epoch << "; wrote "
          << out.string() << "\n";
  return 0;
}

int cmd_eval(Context& ctx, const std::string& ckpt, const std::string& data) {
  const Loaded l = read_model_and_data(ctx, ckpt, data);
  const MapSet maps = compute_maps(l.model, l.data, l.test_ids, ctx.threads());
  const SimilarityMatrix sim = similarity_matrix(maps);
  const RetrievalReport rep = topk_retrieval(sim, ctx.cfg.eval_ks);
  const CorrespondenceStats cs = map_correspondence_stats(maps);

  CsvWriter topk({"k", "accuracy", "chance"});
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    topk.cell(rep.ks[i]).cell(rep.accuracy[i]).cell(static_cast<double>(rep.ks[i]) / sim.size()).end_row();
  }
  topk.save(ctx.output("retrieval.csv"));
  CsvWriter ranks({"stimulus_id", "rank", "ssim_matched"});
  for (int i = 0; i < sim.size(); ++i) {
    ranks.cell(sim.ids[static_cast<std::size_t>(i)]).cell(rep.ranks[static_cast<std::size_t>(i)]).cell(cs.ssim[static_cast<std::size_t>(i)]).end_row();
  }
  ranks.save(ctx.output("ranks.csv"));
  CsvWriter summary({"metric", "value"});
  summary.cell(std::string("queries")).cell(sim.size()).end_row();
  summary.cell(std::string("top1")).cell(rep.top1).end_row();
  summary.cell(std::string("top5")).cell(rep.top5).end_row();
  summary.cell(std::string("top10")).cell(rep.top10).end_row();
  summary.cell(std::string("diagonal_advantage")).cell(diagonal_advantage(sim)).end_row();
  summary.cell(std::string("ssim_matched_mean")).cell(cs.mean).end_row();
  summary.cell(std::string("ssim_matched_std")).cell(cs.std).end_row();
  summary.cell(std::string("ssim_mismatched_mean")).cell(cs.mismatched_mean).end_row();
  summary.cell(std::string("ssim_mismatched_std")).cell(cs.mismatched_std).end_row();
  summary.save(ctx.output("eval_report.csv"));
  ctx.manifest.summary = {{"top1", rep.top1}, {"top5", rep.top5}, {"top10", rep.top10}, {"queries", sim.size()}};
  ctx.out << "top1 " << format_number(rep.top1) << "  top5 " << format_number(rep.top5) << "  top10 "
          << format_number(rep.top10) << " over " << sim.size() << " queries\n";
  return 0;
}

int cmd_simmatrix(Context& ctx, const std::string& ckpt, const std::string& data) {
  const Loaded l = read_model_and_data(ctx, ckpt, data);
  const SimilarityMatrix sim = similarity_matrix(compute_maps(l.model, l.data, l.test_ids, ctx.threads()));
  std::vector<std::string> header{"query_id"};
  for (int id : sim.ids) header.push_back(std::to_string(id));
  CsvWriter csv(header);
  for (int i = 0; i < sim.size(); ++i) {
    csv.cell(sim.ids[static_cast<std::size_t>(i)]);
    for (int j = 0; j < sim.size(); ++j) csv.cell(sim.values(i, j));
    csv.end_row();
  }
  csv.save(ctx.output("simmatrix.csv"));
  save_pgm16(ctx.output("simmatrix.pgm"), sim.values, -1.0, 1.0);
  ctx.manifest.summary = {{"size", sim.size()}, {"diagonal_advantage", diagonal_advantage(sim)}};
  ctx.out << "similarity matrix " << sim.size() << "x" << sim.size() << ", diagonal advantage "
          << format_number(diagonal_advantage(sim)) << "\n";
  return 0;
}

int cmd_spectra(Context& ctx, const std::string& ckpt, const std::string& data) {
  const Loaded l = read_model_and_data(ctx, ckpt, data);
  const MapSet maps = compute_maps(l.model, l.data, l.test_ids, ctx.threads());
  MatrixRf images(static_cast<Eigen::Index>(l.test_ids.size()), kImagePixels);
  for (std::size_t i = 0; i < l.test_ids.size(); ++i) images.row(static_cast<Eigen::Index>(i)) = l.data.images.row(l.test_ids[i]);
  const SpectrumReport rep = spectrum_report(images, maps.image, maps.neural);
  CsvWriter csv({"component", "images", "image_maps", "neural_maps"});
  const std::size_t n = std::max({rep.images.fractions.size(), rep.image_maps.fractions.size(), rep.neural_maps.fractions.size()});
  auto at = [](const VarianceSpectrum& s, std::size_t i) { return i < s.fractions.size() ? s.fractions[i] : 0.0; };
  for (std::size_t i = 0; i < n; ++i) {
    csv.cell(i + 1).cell(at(rep.images, i)).cell(at(rep.image_maps, i)).cell(at(rep.neural_maps, i)).end_row();
  }
  csv.save(ctx.output("spectra.csv"));
  ctx.out << "wrote " << n << " spectrum components\n";
  return 0;
}

int cmd_maskpath(Context& ctx, const std::string& ckpt, const std::string& data) {
  const Loaded l = read_model_and_data(ctx, ckpt, data);
  const std::size_t n = l.test_ids.size();
  std::vector<std::array<double, 3>> rows(n);
  parallel_for(static_cast<int>(n), ctx.threads(), [&](int k) {
    const StimulusImage img = l.data.image(l.test_ids[static_cast<std::size_t>(k)]);
    const FeatureMap full = l.model.image_map(img);
    rows[static_cast<std::size_t>(k)] = {ssim(l.model.image_map(img, PathwayKeep::LocalOnly), full),
                                         ssim(l.model.image_map(img, PathwayKeep::GlobalOnly), full),
                                         ssim(l.model.image_map(img, PathwayKeep::Neither), full)};
  });
  CsvWriter csv({"stimulus_id", "ssim_local_only", "ssim_global_only", "ssim_neither"});
  std::array<double, 3> mean{0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    csv.cell(l.test_ids[i]);
    for (int c = 0; c < 3; ++c) {
      csv.cell(rows[i][static_cast<std::size_t>(c)]);
      mean[static_cast<std::size_t>(c)] += rows[i][static_cast<std::size_t>(c)] / static_cast<double>(n);
    }
    csv.end_row();
  }
  csv.save(ctx.output("maskpath.csv"));
  ctx.manifest.summary = {{"ssim_local_only", mean[0]}, {"ssim_global_only", mean[1]}, {"ssim_neither", mean[2]}};
  ctx.out << "mean ssim  local-only " << format_number(mean[0]) << "  global-only " << format_number(mean[1]) << "\n";
  return 0;
}

RfImportanceMap compute_rf(Context& ctx, const Loaded& l, int id) {
  const FeatureFunction f = [&](const StimulusImage& im) { return l.model.image_map(im); };
  RfImportanceMap rf = rf_map(l.data.image(id), f, ctx.cfg.occlusion, ctx.threads());
  rf.untrained = l.ckpt.best_epoch == 0;
  return rf;
}

int cmd_rfmap(Context& ctx, const std::string& ckpt, const std::string& data, const std::vector<int>& images, int limit) {
  const Loaded l = read_model_and_data(ctx, ckpt, data);
  CsvWriter summary({"image_id", "degenerate", "untrained", "argmax_row", "argmax_col", "raw_min", "raw_max"});
  for (int id : pick_images(l, images, limit)) {
    const RfImportanceMap rf = compute_rf(ctx, l, id);
    const std::string stem = "rfmap_" + std::to_string(id);
    write_file(ctx.output(stem + ".csv"), matrix_csv(rf.values));
    save_pgm16(ctx.output(stem + ".pgm"), rf.values, 0.0, 1.0);
    Eigen::Index r = 0, c = 0;
    rf.values.maxCoeff(&r, &c);
    summary.cell(id).cell(static_cast<int>(rf.degenerate)).cell(static_cast<int>(rf.untrained)).cell(static_cast<int>(r))
        .cell(static_cast<int>(c)).cell(rf.raw.minCoeff()).cell(rf.raw.maxCoeff()).end_row();
  }
  summary.save(ctx.output("rfmap_summary.csv"));
  ctx.out << "wrote receptive-field maps\n";
  return 0;
}

std::vector<std::vector<Blob>> blobs_for(Context& ctx, const Loaded& l, const std::vector<int>& ids) {
  std::vector<std::vector<Blob>> all;
  for (int id : ids) {
    std::vector<Blob> blobs = extract_blobs(compute_rf(ctx, l, id), ctx.cfg.blobs);
    const StimulusImage img = l.data.image(id);
    for (Blob& b : blobs) describe_blob(b, img, ctx.cfg.blobs);
    all.push_back(std::move(blobs));
  }
  return all;
}

void blob_rows(CsvWriter& csv, int image_id, const std::vector<Blob>& blobs) {
  for (std::size_t b = 0; b < blobs.size(); ++b) {
    const Blob& x = blobs[b];
    csv.cell(image_id).cell(b).cell(x.area).cell(x.centroid_row).cell(x.centroid_col).cell(x.segments.size())
        .cell(static_cast<int>(x.valid)).cell(x.coherence).cell(x.tortuosity).cell(x.texture).cell(x.sti).end_row();
  }
}

const std::vector<std::string> kBlobHeader{"image_id", "blob_id", "area", "centroid_row", "centroid_col", "segments",
                                           "valid", "R", "T", "Tex", "STI"};

int cmd_blobs(Context& ctx, const std::string& ckpt, const std::string& data, const std::vector<int>& images, int limit) {
  const Loaded l = read_model_and_data(ctx, ckpt, data);
  const std::vector<int> ids = pick_images(l, images, limit);
  const auto all = blobs_for(ctx, l, ids);
  CsvWriter csv(kBlobHeader);
  std::size_t total = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    blob_rows(csv, ids[i], all[i]);
    total += all[i].size();
  }
  csv.save(ctx.output("blobs.csv"));
  ctx.manifest.summary = {{"images", ids.size()}, {"blobs", total}};
  ctx.out << total << " blobs over " << ids.size() << " images\n";
  return 0;
}

int cmd_sti(Context& ctx, const std::string& ckpt, const std::string& data, const std::vector<int>& images, int limit) {
  const Loaded l = read_model_and_data(ctx, ckpt, data);
  const std::vector<int> ids = pick_images(l, images, limit);
  const auto all = blobs_for(ctx, l, ids);
  const StiReport rep = sti_report(all, ids);
  CsvWriter blobs(kBlobHeader);
  for (std::size_t i = 0; i < ids.size(); ++i) blob_rows(blobs, ids[i], all[i]);
  blobs.save(ctx.output("sti_blobs.csv"));
  CsvWriter hist({"bin_low", "bin_high", "count"});
  for (int k = 0; k < kStiBins; ++k) {
    hist.cell(-1.0 + 0.1 * k).cell(-1.0 + 0.1 * (k + 1)).cell(rep.histogram[static_cast<std::size_t>(k)]).end_row();
  }
  hist.save(ctx.output("sti_histogram.csv"));
  CsvWriter per({"image_id", "blobs", "excluded"});
  for (std::size_t i = 0; i < ids.size(); ++i) per.cell(ids[i]).cell(rep.blobs_per_image[i]).cell(rep.excluded_per_image[i]).end_row();
  per.save(ctx.output("sti_images.csv"));
  if (rep.empty) ctx.err << "warning: no valid blobs; STI report is empty\n";
  ctx.manifest.summary = {{"valid_blobs", rep.records.size()}, {"median_sti", rep.median_sti}, {"mean_area", rep.mean_area},
                          {"empty", rep.empty}};
  ctx.out << rep.records.size() << " valid blobs, median STI " << format_number(rep.median_sti) << "\n";
  return 0;
}

int cmd_ablate(Context& ctx, const std::string& ckpt, const std::string& data) {
  const Loaded l = read_model_and_data(ctx, ckpt, data);
  const AblationCurve sorted = ablation_curve(l.model, l.data, l.test_ids, AblationMode::Sorted, ctx.cfg.ablation, ctx.threads());
  const AblationCurve random = ablation_curve(l.model, l.data, l.test_ids, AblationMode::Random, ctx.cfg.ablation, ctx.threads());
  CsvWriter csv({"fraction", "kept", "ssim_sorted", "ssim_sorted_std", "ssim_random_mean", "ssim_random_std"});
  for (std::size_t f = 0; f < sorted.fractions.size(); ++f) {
    csv.cell(sorted.fractions[f]).cell(kept_neurons(sorted.fractions[f], l.data.neurons())).cell(sorted.mean[f])
        .cell(sorted.std[f]).cell(random.mean[f]).cell(random.std[f]).end_row();
  }
  csv.save(ctx.output("ablation.csv"));
  ctx.manifest.summary = {{"threshold_sorted", sorted.threshold_fraction}, {"threshold_random", random.threshold_fraction}};
  ctx.out << "sorted threshold fraction " << format_number(sorted.threshold_fraction) << ", random "
          << format_number(random.threshold_fraction) << "\n";
  return 0;
}

int cmd_attnstats(Context& ctx, const std::string& ckpt, const std::string& data) {
  const Loaded l = read_model_and_data(ctx, ckpt, data);
  const AttentionStats st = attention_distribution(l.model, l.data, l.test_ids, ctx.cfg.attention_average_first, ctx.threads());
  const auto [lo_it, hi_it] = std::minmax_element(st.log_weights.begin(), st.log_weights.end());
  const double lo = *lo_it, hi = *hi_it;
  const int bins = ctx.cfg.attention_bins;
  const double width = hi > lo ? (hi - lo) / bins : 1.0;
  std::vector<long long> counts(static_cast<std::size_t>(bins), 0);
  for (double l : st.log_weights) {
    const int k = std::clamp(static_cast<int>((l - lo) / width), 0, bins - 1);
    ++counts[static_cast<std::size_t>(k)];
  }
  std::string text = "# mu=" + format_number(st.fit.mu) + ",sigma_ln=" + format_number(st.fit.sigma) +
                     ",skewness=" + format_number(st.fit.skewness) + ",ks=" + format_number(st.fit.ks) +
                     ",count=" + std::to_string(st.fit.count) + "\n";
  CsvWriter csv({"log_weight_low", "log_weight_high", "count"});
  for (int k = 0; k < bins; ++k) csv.cell(lo + k * width).cell(lo + (k + 1) * width).cell(counts[static_cast<std::size_t>(k)]).end_row();
  write_file(ctx.output("attention_hist.csv"), text + csv.text());
  ctx.manifest.summary = {{"mu", st.fit.mu}, {"sigma_ln", st.fit.sigma}, {"skewness", st.fit.skewness}, {"ks", st.fit.ks}};
  ctx.out << "log-normal fit mu " << format_number(st.fit.mu) << " sigma " << format_number(st.fit.sigma)
          << ", skewness " << format_number(st.fit.skewness) << "\n";
  return 0;
}

int cmd_info(std::ostream& out, const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.rfind("DINA", 0) == 0) {
    const DatasetInfo info = decode_dataset_info(bytes);
    out << "format dataset v" << info.version << "\nstimuli " << info.stimuli << "\nneurons " << info.neurons
        << "\nheight " << info.height << "\nwidth " << info.width << "\ncondition " << to_string(info.condition)
        << "\nanimal " << info.animal_id << "\n";
    return 0;
  }
  if (bytes.rfind("DINC", 0) == 0) {
    const Checkpoint c = decode_checkpoint(bytes);
    std::size_t scalars = 0;
    for (const auto& p : c.image) scalars += p.values.size();
    for (const auto& p : c.neural) scalars += p.values.size();
    out << "format checkpoint v" << kCheckpointVersion << "\nneurons " << c.config.neural.neurons << "\nstage_blocks "
        << c.config.image.stage_blocks[0] << "," << c.config.image.stage_blocks[1] << "\nstage_channels "
        << c.config.image.stage_channels[0] << "," << c.config.image.stage_channels[1] << "\nparameters " << scalars
        << "\nbest_val_loss " << format_number(c.best_val_loss) << "\nbest_epoch " << c.best_epoch << "\ntest_ids "
        << c.test_ids.size() << "\n";
    return 0;
  }
  throw FormatError(path + ": neither a dataset (DINA) nor a checkpoint (DINC)");
}

}  // namespace

int run_cli(int argc, const char* const argv[], std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-tower image/neural alignment and interpretability toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "Run configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed for every seeded stage");
  app.add_option("--out-dir", g.out_dir, "Directory for outputs and manifests");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  s_synth->add_option("-o,--output", synth.output, "Dataset path (default <out-dir>/synth.bin)");
  s_synth->add_option("--stimuli", synth.stimuli);
  s_synth->add_option("--neurons", synth.neurons);
  s_synth->add_option("--mode", synth.mode, "linked | unlinked");
  s_synth->add_option("--condition", synth.condition, "natural | whitened | lowdim8");

  std::string data, ckpt, output;
  bool quiet = false;
  auto* s_train = app.add_subcommand("train", "Train both towers");
  s_train->add_option("data", data)->required();
  s_train->add_option("-o,--output", output, "Checkpoint path (default <out-dir>/model.ckpt)");
  s_train->add_flag("-q,--quiet", quiet, "No per-epoch log");

  std::vector<int> images;
  int limit = 4;
  struct Eval {
    const char* name;
    const char* help;
  };
  const Eval evals[] = {{"eval", "Top-k retrieval and map correspondence on the test split"},
                        {"simmatrix", "Similarity matrix of the test split"},
                        {"spectra", "PCA variance spectra of images and both map sets"},
                        {"maskpath", "Pathway-masking SSIM on the test split"},
                        {"rfmap", "Occlusion receptive-field maps"},
                        {"blobs", "Blob extraction from receptive-field maps"},
                        {"sti", "Shape-texture index report"},
                        {"ablate", "Neuron ablation curves"},
                        {"attnstats", "Attention-weight distribution"}};
  std::vector<CLI::App*> eval_cmds;
  for (const auto& e : evals) {
    auto* sub = app.add_subcommand(e.name, e.help);
    sub->add_option("checkpoint", ckpt)->required();
    sub->add_option("data", data)->required();
    const std::string n = e.name;
    if (n == "rfmap" || n == "blobs" || n == "sti") {
      sub->add_option("--image", images, "Stimulus ids (default: first --limit test ids)");
      sub->add_option("--limit", limit, "Test images used when --image is absent")->check(CLI::PositiveNumber);
    }
    eval_cmds.push_back(sub);
  }
  std::string info_path;
  auto* s_info = app.add_subcommand("info", "Describe a dataset or checkpoint file");
  s_info->add_option("file", info_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (s_info->parsed()) return cmd_info(out, info_path);
    CLI::App* chosen = app.get_subcommands().front();
    Context ctx = make_context(g, chosen->get_name(), out, err);
    const std::string name = chosen->get_name();
    int rc = 0;
    if (name == "synth") rc = cmd_synth(ctx, synth);
    else if (name == "train") rc = cmd_train(ctx, data, output, quiet);
    else if (name == "eval") rc = cmd_eval(ctx, ckpt, data);
    else if (name == "simmatrix") rc = cmd_simmatrix(ctx, ckpt, data);
    else if (name == "spectra") rc = cmd_spectra(ctx, ckpt, data);
    else if (name == "maskpath") rc = cmd_maskpath(ctx, ckpt, data);
    else if (name == "rfmap") rc = cmd_rfmap(ctx, ckpt, data, images, limit);
    else if (name == "blobs") rc = cmd_blobs(ctx, ckpt, data, images, limit);
    else if (name == "sti") rc = cmd_sti(ctx, ckpt, data, images, limit);
    else if (name == "ablate") rc = cmd_ablate(ctx, ckpt, data);
    else if (name == "attnstats") rc = cmd_attnstats(ctx, ckpt, data);
    if (rc == 0) ctx.finish();
    return rc;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DimensionError& e) {
    err << "dimension error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace dina

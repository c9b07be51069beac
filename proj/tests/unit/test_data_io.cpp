#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "dina/binary_io.hpp"
#include "dina/checkpoint.hpp"
#include "dina/cli.hpp"
#include "dina/config.hpp"
#include "dina/dataset.hpp"
#include "dina/errors.hpp"
#include "dina/output.hpp"
#include "dina/pca.hpp"
#include "dina/ssim.hpp"
#include "dina/stimulus.hpp"
#include "dina/synth.hpp"

using namespace dina;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dina_unit_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Dataset small_dataset(int stimuli = 24, int neurons = 16, std::uint64_t seed = 3) {
  SynthConfig sc;
  sc.stimuli = stimuli;
  sc.neurons = neurons;
  return synth_dataset(seed, sc);
}

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dina");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return read_file(p); }

}  // namespace

TEST_CASE("dataset container") {
  const Dataset d = small_dataset();
  const std::string bytes = encode_dataset(d);
  const Dataset back = decode_dataset(bytes);
  CHECK(back.images == d.images);
  CHECK(back.responses == d.responses);
  CHECK(back.animal_id == d.animal_id);
  CHECK(encode_dataset(back) == bytes);

  const auto info = decode_dataset_info(bytes);
  CHECK(info.stimuli == 24);
  CHECK(info.neurons == 16);
  CHECK(info.height == 68);
  CHECK(info.width == 270);

  for (std::size_t cut : {std::size_t{3}, std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
    CHECK_THROWS_AS(decode_dataset(std::string_view(bytes).substr(0, cut)), FormatError);
  }
  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_dataset(bad), FormatError);

  Dataset nan = d;
  nan.responses(1, 1) = std::nanf("");
  CHECK_THROWS_AS(encode_dataset(nan), DataError);

  Dataset out_of_range = d;
  out_of_range.images(0, 0) = 1.5f;
  bool clamped = false;
  const Dataset c = decode_dataset(encode_dataset(out_of_range), &clamped);
  CHECK(clamped);
  CHECK(c.images(0, 0) == 1.0f);

  const fs::path dir = scratch("dataset");
  save_dataset(d, dir / "d.bin");
  CHECK(load_dataset(dir / "d.bin").responses == d.responses);
  CHECK(inspect_dataset(dir / "d.bin").stimuli == 24);
  CHECK_THROWS_AS(load_dataset(dir / "missing.bin"), FormatError);
}

TEST_CASE("full-scale header is accepted") {
  Dataset d;
  d.images = MatrixRf::Zero(2800, kImagePixels);
  d.responses = MatrixRf::Zero(2800, 10000);
  const std::string bytes = encode_dataset(d);
  d = Dataset{};
  const auto info = decode_dataset_info(bytes);
  CHECK(info.stimuli == 2800);
  CHECK(info.neurons == 10000);
}

TEST_CASE("csv import") {
  const fs::path dir = scratch("csv");
  const Dataset d = small_dataset(20, 16);
  std::ofstream img(dir / "images.csv"), resp(dir / "responses.csv");
  for (int s = 0; s < 2; ++s) {
    for (int p = 0; p < kImagePixels; ++p) img << (p ? "," : "") << d.images(s, p);
    img << "\n";
    resp << d.responses(s, 0) << "," << d.responses(s, 1) << "," << d.responses(s, 2) << "\n";
  }
  img.close();
  resp.close();
  const Dataset c = load_dataset_csv(dir / "images.csv", dir / "responses.csv");
  CHECK(c.stimuli() == 2);
  CHECK(c.neurons() == 3);
  CHECK(c.images(1, 7) == doctest::Approx(d.images(1, 7)).epsilon(1e-5));
  std::ofstream broken(dir / "broken.csv");
  broken << "1,2\n3,x\n";
  broken.close();
  CHECK_THROWS_AS(load_dataset_csv(dir / "images.csv", dir / "broken.csv"), FormatError);
}

TEST_CASE("synthetic generator") {
  const Dataset a = small_dataset(30, 16, 5), b = small_dataset(30, 16, 5);
  CHECK(encode_dataset(a) == encode_dataset(b));
  CHECK(encode_dataset(small_dataset(30, 16, 6)) != encode_dataset(a));
  CHECK(a.images.minCoeff() >= 0.0f);
  CHECK(a.images.maxCoeff() <= 1.0f);

  SynthConfig sc;
  sc.stimuli = 30;
  sc.neurons = 16;
  sc.mode = PairingMode::Unlinked;
  const Dataset u = synth_dataset(5, sc);
  CHECK(u.images == a.images);
  CHECK(u.responses != a.responses);
  // unlinked rows are a permutation of the linked rows
  std::vector<float> la(a.responses.data(), a.responses.data() + a.responses.size());
  std::vector<float> lu(u.responses.data(), u.responses.data() + u.responses.size());
  std::sort(la.begin(), la.end());
  std::sort(lu.begin(), lu.end());
  CHECK(la == lu);
  CHECK(parse_pairing("unlinked") == PairingMode::Unlinked);
  CHECK_THROWS_AS(parse_pairing("paired"), ConfigError);
  sc.snr = 0;
  CHECK_THROWS_AS(synth_dataset(1, sc), ConfigError);
}

TEST_CASE("whitening and low-dimensional reconstruction") {
  const MatrixRf images = synth_images(9, 40);
  const MatrixRf white = whiten_images(images);
  const auto spec = pca_variance_spectrum(white);
  double lo = 1.0, hi = 0.0;
  for (double f : spec.fractions) {
    if (f < 1e-9) continue;
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  CHECK(hi / lo < 1.2);
  CHECK(white.minCoeff() >= 0.0f);
  CHECK(white.maxCoeff() <= 1.0f);

  const MatrixRf twice = whiten_images(white);
  for (int s = 0; s < 5; ++s) {
    const StimulusImage a = Eigen::Map<const StimulusImage>(white.row(s).data(), kImageHeight, kImageWidth);
    const StimulusImage b = Eigen::Map<const StimulusImage>(twice.row(s).data(), kImageHeight, kImageWidth);
    CHECK(ssim(a, b) > 0.95);
  }

  const MatrixRf pair = images.topRows(2);
  const MatrixRf wp = whiten_images(pair);
  CHECK(wp.allFinite());
  CHECK(wp.minCoeff() >= 0.0f);
  CHECK_THROWS_AS(whiten_images(MatrixRf(images.row(0).replicate(3, 1))), DataError);

  const MatrixRf low = lowdim_images(images, 8);
  const MatrixRd centered = low.cast<double>().rowwise() - low.cast<double>().colwise().mean();
  const Eigen::VectorXd sv = Eigen::JacobiSVD<MatrixRd>(centered).singularValues();
  CHECK(sv(8) < 1e-5 * sv(0));

  const MatrixRf full = lowdim_images(images, kImagePixels);
  const MatrixRf renorm = renormalize_set(images.cast<double>());
  CHECK((full - renorm).cwiseAbs().maxCoeff() < 1e-4f);
}

TEST_CASE("run configuration text") {
  const RunConfig def;
  const RunConfig again = parse_run_config(to_text(def));
  CHECK(to_text(again) == to_text(def));
  CHECK(config_hash(again) == config_hash(def));

  const RunConfig c = parse_run_config(
      "# comment\n[run]\nseed = 11\n[train]\nmax_epochs = 3   ; trailing\n[image]\nstage_blocks = 1,2\n"
      "[optim.image]\nweight_decay = 0.05\n[ablate]\nfractions = 0.5, 1.0\n");
  CHECK(c.seed == 11);
  CHECK(c.train.seed == 11);
  CHECK(c.model.seed == 11);
  CHECK(c.train.max_epochs == 3);
  CHECK(c.model.image.stage_blocks == std::array<int, 2>{1, 2});
  CHECK(c.train.image_optimizer.weight_decay == 0.05);
  CHECK(c.ablation.fractions == std::vector<double>{0.5, 1.0});
  CHECK(parse_run_config(to_text(c)).train.max_epochs == 3);
  CHECK(config_hash(c) != config_hash(def));

  RunConfig threads = c;
  threads.threads = 4;
  CHECK(config_hash(threads) == config_hash(c));

  auto error_of = [](const std::string& text) {
    try {
      parse_run_config(text, "cfg.ini");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(error_of("[train]\n\nbogus = 1\n").find("cfg.ini:3") != std::string::npos);
  CHECK(error_of("[nosuch]\n").find("cfg.ini:1") != std::string::npos);
  CHECK(error_of("[train]\nmax_epochs = many\n").find("cfg.ini:2") != std::string::npos);
  CHECK(error_of("max_epochs = 3\n").find("cfg.ini:1") != std::string::npos);
  CHECK_FALSE(error_of("[train]\nbatch_size = 1\n").empty());
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("checkpoint round trip") {
  ModelConfig mc;
  mc.image.stage_blocks = {1, 1};
  mc.neural.neurons = 16;
  mc.neural.mlp_hidden = 16;
  mc.seed = 3;
  const DinaModel model(mc);
  TrainResult r;
  r.best_val_loss = 1.25;
  r.best_epoch = 4;
  r.rng_state = "state";
  SplitIndex split;
  split.test_ids = {5, 2, 9};
  const Checkpoint ck = make_checkpoint(model, &r, &split, 24);
  const std::string bytes = encode_checkpoint(ck);
  const Checkpoint back = decode_checkpoint(bytes);
  CHECK(encode_checkpoint(back) == bytes);
  CHECK(back.best_epoch == 4);
  CHECK(back.test_ids == split.test_ids);
  CHECK(back.dataset_stimuli == 24);
  const DinaModel restored = restore_model(back);
  const Dataset d = small_dataset(24, 16);
  CHECK(restored.image_map(d.image(0)) == model.image_map(d.image(0)));
  CHECK(restored.neural_map(d.response(3)) == model.neural_map(d.response(3)));

  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), FormatError);
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), FormatError);
  Checkpoint wrong = back;
  wrong.neural[0].name = "neural.renamed";
  CHECK_THROWS_AS(restore_model(wrong), FormatError);
  wrong = back;
  wrong.image[2].shape[0] += 1;
  wrong.image[2].values.resize(numel(wrong.image[2].shape));
  CHECK_THROWS_AS(restore_model(wrong), FormatError);
}

TEST_CASE("csv and pgm output") {
  CsvWriter csv({"a", "b"});
  csv.cell(std::string("x")).cell(0.1).end_row();
  csv.cell(-0.0).cell(1e-20).end_row();
  CHECK(csv.text() == "a,b\nx,0.1\n0,1e-20\n");
  csv.cell(1);
  CHECK_THROWS_AS(csv.end_row(), ContractError);
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(3.0) == "3");

  MatrixRd m(1, 3);
  m << 0.0, 0.5, 2.0;
  const std::string pgm = encode_pgm16(m, 0.0, 1.0);
  const std::string header = "P5\n3 1\n65535\n";
  REQUIRE(pgm.size() == header.size() + 6);
  CHECK(pgm.substr(0, header.size()) == header);
  auto sample = [&](int i) {
    return (static_cast<unsigned char>(pgm[header.size() + 2 * i]) << 8) |
           static_cast<unsigned char>(pgm[header.size() + 2 * i + 1]);
  };
  CHECK(sample(0) == 0);
  CHECK(sample(1) == 32768);
  CHECK(sample(2) == 65535);
  CHECK(matrix_csv(m) == "0,0.5,2\n");
}

TEST_CASE("command line") {
  const fs::path dir = scratch("cli");
  {
    std::ofstream cfg(dir / "tiny.ini");
    cfg << "[synth]\nstimuli = 40\nneurons = 16\n[image]\nstage_blocks = 1,1\n[neural]\nmlp_hidden = 32\n"
           "[train]\nbatch_size = 8\nmax_epochs = 2\n[eval]\nks = 1,2\n[ablate]\nsamplings = 2\n";
  }
  const std::string cfg = (dir / "tiny.ini").string(), out = (dir / "out").string();
  const std::string data = (dir / "d.bin").string(), ckpt = (dir / "m.ckpt").string();

  auto r = cli({"--config", cfg, "--out-dir", out, "synth", "--seed", "7", "-o", data});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(data));
  CHECK(fs::exists(fs::path(out) / "synth_manifest.json"));

  r = cli({"info", data});
  CHECK(r.code == 0);
  for (const char* field : {"stimuli 40", "neurons 16", "height 68", "width 270", "condition natural"}) {
    CHECK(r.out.find(field) != std::string::npos);
  }

  r = cli({"--config", cfg, "--out-dir", out, "train", data, "-o", ckpt, "--quiet"});
  REQUIRE(r.code == 0);
  r = cli({"--config", cfg, "--out-dir", out, "eval", ckpt, data});
  REQUIRE(r.code == 0);
  const std::string report = slurp(fs::path(out) / "eval_report.csv");
  const auto pos = report.find("\ntop1,");
  REQUIRE(pos != std::string::npos);
  const double top1 = std::stod(report.substr(pos + 6));
  CHECK(top1 >= 0.0);
  CHECK(top1 <= 1.0);

  r = cli({"info", ckpt});
  CHECK(r.code == 0);
  CHECK(r.out.find("neurons 16") != std::string::npos);

  // neuron count mismatch between checkpoint and dataset
  const std::string other = (dir / "other.bin").string();
  REQUIRE(cli({"--config", cfg, "--out-dir", out, "synth", "--neurons", "17", "-o", other}).code == 0);
  r = cli({"--config", cfg, "--out-dir", out, "eval", ckpt, other});
  CHECK(r.code == 2);
  CHECK(r.err.find("dimension") != std::string::npos);

  CHECK(cli({}).code == 1);
  CHECK(cli({"nosuch"}).code == 1);
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"eval", ckpt}).code == 1);
  CHECK(cli({"--config", (dir / "missing.ini").string(), "info", data}).code == 1);
  {
    std::ofstream bad(dir / "bad.ini");
    bad << "[train]\nbogus = 1\n";
  }
  r = cli({"--config", (dir / "bad.ini").string(), "synth"});
  CHECK(r.code == 1);
  CHECK(r.err.find("bad.ini:2") != std::string::npos);
  {
    std::ofstream junk(dir / "junk.bin");
    junk << "DINA garbage";
  }
  CHECK(cli({"info", (dir / "junk.bin").string()}).code == 2);
  CHECK(cli({"--config", cfg, "--out-dir", out, "eval", ckpt, (dir / "junk.bin").string()}).code == 2);
}

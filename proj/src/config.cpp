#include "dina/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "dina/binary_io.hpp"
#include "dina/errors.hpp"

namespace dina {

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  model.seed = s;
  train.seed = s;
  ablation.seed = s;
}

void RunConfig::validate() const {
  model.image.validate();
  train.validate();
  synth.validate();
  occlusion.validate();
  blobs.validate();
  ablation.validate();
  if (eval_ks.empty()) throw ConfigError("eval: ks must not be empty");
  for (int k : eval_ks) {
    if (k < 1) throw ConfigError("eval: ks must be positive");
  }
  if (attention_bins < 1) throw ConfigError("attnstats: bins must be positive");
  if (threads < 0) throw ConfigError("run: threads must be >= 0");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename Int>
Int parse_int(const std::string& v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("expected an integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <std::size_t K>
std::string join(const std::array<int, K>& a) {
  std::string s;
  for (std::size_t i = 0; i < K; ++i) s += (i ? "," : "") + std::to_string(a[i]);
  return s;
}

template <std::size_t K>
void set_array(std::array<int, K>& a, const std::string& v) {
  const auto items = split_list(v);
  if (items.size() != K) throw ConfigError("expected " + std::to_string(K) + " comma-separated integers");
  for (std::size_t i = 0; i < K; ++i) a[i] = parse_int<int>(items[i]);
}

std::string rule_name(OptimizerRule r) { return r == OptimizerRule::AdamW ? "adamw" : "rmsprop"; }

OptimizerRule parse_rule(const std::string& v) {
  if (v == "adamw") return OptimizerRule::AdamW;
  if (v == "rmsprop") return OptimizerRule::RMSprop;
  throw ConfigError("unknown optimizer '" + v + "' (adamw, rmsprop)");
}

struct Binding {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Ordered "section.key" table; the order is the canonical text order.
using Table = std::vector<std::pair<std::string, Binding>>;

#define DINA_NUM(key, field, parse, show)                                                   \
  t.push_back({key, {[](RunConfig& c, const std::string& v) { c.field = parse(v); },        \
                     [](const RunConfig& c) { return show(c.field); }}})

std::string str_int(long long v) { return std::to_string(v); }
std::string str_u64(std::uint64_t v) { return std::to_string(v); }
std::string str_bool(bool v) { return v ? "true" : "false"; }
std::string str_id(const std::string& v) { return v; }
std::string str_cond(StimulusCondition c) { return to_string(c); }
std::string str_pair(PairingMode c) { return to_string(c); }
std::string str_metric(DeltaMetric m) { return to_string(m); }
int pint(const std::string& v) { return parse_int<int>(v); }
std::uint64_t pu64(const std::string& v) { return parse_int<std::uint64_t>(v); }

void add_optimizer(Table& t, const std::string& sec, OptimizerSettings TrainConfig::*member) {
  auto field = [member](RunConfig& c) -> OptimizerSettings& { return c.train.*member; };
  auto cfield = [member](const RunConfig& c) -> const OptimizerSettings& { return c.train.*member; };
  t.push_back({sec + ".rule", {[=](RunConfig& c, const std::string& v) { field(c).rule = parse_rule(v); },
                               [=](const RunConfig& c) { return rule_name(cfield(c).rule); }}});
  auto num = [&](const std::string& key, double OptimizerSettings::*m) {
    t.push_back({sec + "." + key, {[=](RunConfig& c, const std::string& v) { field(c).*m = parse_double(v); },
                                   [=](const RunConfig& c) { return fmt(cfield(c).*m); }}});
  };
  num("learning_rate", &OptimizerSettings::learning_rate);
  num("weight_decay", &OptimizerSettings::weight_decay);
  num("beta1", &OptimizerSettings::beta1);
  num("beta2", &OptimizerSettings::beta2);
  num("decay", &OptimizerSettings::decay);
  num("eps", &OptimizerSettings::eps);
}

const Table& table() {
  static const Table t = [] {
    Table t;
    DINA_NUM("run.seed", seed, pu64, str_u64);
    DINA_NUM("run.threads", threads, pint, str_int);

    t.push_back({"image.preset", {[](RunConfig& c, const std::string& v) {
                                    if (v == "compact") c.model.image = ImageTowerConfig::compact();
                                    else if (v == "standard") c.model.image = ImageTowerConfig::standard();
                                    else throw ConfigError("unknown image preset '" + v + "' (compact, standard)");
                                    c.image_preset = v;
                                  },
                                  [](const RunConfig& c) { return c.image_preset; }}});
    t.push_back({"image.stage_blocks", {[](RunConfig& c, const std::string& v) { set_array(c.model.image.stage_blocks, v); },
                                        [](const RunConfig& c) { return join(c.model.image.stage_blocks); }}});
    t.push_back({"image.stage_channels", {[](RunConfig& c, const std::string& v) { set_array(c.model.image.stage_channels, v); },
                                          [](const RunConfig& c) { return join(c.model.image.stage_channels); }}});
    t.push_back({"image.heads", {[](RunConfig& c, const std::string& v) { set_array(c.model.image.heads, v); },
                                 [](const RunConfig& c) { return join(c.model.image.heads); }}});
    DINA_NUM("image.global_downsample", model.image.global_downsample, pint, str_int);
    DINA_NUM("image.ffn_ratio", model.image.ffn_ratio, pint, str_int);
    DINA_NUM("image.head_hidden", model.image.head_hidden, pint, str_int);
    DINA_NUM("neural.d_model", model.neural.d_model, pint, str_int);
    DINA_NUM("neural.mlp_hidden", model.neural.mlp_hidden, pint, str_int);

    DINA_NUM("train.batch_size", train.batch_size, pint, str_int);
    DINA_NUM("train.temperature", train.temperature, parse_double, fmt);
    DINA_NUM("train.test_fraction", train.test_fraction, parse_double, fmt);
    DINA_NUM("train.val_fraction", train.val_fraction, parse_double, fmt);
    DINA_NUM("train.max_epochs", train.max_epochs, pint, str_int);
    DINA_NUM("train.patience", train.patience, pint, str_int);
    DINA_NUM("train.clip_norm", train.clip_norm, parse_double, fmt);
    add_optimizer(t, "optim.image", &TrainConfig::image_optimizer);
    add_optimizer(t, "optim.neural", &TrainConfig::neural_optimizer);

    DINA_NUM("synth.stimuli", synth.stimuli, pint, str_int);
    DINA_NUM("synth.neurons", synth.neurons, pint, str_int);
    DINA_NUM("synth.mode", synth.mode, parse_pairing, str_pair);
    DINA_NUM("synth.condition", synth.condition, parse_condition, str_cond);
    DINA_NUM("synth.snr", synth.snr, parse_double, fmt);
    DINA_NUM("synth.min_patches", synth.min_patches, pint, str_int);
    DINA_NUM("synth.max_patches", synth.max_patches, pint, str_int);
    DINA_NUM("synth.min_bars", synth.min_bars, pint, str_int);
    DINA_NUM("synth.max_bars", synth.max_bars, pint, str_int);
    DINA_NUM("synth.lowdim", synth.lowdim, pint, str_int);
    DINA_NUM("synth.animal_id", synth.animal_id, str_id, str_id);

    t.push_back({"eval.ks", {[](RunConfig& c, const std::string& v) {
                               c.eval_ks.clear();
                               for (const auto& s : split_list(v)) c.eval_ks.push_back(parse_int<int>(s));
                             },
                             [](const RunConfig& c) {
                               std::string s;
                               for (std::size_t i = 0; i < c.eval_ks.size(); ++i) s += (i ? "," : "") + std::to_string(c.eval_ks[i]);
                               return s;
                             }}});

    DINA_NUM("rfmap.sigma", occlusion.sigma, parse_double, fmt);
    DINA_NUM("rfmap.stride", occlusion.stride, pint, str_int);
    DINA_NUM("rfmap.alpha", occlusion.alpha, parse_double, fmt);
    DINA_NUM("rfmap.repeats", occlusion.repeats, pint, str_int);
    DINA_NUM("rfmap.metric", occlusion.metric, parse_delta_metric, str_metric);
    DINA_NUM("rfmap.eps", occlusion.eps, parse_double, fmt);
    DINA_NUM("rfmap.deterministic", occlusion.deterministic, parse_bool, str_bool);

    DINA_NUM("blobs.tau", blobs.tau, parse_double, fmt);
    DINA_NUM("blobs.min_area", blobs.min_area, pint, str_int);
    DINA_NUM("blobs.min_segment_pixels", blobs.min_segment_pixels, pint, str_int);
    DINA_NUM("blobs.axial", blobs.axial, parse_bool, str_bool);
    DINA_NUM("blobs.alpha_sti", blobs.alpha_sti, parse_double, fmt);
    DINA_NUM("blobs.eps", blobs.eps, parse_double, fmt);

    t.push_back({"ablate.fractions", {[](RunConfig& c, const std::string& v) {
                                        c.ablation.fractions.clear();
                                        for (const auto& s : split_list(v)) c.ablation.fractions.push_back(parse_double(s));
                                      },
                                      [](const RunConfig& c) {
                                        std::string s;
                                        for (std::size_t i = 0; i < c.ablation.fractions.size(); ++i) s += (i ? "," : "") + fmt(c.ablation.fractions[i]);
                                        return s;
                                      }}});
    DINA_NUM("ablate.samplings", ablation.samplings, pint, str_int);
    DINA_NUM("ablate.global_ranking", ablation.global_ranking, parse_bool, str_bool);
    DINA_NUM("ablate.threshold", ablation.threshold, parse_double, fmt);

    DINA_NUM("attnstats.average_first", attention_average_first, parse_bool, str_bool);
    DINA_NUM("attnstats.bins", attention_bins, pint, str_int);
    return t;
  }();
  return t;
}

#undef DINA_NUM

const Binding* find_binding(const std::string& key) {
  for (const auto& [k, b] : table()) {
    if (k == key) return &b;
  }
  return nullptr;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
  struct Entry {
    std::string key, value;
    int line;
  };
  std::vector<Entry> entries;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  auto fail = [&](int line, const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto hash = line.find_first_of("#;"); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const auto& [k, b] : table()) known = known || k.rfind(section + ".", 0) == 0;
      if (!known) fail(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    if (section.empty()) fail(line_no, "key outside any section");
    const std::string key = section + "." + trim(line.substr(0, eq));
    if (!find_binding(key)) fail(line_no, "unknown key '" + trim(line.substr(0, eq)) + "' in [" + section + "]");
    entries.push_back({key, trim(line.substr(eq + 1)), line_no});
  }

  RunConfig cfg;
  // The preset replaces the whole image block, so it goes first.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& e : entries) {
      if ((e.key == "image.preset") != (pass == 0)) continue;
      try {
        find_binding(e.key)->set(cfg, e.value);
      } catch (const ConfigError& err) {
        fail(e.line, e.key + ": " + err.what());
      }
    }
  }
  cfg.apply_seed(cfg.seed);
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_file(path), path);
}

std::string to_text(const RunConfig& cfg) {
  std::string out, section;
  for (const auto& [key, b] : table()) {
    const auto dot = key.rfind('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      out += (section.empty() ? "[" : "\n[") + sec + "]\n";
      section = sec;
    }
    out += key.substr(dot + 1) + " = " + b.get(cfg) + "\n";
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  // worker count does not affect results
  RunConfig c = cfg;
  c.threads = 0;
  return fnv1a64(to_text(c));
}

}  // namespace dina

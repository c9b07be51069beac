#include "dina/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dina/binary_io.hpp"
#include "dina/errors.hpp"

namespace dina {

namespace {

constexpr std::string_view kMagic = "DINA";
constexpr std::string_view kImagesTag = "IMGS";
constexpr std::string_view kResponsesTag = "RESP";
constexpr std::string_view kMetaTag = "META";

struct Section {
  std::string tag;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

std::vector<Section> read_table(ByteReader& r) {
  if (r.bytes(4) != kMagic) throw FormatError("not a DINA dataset (bad magic)");
  const std::uint16_t version = r.u16();
  if (version != kDatasetVersion) {
    throw FormatError("unsupported dataset version " + std::to_string(version) + " (expected " +
                      std::to_string(kDatasetVersion) + ")");
  }
  const std::uint16_t count = r.u16();
  std::vector<Section> table(count);
  for (auto& s : table) {
    s.tag = std::string(r.bytes(4));
    s.offset = r.u64();
    s.length = r.u64();
  }
  return table;
}

const Section& find_section(const std::vector<Section>& table, std::string_view tag) {
  for (const auto& s : table) {
    if (s.tag == tag) return s;
  }
  throw FormatError("dataset is missing the " + std::string(tag) + " section");
}

void check_finite(std::span<const float> v, const char* what) {
  for (float x : v) {
    if (!std::isfinite(x)) throw DataError(std::string("non-finite value in dataset ") + what);
  }
}

struct Headers {
  std::uint32_t s_images, s_responses, neurons;
  std::uint16_t h, w;
  StimulusCondition condition;
  std::string animal;
};

Headers read_headers(const ByteReader& whole, const std::vector<Section>& table, ByteReader* images,
                     ByteReader* responses) {
  const auto& is = find_section(table, kImagesTag);
  const auto& rs = find_section(table, kResponsesTag);
  const auto& ms = find_section(table, kMetaTag);
  ByteReader ir = whole.sub(is.offset, is.length, "IMGS");
  ByteReader rr = whole.sub(rs.offset, rs.length, "RESP");
  ByteReader mr = whole.sub(ms.offset, ms.length, "META");
  Headers h{};
  h.s_images = ir.u32();
  h.h = ir.u16();
  h.w = ir.u16();
  h.s_responses = rr.u32();
  h.neurons = rr.u32();
  const std::uint8_t cond = mr.u8();
  if (cond > 2) throw FormatError("unknown stimulus condition code " + std::to_string(cond));
  h.condition = static_cast<StimulusCondition>(cond);
  h.animal = mr.str32();
  if (h.h != kImageHeight || h.w != kImageWidth) {
    throw DataError("dataset images are " + std::to_string(h.h) + " x " + std::to_string(h.w) +
                    ", expected 68 x 270");
  }
  if (h.s_images != h.s_responses) {
    throw DataError("dataset stimulus counts disagree: " + std::to_string(h.s_images) + " images vs " +
                    std::to_string(h.s_responses) + " response rows");
  }
  const std::uint64_t image_bytes = std::uint64_t{h.s_images} * h.h * h.w * sizeof(float);
  const std::uint64_t response_bytes = std::uint64_t{h.s_responses} * h.neurons * sizeof(float);
  if (ir.remaining() != image_bytes) throw FormatError("IMGS payload length does not match its header");
  if (rr.remaining() != response_bytes) throw FormatError("RESP payload length does not match its header");
  if (images) *images = ir;
  if (responses) *responses = rr;
  return h;
}

}  // namespace

std::string to_string(StimulusCondition c) {
  switch (c) {
    case StimulusCondition::Natural: return "natural";
    case StimulusCondition::Whitened: return "whitened";
    case StimulusCondition::LowDim8: return "lowdim8";
  }
  return "natural";
}

StimulusCondition parse_condition(const std::string& s) {
  if (s == "natural") return StimulusCondition::Natural;
  if (s == "whitened") return StimulusCondition::Whitened;
  if (s == "lowdim8" || s == "lowdim") return StimulusCondition::LowDim8;
  throw ConfigError("unknown stimulus condition '" + s + "' (natural, whitened, lowdim8)");
}

void Dataset::validate() const {
  if (images.cols() != kImagePixels) throw DataError("dataset images must have 68*270 columns");
  if (images.rows() != responses.rows()) {
    throw DataError("dataset has " + std::to_string(images.rows()) + " images but " +
                    std::to_string(responses.rows()) + " response rows");
  }
  check_finite({images.data(), static_cast<std::size_t>(images.size())}, "images");
  check_finite({responses.data(), static_cast<std::size_t>(responses.size())}, "responses");
}

std::string encode_dataset(const Dataset& d) {
  d.validate();
  ByteWriter w;
  w.bytes(kMagic);
  w.u16(kDatasetVersion);
  w.u16(3);
  const std::array<std::string_view, 3> tags{kImagesTag, kResponsesTag, kMetaTag};
  std::array<std::size_t, 3> slots{};
  for (std::size_t i = 0; i < tags.size(); ++i) {
    w.bytes(tags[i]);
    slots[i] = w.size();
    w.u64(0);
    w.u64(0);
  }
  auto begin = [&](std::size_t i) { w.patch_u64(slots[i], w.size()); return w.size(); };
  auto end = [&](std::size_t i, std::size_t start) { w.patch_u64(slots[i] + 8, w.size() - start); };

  std::size_t start = begin(0);
  w.u32(static_cast<std::uint32_t>(d.stimuli()));
  w.u16(kImageHeight);
  w.u16(kImageWidth);
  w.floats({d.images.data(), static_cast<std::size_t>(d.images.size())});
  end(0, start);

  start = begin(1);
  w.u32(static_cast<std::uint32_t>(d.stimuli()));
  w.u32(static_cast<std::uint32_t>(d.neurons()));
  w.floats({d.responses.data(), static_cast<std::size_t>(d.responses.size())});
  end(1, start);

  start = begin(2);
  w.u8(static_cast<std::uint8_t>(d.condition));
  w.str32(d.animal_id);
  end(2, start);
  return w.take();
}

DatasetInfo decode_dataset_info(std::string_view bytes) {
  ByteReader r(bytes, "dataset");
  const auto table = read_table(r);
  const Headers h = read_headers(r, table, nullptr, nullptr);
  return {kDatasetVersion, h.s_images, h.neurons, h.h, h.w, h.animal, h.condition};
}

Dataset decode_dataset(std::string_view bytes, bool* clamped) {
  ByteReader r(bytes, "dataset");
  const auto table = read_table(r);
  ByteReader ir(""), rr("");
  const Headers h = read_headers(r, table, &ir, &rr);
  Dataset d;
  d.images.resize(h.s_images, kImagePixels);
  d.responses.resize(h.s_responses, h.neurons);
  ir.floats({d.images.data(), static_cast<std::size_t>(d.images.size())});
  rr.floats({d.responses.data(), static_cast<std::size_t>(d.responses.size())});
  d.animal_id = h.animal;
  d.condition = h.condition;
  d.validate();
  const bool out_of_range = (d.images.array() < 0.0f).any() || (d.images.array() > 1.0f).any();
  if (out_of_range) d.images = d.images.cwiseMax(0.0f).cwiseMin(1.0f);
  if (clamped) *clamped = out_of_range;
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) { write_file(path, encode_dataset(d)); }

Dataset load_dataset(const std::filesystem::path& path, bool* clamped) {
  return decode_dataset(read_file(path), clamped);
}

DatasetInfo inspect_dataset(const std::filesystem::path& path) { return decode_dataset_info(read_file(path)); }

namespace {

std::vector<std::vector<float>> read_csv_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::vector<float>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::vector<float> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stof(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Dataset load_dataset_csv(const std::filesystem::path& images_csv, const std::filesystem::path& responses_csv,
                         bool* clamped) {
  const auto img_rows = read_csv_rows(images_csv);
  const auto resp_rows = read_csv_rows(responses_csv);
  if (img_rows.size() != resp_rows.size()) {
    throw DataError("CSV import: " + std::to_string(img_rows.size()) + " images but " +
                    std::to_string(resp_rows.size()) + " response rows");
  }
  if (img_rows.empty()) throw DataError("CSV import: no rows");
  const std::size_t n = resp_rows.front().size();
  Dataset d;
  d.images.resize(static_cast<Eigen::Index>(img_rows.size()), kImagePixels);
  d.responses.resize(static_cast<Eigen::Index>(resp_rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < img_rows.size(); ++s) {
    if (img_rows[s].size() != static_cast<std::size_t>(kImagePixels)) {
      throw DataError("CSV import: image row " + std::to_string(s + 1) + " has " +
                      std::to_string(img_rows[s].size()) + " values, expected 18360");
    }
    if (resp_rows[s].size() != n) throw DataError("CSV import: ragged response row " + std::to_string(s + 1));
    std::copy(img_rows[s].begin(), img_rows[s].end(), d.images.row(static_cast<Eigen::Index>(s)).data());
    std::copy(resp_rows[s].begin(), resp_rows[s].end(), d.responses.row(static_cast<Eigen::Index>(s)).data());
  }
  d.validate();
  const bool out_of_range = (d.images.array() < 0.0f).any() || (d.images.array() > 1.0f).any();
  if (out_of_range) d.images = d.images.cwiseMax(0.0f).cwiseMin(1.0f);
  if (clamped) *clamped = out_of_range;
  return d;
}

}  // namespace dina

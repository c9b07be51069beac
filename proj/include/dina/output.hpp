#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"

#include "dina/types.hpp"

namespace dina {

/// Row-oriented CSV text. Numbers use a fixed "%.9g" rendering so repeated
/// runs produce identical bytes.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(double v);
  CsvWriter& cell(long long v);
  CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
  CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
  void end_row();

  const std::string& text() const { return text_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t columns_;
  std::size_t in_row_ = 0;
  std::string text_;
};

std::string format_number(double v);

/// Dense matrix as CSV with no header.
std::string matrix_csv(const MatrixRd& m);

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples). Values are
/// mapped linearly from [lo, hi] and clamped; lo == hi writes zeros.
std::string encode_pgm16(const MatrixRd& m, double lo, double hi);
void save_pgm16(const std::filesystem::path& path, const MatrixRd& m, double lo, double hi);
/// Min-max scaled.
void save_pgm16(const std::filesystem::path& path, const MatrixRd& m);

/// JSON run manifest: command, config hash, seed, inputs and outputs.
struct RunManifest {
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  nlohmann::json summary = nlohmann::json::object();

  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;
};

inline constexpr const char* kDinaVersion = "0.1.0";

}  // namespace dina

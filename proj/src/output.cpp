#include "dina/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Core>

#include "dina/binary_io.hpp"
#include "dina/errors.hpp"

namespace dina {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (const auto& h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (in_row_ > 0) text_ += ',';
  if (s.find_first_of(",\"\n") != std::string::npos) {
    text_ += '"';
    for (char c : s) {
      if (c == '"') text_ += '"';
      text_ += c;
    }
    text_ += '"';
  } else {
    text_ += s;
  }
  ++in_row_;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_number(v)); }
CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
  if (in_row_ != columns_) {
    throw ContractError("csv row has " + std::to_string(in_row_) + " cells, header has " + std::to_string(columns_));
  }
  text_ += '\n';
  in_row_ = 0;
}

void CsvWriter::save(const std::filesystem::path& path) const { write_file(path, text_); }

std::string matrix_csv(const MatrixRd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_number(m(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string encode_pgm16(const MatrixRd& m, double lo, double hi) {
  std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) + "\n65535\n";
  const double span = hi - lo;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double t = span > 0 ? std::clamp((m(i, j) - lo) / span, 0.0, 1.0) : 0.0;
      const auto v = static_cast<std::uint16_t>(std::lround(t * 65535.0));
      out += static_cast<char>(v >> 8);
      out += static_cast<char>(v & 0xff);
    }
  }
  return out;
}

void save_pgm16(const std::filesystem::path& path, const MatrixRd& m, double lo, double hi) {
  write_file(path, encode_pgm16(m, lo, hi));
}

void save_pgm16(const std::filesystem::path& path, const MatrixRd& m) {
  save_pgm16(path, m, m.size() ? m.minCoeff() : 0.0, m.size() ? m.maxCoeff() : 0.0);
}

nlohmann::json RunManifest::to_json() const {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
  return {{"tool", "dina"},
          {"version", kDinaVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"command", command},
          {"config_hash", hash},
          {"seed", seed},
          {"threads", threads},
          {"inputs", inputs},
          {"outputs", outputs},
          {"summary", summary}};
}

void RunManifest::save(const std::filesystem::path& path) const { write_file(path, to_json().dump(2) + "\n"); }

}  // namespace dina

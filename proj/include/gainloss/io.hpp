#pragma once

// Output formats: CSV with shortest round-trip numbers, atomic file writes,
// and the binary snapshot layout shared with the plotting side.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace gainloss::io {

/// Shortest decimal that parses back to the same double. Non-finite values
/// are rejected; gaps are written by the CSV layer as empty fields.
std::string format_double(double v);

/// Writes via a sibling temporary file and rename, so readers never see a
/// partial file. Creates parent directories.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

/// A CSV cell: a number, a gap (std::nullopt) or a literal token.
struct Cell {
  std::optional<double> number;
  std::string text;
  bool is_text = false;

  Cell() = default;
  Cell(double v) : number(v) {}
  Cell(std::optional<double> v) : number(v) {}
  Cell(std::nullopt_t) {}
  Cell(std::string s) : text(std::move(s)), is_text(true) {}
  Cell(const char* s) : text(s), is_text(true) {}
};

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<Cell> row);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<Cell>> rows_;
};

/// Parsed CSV: header plus rows of raw fields (empty string = gap).
struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
CsvData parse_csv(std::string_view text);

/// Binary snapshot:
///   bytes 0-7    magic "GLSNAPv1"
///   u64          kind (1 = covariance, 2 = wigner grid)
///   u64 rows, u64 cols
///   f64 time
///   f64 q_min, q_max, p_min, p_max   (zero for covariance snapshots)
///   f64 data[rows * cols], row-major
/// All integers and floats little-endian.
enum class SnapshotKind : std::uint64_t { covariance = 1, wigner = 2 };

struct Snapshot {
  SnapshotKind kind = SnapshotKind::covariance;
  double time = 0.0;
  double q_min = 0.0, q_max = 0.0, p_min = 0.0, p_max = 0.0;
  Eigen::MatrixXd data;
};

std::string encode_snapshot(const Snapshot& s);
Snapshot decode_snapshot(std::string_view bytes);

}  // namespace gainloss::io

#include "gainloss/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>
#include <unistd.h>

namespace gainloss::io {

std::string format_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("format_double: non-finite value");
  if (v == 0.0) return "0";  // also folds -0
  std::array<char, 32> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (res.ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf.data(), res.ptr);
}

void write_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<Cell> row) {
  if (row.size() != header_.size()) throw std::invalid_argument("CsvTable: row width differs from header");
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (i) out += ',';
    out += header_[i];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      const Cell& c = row[i];
      if (c.is_text) out += c.text;
      else if (c.number && std::isfinite(*c.number)) out += format_double(*c.number);
    }
    out += '\n';
  }
  return out;
}

CsvData parse_csv(std::string_view text) {
  CsvData data;
  bool first = true;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.emplace_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (first) {
      data.header = std::move(fields);
      first = false;
    } else {
      data.rows.push_back(std::move(fields));
    }
  }
  return data;
}

namespace {

template <typename T>
void put(std::string& out, T v) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.append(bytes.data(), bytes.size());
}

template <typename T>
T take(std::string_view& in) {
  if (in.size() < sizeof(T)) throw std::runtime_error("snapshot truncated");
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), in.data(), sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  in.remove_prefix(sizeof(T));
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

constexpr std::string_view kMagic = "GLSNAPv1";

}  // namespace

std::string encode_snapshot(const Snapshot& s) {
  std::string out(kMagic);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(s.kind));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(s.data.rows()));
  put<std::uint64_t>(out, static_cast<std::uint64_t>(s.data.cols()));
  for (double v : {s.time, s.q_min, s.q_max, s.p_min, s.p_max}) put<double>(out, v);
  for (Eigen::Index i = 0; i < s.data.rows(); ++i)
    for (Eigen::Index j = 0; j < s.data.cols(); ++j) put<double>(out, s.data(i, j));
  return out;
}

Snapshot decode_snapshot(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic) throw std::runtime_error("snapshot: bad magic");
  bytes.remove_prefix(kMagic.size());
  Snapshot s;
  const auto kind = take<std::uint64_t>(bytes);
  if (kind != 1 && kind != 2) throw std::runtime_error("snapshot: unknown kind");
  s.kind = static_cast<SnapshotKind>(kind);
  const auto rows = take<std::uint64_t>(bytes);
  const auto cols = take<std::uint64_t>(bytes);
  s.time = take<double>(bytes);
  s.q_min = take<double>(bytes);
  s.q_max = take<double>(bytes);
  s.p_min = take<double>(bytes);
  s.p_max = take<double>(bytes);
  if (bytes.size() != rows * cols * sizeof(double)) throw std::runtime_error("snapshot: payload size mismatch");
  s.data.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < s.data.rows(); ++i)
    for (Eigen::Index j = 0; j < s.data.cols(); ++j) s.data(i, j) = take<double>(bytes);
  return s;
}

}  // namespace gainloss::io

#include <doctest.h>

#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>

#include "gainloss/io.hpp"

using namespace gainloss::io;
namespace fs = std::filesystem;

TEST_CASE("shortest round-trip formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(1e-300) == "1e-300");
  CHECK_THROWS_AS(format_double(std::numeric_limits<double>::quiet_NaN()), std::invalid_argument);
  CHECK_THROWS_AS(format_double(INFINITY), std::invalid_argument);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10000; ++k) {
    double v;
    do {
      const std::uint64_t bits = rng();
      std::memcpy(&v, &bits, sizeof v);
    } while (!std::isfinite(v) || v == 0.0);
    const std::string text = format_double(v);
    double back = 0;
    std::from_chars(text.data(), text.data() + text.size(), back);
    CHECK(back == v);
  }
}

TEST_CASE("CSV writing and parsing with gaps") {
  CsvTable table({"drive", "s_p_avg", "note"});
  table.add_row({100.0, 0.5, "ok"});
  table.add_row({200.0, std::nullopt, "failed"});
  CHECK(table.rows() == 2);
  const std::string text = table.str();
  CHECK(text == "drive,s_p_avg,note\n100,0.5,ok\n200,,failed\n");
  const auto data = parse_csv(text);
  REQUIRE(data.header.size() == 3);
  REQUIRE(data.rows.size() == 2);
  CHECK(data.rows[1][1].empty());
  CHECK(data.rows[1][2] == "failed");
  CHECK_THROWS_AS(table.add_row({1.0}), std::invalid_argument);
}

TEST_CASE("atomic write leaves only the target") {
  const fs::path dir = fs::temp_directory_path() / "gainloss_io_test";
  fs::remove_all(dir);
  const fs::path target = dir / "nested" / "out.csv";
  write_atomic(target, "a,b\n1,2\n");
  CHECK(read_file(target) == "a,b\n1,2\n");
  write_atomic(target, "replaced\n");
  CHECK(read_file(target) == "replaced\n");
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(target.parent_path())) {
    (void)e;
    ++entries;
  }
  CHECK(entries == 1);
  fs::remove_all(dir);
  CHECK_THROWS(read_file(target));
}

TEST_CASE("snapshot round trip") {
  Snapshot s;
  s.kind = SnapshotKind::wigner;
  s.time = 5000;
  s.q_min = -3;
  s.q_max = 3;
  s.p_min = -2;
  s.p_max = 2;
  s.data = Eigen::MatrixXd::Random(3, 5);
  const std::string bytes = encode_snapshot(s);
  CHECK(bytes.size() == 8 + 3 * 8 + 5 * 8 + 15 * 8);
  CHECK(bytes.substr(0, 8) == "GLSNAPv1");
  // Little-endian kind field.
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);
  const Snapshot back = decode_snapshot(bytes);
  CHECK(back.kind == s.kind);
  CHECK(back.time == s.time);
  CHECK(back.q_min == -3);
  CHECK(back.p_max == 2);
  CHECK(back.data == s.data);
  // Row-major payload.
  double first_row_second;
  std::memcpy(&first_row_second, bytes.data() + 8 + 3 * 8 + 5 * 8 + 8, sizeof(double));
  CHECK(first_row_second == s.data(0, 1));

  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS(decode_snapshot(bad));
  CHECK_THROWS(decode_snapshot(bytes.substr(0, bytes.size() - 1)));
  CHECK_THROWS(decode_snapshot(bytes.substr(0, 12)));
}

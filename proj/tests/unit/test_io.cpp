#include <cmath>
#include <limits>

#include <doctest.h>

#include "difflab/io.hpp"
#include "difflab/rng.hpp"
#include "support.hpp"

using namespace difflab;

TEST_CASE("shortest round-trip doubles") {
  auto eng = testing::fixture_engine(1);
  for (int i = 0; i < 2000; ++i) {
    const double v = testing::fixture_uniform(eng, -1e3, 1e3) * std::pow(10.0, (i % 40) - 20);
    CHECK(io::parse_double(io::format_double(v)) == v);
  }
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(-2.0) == "-2");
  CHECK(io::parse_double(" 1.5\r") == 1.5);
  CHECK_THROWS_AS(io::parse_double("1.5x"), UsageError);
  CHECK_THROWS_AS(io::parse_double(""), UsageError);
}

TEST_CASE("csv parsing") {
  const auto t = io::parse_csv("a,b\n1,2\n3.5,-4\n\n");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1] == std::vector<double>{3.5, -4});
  CHECK(t.column("b") == 1);
  CHECK_THROWS_AS(t.column("c"), UsageError);
  CHECK_THROWS_AS(io::parse_csv(""), UsageError);
  CHECK_THROWS_AS(io::parse_csv("a,b\n1\n"), UsageError);
}

TEST_CASE("files and hashes") {
  CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const auto dir = testing::scratch_dir("io");
  io::write_file(dir / "nested" / "f.txt", "abc");
  CHECK(io::read_file(dir / "nested" / "f.txt") == "abc");
  CHECK(io::sha256_file(dir / "nested" / "f.txt") == io::sha256_hex("abc"));
  CHECK_THROWS_AS(io::read_file(dir / "nope.txt"), InputMissingError);
  CHECK_THROWS_AS(io::sha256_file(dir / "nope.txt"), InputMissingError);

  const std::vector<Vec2> pts = {{0.1, -0.2}, {1e-300, 3e10}};
  io::write_points_csv(dir / "p.csv", pts);
  CHECK(io::read_points_csv(dir / "p.csv") == pts);
}

TEST_CASE("splitmix64 reference value") {
  // First output of the reference generator seeded with 0.
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}

TEST_CASE("generator streams") {
  Rng a = Rng::derive(5, 3);
  Rng b = Rng::derive(5, 3);
  Rng c = Rng::derive(5, 4);
  Rng d = Rng::derive(6, 3);
  const auto va = a.next_u64();
  CHECK(va == b.next_u64());
  CHECK(va != c.next_u64());
  CHECK(va != d.next_u64());
}

TEST_CASE("uniform, below and normal") {
  Rng rng(123);
  double sum = 0, sum2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(std::abs(sum / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  for (int i = 0; i < 1000; ++i) REQUIRE(rng.below(7) < 7);
  CHECK(rng.below(1) == 0);
  sum = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 4 / std::sqrt(n));
  CHECK(std::abs(sum2 / n - 1) < 4 * std::sqrt(2.0 / n));
}

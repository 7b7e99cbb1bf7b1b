#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "alearn/errors.hpp"
#include "alearn/rng.hpp"
#include "doctest.h"

using namespace alearn;

TEST_CASE("derive_seed is deterministic and tag-sensitive") {
  CHECK(derive_seed(42, "select") == derive_seed(42, "select"));
  CHECK(derive_seed(42, "select") != derive_seed(42, "replay"));
  CHECK(derive_seed(42, "select") != derive_seed(43, "select"));
  CHECK(derive_seed(0, "a") != derive_seed(0, "b"));
}

TEST_CASE("streams with the same seed replay the same sequence") {
  RngStream a(derive_seed(7, "x"));
  RngStream b(derive_seed(7, "x"));
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("next_double stays in the unit interval") {
  RngStream rng(123);
  for (int i = 0; i < 10000; ++i) {
    const double v = rng.next_double();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("next_uniform respects its bounds") {
  RngStream rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.next_uniform(-2.5, 4.0);
    CHECK(v >= -2.5);
    CHECK(v < 4.0);
  }
}

TEST_CASE("next_below produces values under the bound and rejects zero") {
  RngStream rng(99);
  for (int i = 0; i < 10000; ++i) CHECK(rng.next_below(7) < 7);
  CHECK_THROWS_AS(rng.next_below(0), PreconditionError);
}

TEST_CASE("next_below covers every residue") {
  RngStream rng(17);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(rng.next_below(5));
  CHECK(seen == std::set<std::uint64_t>{0, 1, 2, 3, 4});
}

TEST_CASE("next_normal has roughly standard moments") {
  RngStream rng(2024);
  const int n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.next_normal();
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("shuffle permutes in place and is seed-deterministic") {
  std::vector<int> vra{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<int> vrb = vra;
  RngStream a(314);
  RngStream b(314);
  a.shuffle(vra);
  b.shuffle(vrb);
  CHECK(vra == vrb);
  std::vector<int> sorted = vra;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
}

TEST_CASE("sample_indices draws distinct positions below n") {
  RngStream rng(11);
  const auto picks = rng.sample_indices(50, 10);
  REQUIRE(picks.size() == 10);
  std::set<std::size_t> unique(picks.begin(), picks.end());
  CHECK(unique.size() == 10);
  for (std::size_t p : picks) CHECK(p < 50);
}

TEST_CASE("sample_indices with k == n is a permutation") {
  RngStream rng(8);
  const auto picks = rng.sample_indices(12, 12);
  std::set<std::size_t> unique(picks.begin(), picks.end());
  CHECK(unique.size() == 12);
}

TEST_CASE("sample_indices rejects oversized draws") {
  RngStream rng(1);
  CHECK_THROWS_AS(rng.sample_indices(3, 4), PreconditionError);
}

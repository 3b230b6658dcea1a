#include <doctest.h>

#include <cmath>
#include <set>

#include "hkde/random.hpp"

using hkde::Philox4x32;

TEST_CASE("Philox4x32-10 known answer") {
  Philox4x32 rng(0, 0);
  CHECK(rng() == 0x6627e8d5u);
  CHECK(rng() == 0xe169c58du);
  CHECK(rng() == 0xbc57ac4cu);
  CHECK(rng() == 0x9b00dbd8u);
}

TEST_CASE("streams are reproducible and distinct") {
  Philox4x32 a(42, 3), b(42, 3), c(42, 4), d(43, 3);
  std::set<std::uint32_t> firsts;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    CHECK(x == b());
    if (i == 0) firsts = {x, c(), d()};
  }
  CHECK(firsts.size() == 3);
}

TEST_CASE("uniform doubles lie in the open unit interval with the right moments") {
  Philox4x32 rng(7, 0);
  const int n = 400000;
  double sum = 0.0, sum2 = 0.0, lo = 1.0, hi = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    sum += u;
    sum2 += u * u;
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sum2 / n - 1.0 / 3.0) < 4.0 * std::sqrt(4.0 / 45.0 / n));
}

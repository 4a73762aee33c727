#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mcq/quantizer.hpp"

using namespace mcq;
using doctest::Approx;

TEST_CASE("one-bit quantizer") {
  const auto q = QuantizerSpec::uniform(1, 2.0);
  CHECK(q.levels() == 2);
  REQUIRE(q.thresholds().size() == 1);
  CHECK(q.thresholds()[0] == 0.0);
  CHECK(q.codeword(0) == Approx(-2.0 / std::numbers::sqrt2));
  CHECK(q.codeword(1) == Approx(2.0 / std::numbers::sqrt2));
  CHECK(q.quantize(-0.3) == 0);
  CHECK(q.quantize(0.0) == 1);
  CHECK(q.quantize(1e-300) == 1);
  CHECK(q.interval(0).lo == -kInf);
  CHECK(q.interval(0).hi == 0.0);
  CHECK(q.interval(1).lo == 0.0);
  CHECK(q.interval(1).hi == kInf);
}

TEST_CASE("three-bit step follows the range formula") {
  const double sz = std::numbers::sqrt2;
  const auto q = QuantizerSpec::uniform(3, sz);
  CHECK(q.step() == Approx(3.0 * sz / std::pow(2.0, 2.5)).epsilon(1e-14));
  CHECK(q.step() == Approx(0.75).epsilon(1e-14));
  const std::vector<double> t{-2.25, -1.5, -0.75, 0.0, 0.75, 1.5, 2.25};
  REQUIRE(q.thresholds().size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(q.thresholds()[i] == Approx(t[i]).epsilon(1e-14));
  CHECK(q.codeword(0) == Approx(-2.625));
  CHECK(q.codeword(7) == Approx(2.625));
  CHECK(q.quantize(10.0) == 7);
  CHECK(q.quantize(-10.0) == 0);
  CHECK(q.quantize(-0.3) == 3);
  // A value on a threshold belongs to the upper cell.
  CHECK(q.quantize(0.75) == 5);
  CHECK(q.quantize(-2.25) == 1);
}

TEST_CASE("codewords are cell midpoints and quantize back to their cell") {
  for (int bits = 2; bits <= 8; ++bits) {
    const auto q = QuantizerSpec::uniform(bits, 1.3);
    for (int b = 0; b < q.levels(); ++b) {
      CHECK(q.quantize(q.codeword(b)) == b);
      const auto cell = q.interval(b);
      if (cell.bounded_below() && cell.bounded_above()) {
        CHECK(q.codeword(b) == Approx(0.5 * (cell.lo + cell.hi)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("cells partition the line and quantize is monotone") {
  const auto q = QuantizerSpec::uniform(4, 0.8);
  for (int b = 0; b + 1 < q.levels(); ++b) CHECK(q.interval(b).hi == q.interval(b + 1).lo);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 2.0);
  std::vector<double> xs(2000);
  for (auto& x : xs) x = g(rng);
  std::sort(xs.begin(), xs.end());
  int prev = 0;
  for (double x : xs) {
    const int b = q.quantize(x);
    CHECK(b >= prev);
    const auto cell = q.interval(b);
    CHECK(cell.lo <= x);
    CHECK(x < cell.hi);
    prev = b;
  }
}

TEST_CASE("invalid specifications") {
  CHECK_THROWS_AS(QuantizerSpec::uniform(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(QuantizerSpec::uniform(17, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(QuantizerSpec::uniform(3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(QuantizerSpec(2, 1.0, {0.0, 0.0, 1.0}, {0, 1, 2, 3}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(QuantizerSpec(2, 1.0, {0.0, 1.0}, {0, 1, 2, 3}, 1.0), std::invalid_argument);
  const auto q = QuantizerSpec::uniform(2, 1.0);
  CHECK_THROWS_AS(q.interval(-1), std::out_of_range);
  CHECK_THROWS_AS(q.interval(4), std::out_of_range);
}

TEST_CASE("complex matrices quantize per component") {
  Eigen::MatrixXcd w(1, 1);
  w(0, 0) = cd(1.0, -1.0);
  const auto q = QuantizerSpec::uniform(1, 1.0);
  const auto obs = quantize_complex_matrix(w, {{0, 0}}, q);
  REQUIRE(obs.size() == 1);
  CHECK(obs.entries[0].re_bin == 1);
  CHECK(obs.entries[0].im_bin == 0);
  CHECK(obs.entries[0].value == cd(q.codeword(1), q.codeword(0)));
  CHECK_NOTHROW(obs.validate());

  auto bad = obs;
  bad.entries[0].re_bin = 2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = obs;
  bad.entries[0].col = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("fine quantization error is bounded by half a step inside the range") {
  const auto q = QuantizerSpec::uniform(12, 1.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    CHECK(std::abs(q.codeword(q.quantize(x)) - x) <= 0.5 * q.step() + 1e-15);
  }
}

TEST_CASE("identity channel keeps raw values") {
  Eigen::MatrixXcd w(2, 2);
  w << cd(1, 2), cd(3, 4), cd(5, 6), cd(7, 8);
  const auto obs = observe_unquantized(w, {{0, 1}, {1, 0}}, 2.0);
  CHECK_FALSE(obs.quantized());
  CHECK(obs.bits() == 0);
  CHECK(obs.entries[0].value == cd(3, 4));
  CHECK(obs.entries[1].value == cd(5, 6));
}

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "bricklab/losses.hpp"

using namespace bricklab;

namespace {

ScoreMap random_map(std::mt19937_64& rng, int h, int w, double spread = 3.0) {
  std::normal_distribution<double> n(0.0, spread);
  ScoreMap x(h, w);
  for (double& v : x.values) v = n(rng);
  return x;
}

TargetMask random_mask(std::mt19937_64& rng, int h, int w) {
  TargetMask y(h, w);
  for (auto& v : y.values) v = rng() % 4 == 0;
  y.values[rng() % y.values.size()] = 1;
  return y;
}

// Relative error between the analytic gradient and central differences over
// every coordinate, measured on the whole vector.
double fd_relative_error(const std::function<LossResult(const ScoreMap&)>& f, const ScoreMap& x) {
  const double h = 1e-5;
  const LossResult r = f(x);
  double diff = 0, scale = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ScoreMap a = x, b = x;
    a.values[i] += h;
    b.values[i] -= h;
    const double num = (f(a).loss - f(b).loss) / (2 * h);
    diff += (num - r.gradient.values[i]) * (num - r.gradient.values[i]);
    scale = std::max(scale, std::max(std::abs(num), std::abs(r.gradient.values[i])));
  }
  const double n = std::sqrt(diff);
  double norm = 0;
  for (double g : r.gradient.values) norm += g * g;
  norm = std::sqrt(norm);
  return norm == 0 ? n : n / norm;
}

}  // namespace

TEST_CASE("pixel softmax") {
  ScoreMap u(4, 5, 1.5);
  for (double p : pixel_softmax(u)) CHECK(p == doctest::Approx(1.0 / 20));

  std::mt19937_64 rng(3);
  const ScoreMap x = random_map(rng, 7, 9, 20.0);
  ScoreMap shifted = x;
  for (double& v : shifted.values) v += 1234.5;
  const auto p = pixel_softmax(x), q = pixel_softmax(shifted);
  double total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-9));
    total += p[i];
  }
  CHECK(std::abs(total - 1.0) < 1e-9);

  const double c = target_constant(128, 128, 0.999);
  ScoreMap big(128, 128, -c);
  big.at(40, 77) = c;
  CHECK(pixel_softmax(big)[40 * 128 + 77] == doctest::Approx(0.999).epsilon(1e-9));
}

TEST_CASE("target constant") {
  CHECK(target_constant(128, 128, 0.999) == doctest::Approx(8.3054).epsilon(1e-4));
  CHECK(std::abs(target_constant(128, 128, 0.999) - 8.305) <= 0.005);
  CHECK(target_constant(2, 1, 0.5) == doctest::Approx(0.0));
  double prev = -1e9;
  for (double p = 0.05; p < 1.0; p += 0.05) {
    const double c = target_constant(16, 16, p);
    CHECK(c > prev);
    prev = c;
  }
  CHECK_THROWS_AS(target_constant(1, 1, 0.5), Error);
  CHECK_THROWS_AS(target_constant(4, 4, 1.0), Error);
}

TEST_CASE("summed cross-entropy values") {
  ScoreMap x(1, 4, 0.0);
  TargetMask y(1, 4);
  y.set(0, 0);
  y.set(0, 1);
  CHECK(summed_ce_loss(x, y).loss == doctest::Approx(std::log(2.0)));

  TargetMask all(1, 4);
  for (auto& v : all.values) v = 1;
  const LossResult r = summed_ce_loss(x, all);
  CHECK(r.loss == doctest::Approx(0.0));
  for (double g : r.gradient.values) CHECK(std::abs(g) < 1e-15);

  CHECK_THROWS_AS(summed_ce_loss(x, TargetMask(1, 4)), Error);
  CHECK_THROWS_AS(summed_ce_loss(x, TargetMask(2, 2)), Error);

  // shift invariance, exactly
  std::mt19937_64 rng(9);
  const ScoreMap a = random_map(rng, 6, 6);
  const TargetMask m = random_mask(rng, 6, 6);
  ScoreMap b = a;
  for (double& v : b.values) v += 8.0;
  CHECK(summed_ce_loss(a, m).loss == doctest::Approx(summed_ce_loss(b, m).loss).epsilon(1e-12));

  // acceptable pixels far below the rest still give a finite answer
  ScoreMap far(1, 3, 0.0);
  far.at(0, 2) = -2000;
  TargetMask last(1, 3);
  last.set(0, 2);
  const LossResult f = summed_ce_loss(far, last);
  CHECK(f.loss == doctest::Approx(2000 + std::log(2.0)));
  CHECK(std::isfinite(f.gradient.at(0, 2)));
  CHECK(f.gradient.at(0, 2) == doctest::Approx(-1.0));
}

TEST_CASE("bce and mse values") {
  ScoreMap zero(3, 3, 0.0);
  TargetMask y(3, 3);
  y.set(1, 1);
  CHECK(bce_loss(zero, y).loss == doctest::Approx(std::log(2.0)));

  ScoreMap sharp(3, 3, -60.0);
  sharp.at(1, 1) = 60.0;
  CHECK(bce_loss(sharp, y).loss < 1e-20);
  CHECK(bce_loss(sharp, y).loss >= 0.0);

  const double c = 8.3;
  ScoreMap exact(3, 3, -c);
  exact.at(1, 1) = c;
  CHECK(mse_constant_loss(exact, y, c).loss == doctest::Approx(0.0));
  CHECK(mse_constant_loss(zero, y, c).loss == doctest::Approx(c * c));
  CHECK_THROWS_AS(mse_constant_loss(zero, y, 0.0), Error);
}

TEST_CASE("losses are non-negative") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 50; ++k) {
    const ScoreMap x = random_map(rng, 5, 4, 6.0);
    const TargetMask y = random_mask(rng, 5, 4);
    CHECK(summed_ce_loss(x, y).loss >= 0.0);
    CHECK(bce_loss(x, y).loss >= 0.0);
    CHECK(mse_constant_loss(x, y, 2.0).loss >= 0.0);
  }
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(2024);
  double worst[3] = {0, 0, 0};
  for (int k = 0; k < 100; ++k) {
    const int h = 3 + static_cast<int>(rng() % 6), w = 3 + static_cast<int>(rng() % 6);
    const ScoreMap x = random_map(rng, h, w);
    const TargetMask y = random_mask(rng, h, w);
    const double c = target_constant(h, w, 0.999);
    worst[0] = std::max(worst[0], fd_relative_error([&](const ScoreMap& v) { return summed_ce_loss(v, y); }, x));
    worst[1] = std::max(worst[1], fd_relative_error([&](const ScoreMap& v) { return bce_loss(v, y); }, x));
    worst[2] = std::max(worst[2], fd_relative_error([&](const ScoreMap& v) { return mse_constant_loss(v, y, c); }, x));
  }
  MESSAGE("worst relative errors: ", worst[0], " ", worst[1], " ", worst[2]);
  for (double e : worst) {
    CHECK(e <= 1e-4);
    CHECK(e <= 1e-6);
  }
}

TEST_CASE("cursor loss dispatch") {
  std::mt19937_64 rng(5);
  const ScoreMap x = random_map(rng, 4, 4);
  const TargetMask y = random_mask(rng, 4, 4);
  CHECK(cursor_loss(CursorLoss::summed_ce, x, y).loss == summed_ce_loss(x, y).loss);
  CHECK(cursor_loss(CursorLoss::bce, x, y).loss == bce_loss(x, y).loss);
  CHECK(cursor_loss(CursorLoss::mse, x, y).loss == mse_constant_loss(x, y, target_constant(4, 4, 0.999)).loss);
  for (CursorLoss l : {CursorLoss::summed_ce, CursorLoss::bce, CursorLoss::mse})
    CHECK(cursor_loss_from_string(to_string(l)) == l);
  CHECK_THROWS_AS(cursor_loss_from_string("l1"), Error);
}

TEST_CASE("sample_pixel") {
  std::mt19937_64 rng(1);
  CHECK(sample_pixel(ScoreMap(5, 6, 0.3), SampleMode::argmax, rng) == Pixel{0, 0});
  ScoreMap x(5, 6, 0.0);
  x.at(3, 2) = 1;
  x.at(3, 4) = 1;
  x.at(4, 0) = 1;
  CHECK(sample_pixel(x, SampleMode::argmax, rng) == Pixel{3, 2});

  std::mt19937_64 a(77), b(77);
  for (int k = 0; k < 20; ++k) CHECK(sample_pixel(x, SampleMode::stochastic, a) == sample_pixel(x, SampleMode::stochastic, b));

  const double c = target_constant(128, 128, 0.999);
  ScoreMap big(128, 128, -c);
  big.at(64, 10) = c;
  int hits = 0;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) hits += sample_pixel(big, SampleMode::stochastic, rng) == Pixel{64, 10};
  CHECK(std::abs(hits / double(draws) - 0.999) <= 0.003);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "greenspoof/errors.hpp"
#include "greenspoof/metrics.hpp"
#include "oracles.hpp"

using namespace greenspoof;
using greenspoof::metrics::ScoredSet;

namespace {

constexpr Label B = Label::bonafide;
constexpr Label S = Label::spoof;

}  // namespace

TEST_CASE("separable pair reaches the zero-error corner") {
  const ScoredSet s({0.9, 0.1}, {B, S});
  const auto det = metrics::det_curve(s);
  CHECK(std::ranges::any_of(det, [](const auto& p) { return p.fpr == 0.0 && p.fnr == 0.0; }));
  CHECK(det.front().threshold == -std::numeric_limits<double>::infinity());
  CHECK(det.back().threshold == std::numeric_limits<double>::infinity());
}

TEST_CASE("all scores equal gives two operating points") {
  const ScoredSet s({0.3, 0.3, 0.3, 0.3}, {B, S, S, B});
  const auto det = metrics::det_curve(s);
  std::vector<std::pair<double, double>> distinct;
  for (const auto& p : det) distinct.emplace_back(p.fpr, p.fnr);
  std::ranges::sort(distinct);
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  CHECK(distinct == std::vector<std::pair<double, double>>{{0.0, 1.0}, {1.0, 0.0}});
  CHECK(metrics::eer(s) == 0.5);
}

TEST_CASE("DET points match brute-force counting") {
  std::mt19937_64 rng(21);
  const auto set = oracles::random_scored_set(rng, 200, 200);
  const ScoredSet s(set.scores, set.labels);
  for (const auto& p : metrics::det_curve(s)) {
    const auto [fpr, fnr] = oracles::rates_at(set.scores, set.labels, p.threshold);
    CHECK(p.fpr == fpr);
    CHECK(p.fnr == fnr);
  }
}

TEST_CASE("EER examples") {
  CHECK(metrics::eer(ScoredSet({0.9, 0.8, 0.2, 0.1}, {B, B, S, S})) == 0.0);
  CHECK(metrics::eer(ScoredSet({0.9, 0.8, 0.2, 0.1}, {B, S, B, S})) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(oracles::eer(std::vector{0.9, 0.8, 0.2, 0.1}, std::vector{B, S, B, S}) == doctest::Approx(0.5));
}

TEST_CASE("EER matches the threshold-sweep oracle") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 300; ++i) {
    const auto set = oracles::random_scored_set(rng, 2, 120);
    const double lib = metrics::eer(ScoredSet(set.scores, set.labels));
    CHECK(std::abs(lib - oracles::eer(set.scores, set.labels)) <= 1e-12);
  }
}

TEST_CASE("EER is invariant under increasing maps") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const auto set = oracles::random_scored_set(rng, 2, 100);
    const double base = metrics::eer(ScoredSet(set.scores, set.labels));
    auto affine = set.scores;
    for (auto& x : affine) x = 3.0 * x + 7.0;
    CHECK(metrics::eer(ScoredSet(affine, set.labels)) == base);
  }
}

TEST_CASE("swapping labels and negating scores preserves EER") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50; ++i) {
    auto set = oracles::random_scored_set(rng, 2, 100);
    const double base = metrics::eer(ScoredSet(set.scores, set.labels));
    for (auto& x : set.scores) x = -x;
    for (auto& l : set.labels) l = l == B ? S : B;
    CHECK(metrics::eer(ScoredSet(set.scores, set.labels)) == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("F1 conventions") {
  const ScoredSet sep({0.9, 0.8, 0.2, 0.1}, {B, B, S, S});
  CHECK(metrics::f1(sep, 0.5) == 1.0);
  // Scores at or above the threshold are bonafide.
  const ScoredSet mixed({0.9, 0.8, 0.2, 0.1}, {B, S, B, S});
  const auto c = metrics::confusion(mixed, 0.5);
  CHECK(c.tp == 1);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
  CHECK(c.tn == 1);
  CHECK(metrics::f1(mixed, 0.5) == 0.5);
  CHECK(metrics::f1(sep, 2.0) == 0.0);
  CHECK(metrics::confusion(sep, 0.8).tp == 2);
}

TEST_CASE("scored set validation") {
  CHECK_THROWS_AS(ScoredSet({0.1, 0.2}, {B, B}), UsageError);
  CHECK_THROWS_AS(ScoredSet({0.1}, {B, S}), UsageError);
  CHECK_THROWS_AS(ScoredSet({0.1, NAN}, {B, S}), UsageError);
  CHECK_THROWS_AS(ScoredSet({0.1, 0.2}, {B, Label::unknown}), UsageError);
}

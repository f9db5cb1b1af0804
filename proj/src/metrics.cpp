#include "greenspoof/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

namespace greenspoof::metrics {

ScoredSet::ScoredSet(std::vector<double> scores, std::vector<Label> labels)
    : scores_(std::move(scores)), labels_(std::move(labels)) {
  if (scores_.size() != labels_.size()) {
    throw UsageError(fmt::format("ScoredSet: {} scores but {} labels", scores_.size(), labels_.size()));
  }
  for (std::size_t i = 0; i < scores_.size(); ++i) {
    if (!std::isfinite(scores_[i])) throw UsageError(fmt::format("ScoredSet: non-finite score at {}", i));
    if (labels_[i] == Label::unknown) throw UsageError(fmt::format("ScoredSet: unknown label at {}", i));
    if (labels_[i] == Label::bonafide) ++n_bona_;
  }
  if (n_bona_ == 0 || n_bona_ == scores_.size()) {
    throw UsageError("ScoredSet: need at least one bonafide and one spoof");
  }
}

std::vector<DetPoint> det_curve(const ScoredSet& s) {
  const std::size_t n = s.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::ranges::sort(order, [&](std::size_t a, std::size_t b) { return s.scores()[a] < s.scores()[b]; });

  const double n_bona = static_cast<double>(s.bonafide_count());
  const double n_spoof = static_cast<double>(s.spoof_count());
  constexpr double inf = std::numeric_limits<double>::infinity();

  // Walking thresholds upward: everything strictly below the threshold is
  // rejected.
  std::vector<DetPoint> points;
  points.push_back({-inf, 1.0, 0.0});
  std::size_t rejected_bona = 0;
  std::size_t rejected_spoof = 0;
  std::size_t i = 0;
  while (i < n) {
    const double t = s.scores()[order[i]];
    points.push_back({t, (n_spoof - static_cast<double>(rejected_spoof)) / n_spoof,
                      static_cast<double>(rejected_bona) / n_bona});
    for (; i < n && s.scores()[order[i]] == t; ++i) {
      if (s.labels()[order[i]] == Label::bonafide) {
        ++rejected_bona;
      } else {
        ++rejected_spoof;
      }
    }
  }
  points.push_back({inf, 0.0, 1.0});
  return points;
}

double eer(const ScoredSet& s) {
  const auto points = det_curve(s);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = points[i].fnr - points[i].fpr;
    if (d == 0.0) return points[i].fpr;
    if (d > 0.0) {
      // points[0] has d = -1, so i >= 1 here.
      const auto& a = points[i - 1];
      const auto& b = points[i];
      const double da = a.fnr - a.fpr;
      const double t = da / (da - d);
      return a.fpr + t * (b.fpr - a.fpr);
    }
  }
  return points.back().fpr;  // unreachable: the +inf point has d = 1
}

Confusion confusion(const ScoredSet& s, double threshold) {
  Confusion c;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool predicted_bona = s.scores()[i] >= threshold;
    const bool is_bona = s.labels()[i] == Label::bonafide;
    if (predicted_bona && is_bona) ++c.tp;
    else if (predicted_bona) ++c.fp;
    else if (is_bona) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1(const ScoredSet& s, double threshold) {
  const auto c = confusion(s, threshold);
  if (c.tp + c.fp == 0 || c.tp == 0) return 0.0;
  const double precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  const double recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace greenspoof::metrics

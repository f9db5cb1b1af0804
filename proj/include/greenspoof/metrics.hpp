#pragma once

// Detection metrics with bonafide as the positive class. The decision rule
// everywhere is: predict bonafide iff score >= threshold.

#include <cstddef>
#include <span>
#include <vector>

#include "greenspoof/embedding_store.hpp"

namespace greenspoof::metrics {

/// Scores with bonafide/spoof labels; at least one of each, all finite.
class ScoredSet {
 public:
  ScoredSet(std::vector<double> scores, std::vector<Label> labels);

  std::span<const double> scores() const { return scores_; }
  std::span<const Label> labels() const { return labels_; }
  std::size_t size() const { return scores_.size(); }
  std::size_t bonafide_count() const { return n_bona_; }
  std::size_t spoof_count() const { return scores_.size() - n_bona_; }

 private:
  std::vector<double> scores_;
  std::vector<Label> labels_;
  std::size_t n_bona_ = 0;
};

struct DetPoint {
  double threshold;
  double fpr;
  double fnr;
};

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;
};

/// Points at -inf, every distinct score, and +inf, thresholds ascending.
std::vector<DetPoint> det_curve(const ScoredSet& s);

/// Equal error rate as a fraction, linearly interpolated between adjacent
/// operating points where fnr - fpr changes sign.
double eer(const ScoredSet& s);

Confusion confusion(const ScoredSet& s, double threshold);

/// F1 of the bonafide class; 0 when nothing is predicted positive.
double f1(const ScoredSet& s, double threshold);

}  // namespace greenspoof::metrics

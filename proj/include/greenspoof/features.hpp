#pragma once

#include <span>
#include <string>
#include <vector>

#include "greenspoof/embedding_store.hpp"

namespace greenspoof {

/// Frame-averaged utterance embedding, 64-bit.
struct PooledVector {
  std::string utt_id;
  int layer = 0;
  std::vector<double> values;

  bool operator==(const PooledVector&) const = default;
};

/// Column mean over frames, accumulated in double.
PooledVector pool(const EmbeddingRecord& record);
std::vector<PooledVector> pool_all(std::span<const EmbeddingRecord> records);
LayerDataset<PooledVector> pool_dataset(const LayerDataset<EmbeddingRecord>& dataset);

/// Pooled vector as a frames=1 record for the pooled GAIE cache (narrows to float).
EmbeddingRecord to_record(const PooledVector& v, Label label = Label::unknown);

inline constexpr double kScaleFloor = 1e-12;

/// Per-dimension z-scoring fitted on the training partition.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // population std-dev, floored at kScaleFloor

  std::size_t dim() const { return mean.size(); }
  static Standardizer identity(std::size_t dim);
};

Standardizer fit_standardizer(std::span<const PooledVector> train);
Standardizer fit_standardizer(const LayerDataset<PooledVector>& train);
PooledVector transform(const Standardizer& s, const PooledVector& v);
LayerDataset<PooledVector> transform(const Standardizer& s, LayerDataset<PooledVector> dataset);

}  // namespace greenspoof

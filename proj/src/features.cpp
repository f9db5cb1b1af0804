#include "greenspoof/features.hpp"

#include <cmath>

#include <fmt/format.h>

namespace greenspoof {

PooledVector pool(const EmbeddingRecord& record) {
  if (record.frames == 0) throw UsageError(fmt::format("pool: record {} has no frames", record.utt_id));
  PooledVector out{record.utt_id, record.layer, std::vector<double>(record.dim, 0.0)};
  for (std::size_t i = 0; i < record.frames; ++i) {
    auto row = record.row(i);
    for (std::size_t j = 0; j < record.dim; ++j) out.values[j] += static_cast<double>(row[j]);
  }
  const double inv = 1.0 / static_cast<double>(record.frames);
  for (double& v : out.values) v *= inv;
  return out;
}

std::vector<PooledVector> pool_all(std::span<const EmbeddingRecord> records) {
  std::vector<PooledVector> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(pool(r));
  return out;
}

LayerDataset<PooledVector> pool_dataset(const LayerDataset<EmbeddingRecord>& dataset) {
  LayerDataset<PooledVector> out{dataset.layer, dataset.partition, {}};
  out.items.reserve(dataset.size());
  for (const auto& item : dataset.items) out.items.push_back({item.utt_id, item.label, pool(item.payload)});
  return out;
}

EmbeddingRecord to_record(const PooledVector& v, Label label) {
  EmbeddingRecord r;
  r.utt_id = v.utt_id;
  r.layer = v.layer;
  r.frames = 1;
  r.dim = static_cast<std::uint32_t>(v.values.size());
  r.label = label;
  r.values.assign(v.values.begin(), v.values.end());
  return r;
}

Standardizer Standardizer::identity(std::size_t dim) {
  return Standardizer{std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)};
}

Standardizer fit_standardizer(std::span<const PooledVector> train) {
  if (train.size() < 2) throw UsageError("fit_standardizer: need at least 2 vectors");
  const std::size_t dim = train.front().values.size();
  Standardizer s{std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  for (const auto& v : train) {
    if (v.values.size() != dim) throw UsageError("fit_standardizer: inconsistent vector lengths");
    for (std::size_t j = 0; j < dim; ++j) s.mean[j] += v.values[j];
  }
  const double n = static_cast<double>(train.size());
  for (double& m : s.mean) m /= n;
  // second pass: squared deviations about the mean
  for (const auto& v : train) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = v.values[j] - s.mean[j];
      s.scale[j] += d * d;
    }
  }
  for (double& sc : s.scale) sc = std::max(std::sqrt(sc / n), kScaleFloor);
  return s;
}

Standardizer fit_standardizer(const LayerDataset<PooledVector>& train) {
  std::vector<PooledVector> vs;
  vs.reserve(train.size());
  for (const auto& it : train.items) vs.push_back(it.payload);
  return fit_standardizer(vs);
}

PooledVector transform(const Standardizer& s, const PooledVector& v) {
  if (v.values.size() != s.dim()) {
    throw UsageError(fmt::format("transform: vector length {} != standardizer dim {}", v.values.size(), s.dim()));
  }
  PooledVector out{v.utt_id, v.layer, std::vector<double>(v.values.size())};
  for (std::size_t j = 0; j < out.values.size(); ++j) out.values[j] = (v.values[j] - s.mean[j]) / s.scale[j];
  return out;
}

LayerDataset<PooledVector> transform(const Standardizer& s, LayerDataset<PooledVector> dataset) {
  for (auto& it : dataset.items) it.payload = transform(s, it.payload);
  return dataset;
}

}  // namespace greenspoof

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "greenspoof/models.hpp"
#include "greenspoof/serialize.hpp"

namespace greenspoof {

KnnModel::KnnModel(RowMatrix x, std::vector<std::uint8_t> is_bona, int k)
    : x_(std::move(x)), is_bona_(std::move(is_bona)), k_(k) {
  if (k_ < 1) throw UsageError("knn: k must be >= 1");
  if (static_cast<std::size_t>(x_.rows()) != is_bona_.size()) throw UsageError("knn: label count mismatch");
  if (static_cast<std::size_t>(k_) > is_bona_.size()) {
    throw UsageError(fmt::format("knn: k={} exceeds training size {}", k_, is_bona_.size()));
  }
}

double KnnModel::score(std::span<const double> x) const {
  const auto n = static_cast<std::size_t>(x_.rows());
  const auto d = static_cast<std::size_t>(x_.cols());
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x_.data() + i * d;
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double t = row[j] - x[j];
      s += t * t;
    }
    dist[i] = {s, i};
  }
  // lexicographic (distance, index) order resolves ties to the lower index
  const auto kth = dist.begin() + k_;
  std::nth_element(dist.begin(), kth - 1, dist.end());
  std::size_t bona = 0;
  for (auto it = dist.begin(); it != kth; ++it) bona += is_bona_[it->second];
  return static_cast<double>(bona) / k_;
}

void KnnModel::save(BinaryWriter& out) const {
  out.u32(static_cast<std::uint32_t>(k_));
  out.matrix(x_);
  for (auto b : is_bona_) out.u8(b);
}

std::unique_ptr<KnnModel> KnnModel::load(BinaryReader& in) {
  const auto k = static_cast<int>(in.u32());
  auto x = in.matrix();
  std::vector<std::uint8_t> bona(static_cast<std::size_t>(x.rows()));
  for (auto& b : bona) b = in.u8();
  return std::make_unique<KnnModel>(std::move(x), std::move(bona), k);
}

}  // namespace greenspoof

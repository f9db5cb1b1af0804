#pragma once

// Synthetic data for tests: Gaussian blobs, GAIE files on disk, scratch dirs.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "greenspoof/classifiers.hpp"
#include "greenspoof/embedding_store.hpp"
#include "greenspoof/features.hpp"

namespace testsupport {

using namespace greenspoof;

inline std::string utt_name(const std::string& prefix, std::size_t i) { return fmt::format("{}_{:06d}", prefix, i); }

/// Two isotropic unit-variance Gaussians at +mu (bonafide) and -mu (spoof),
/// mu spread evenly over all dims with norm `separation`.
struct BlobSpec {
  std::size_t dim = 8;
  double separation = 3.0;
  double bona_fraction = 0.5;
  std::uint64_t seed = 1;
  int layer = 0;
};

inline LayerDataset<PooledVector> gaussian_blobs(std::size_t n, const BlobSpec& spec, Partition partition,
                                                 const std::string& prefix) {
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  const double m = spec.separation / std::sqrt(static_cast<double>(spec.dim));
  const auto n_bona = static_cast<std::size_t>(std::llround(spec.bona_fraction * static_cast<double>(n)));
  LayerDataset<PooledVector> ds;
  ds.layer = spec.layer;
  ds.partition = partition;
  for (std::size_t i = 0; i < n; ++i) {
    const bool bona = i < n_bona;
    PooledVector v{utt_name(prefix, i), spec.layer, std::vector<double>(spec.dim)};
    for (auto& x : v.values) x = normal(rng) + (bona ? m : -m);
    ds.items.push_back({v.utt_id, bona ? Label::bonafide : Label::spoof, std::move(v)});
  }
  return ds;
}

inline std::vector<ProtocolEntry> protocol_for(const LayerDataset<PooledVector>& ds) {
  std::vector<ProtocolEntry> out;
  for (const auto& it : ds.items) {
    ProtocolEntry e{"SPK", it.utt_id, std::nullopt, it.label};
    if (it.label == Label::spoof) e.attack_id = "A01";
    out.push_back(e);
  }
  return out;
}

inline void write_protocol(const std::filesystem::path& path, const std::vector<ProtocolEntry>& entries) {
  std::ofstream out(path);
  for (const auto& e : entries) {
    out << e.speaker_id << ' ' << e.utt_id << " - " << e.attack_id.value_or("-") << ' '
        << (e.label == Label::bonafide ? "bonafide" : "spoof") << '\n';
  }
}

/// Writes the dataset as a frames=1 GAIE file (float32 transport).
inline void write_gaie(const std::filesystem::path& path, const LayerDataset<PooledVector>& ds) {
  std::vector<EmbeddingRecord> records;
  for (const auto& it : ds.items) records.push_back(to_record(it.payload, it.label));
  GaieHeader header{static_cast<std::uint32_t>(ds.items.front().payload.values.size()),
                    static_cast<std::uint16_t>(ds.layer)};
  write_embeddings(records, header, path);
}

inline std::vector<EmbeddingRecord> random_records(std::size_t n, std::uint32_t dim, int layer, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> frames(1, 7);
  std::uniform_int_distribution<int> label(0, 2);
  std::normal_distribution<float> normal(0.0f, 3.0f);
  std::vector<EmbeddingRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    EmbeddingRecord r;
    r.utt_id = utt_name("R", i);
    r.layer = layer;
    r.dim = dim;
    r.frames = frames(rng);
    r.values.resize(static_cast<std::size_t>(r.frames) * dim);
    for (auto& x : r.values) x = normal(rng);
    const int l = label(rng);
    r.label = l == 0 ? Label::spoof : l == 1 ? Label::bonafide : Label::unknown;
    out.push_back(std::move(r));
  }
  return out;
}

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / fmt::format("greenspoof_{}_{:08x}", tag, rd());
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testsupport

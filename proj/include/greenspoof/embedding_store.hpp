#pragma once

// GAIE embedding files, dataset protocols, and labeled per-layer datasets.
//
// GAIE layout (little-endian):
//   "GAIE" | version u32 = 1 | dim u32 | layer u16 | record_count u64
//   per record: utt_id_len u16 | utt_id bytes | label u8 | frames u32 |
//               frames*dim binary32 values, row-major
//
// Labels in GAIE files are informational only (255 = unknown for inference
// dumps). The protocol file is the single source of truth for labels.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "greenspoof/errors.hpp"

namespace greenspoof {

enum class Label : std::uint8_t { spoof = 0, bonafide = 1, unknown = 255 };

std::string_view to_string(Label label);

enum class Partition { train, dev, eval };

std::string_view to_string(Partition partition);
Partition parse_partition(std::string_view text);

struct ProtocolEntry {
  std::string speaker_id;
  std::string utt_id;
  std::optional<std::string> attack_id;  // none for bonafide
  Label label = Label::unknown;

  bool operator==(const ProtocolEntry&) const = default;
};

/// Thrown by parse_protocol; carries the 1-based line number.
class ProtocolError : public FormatError {
 public:
  ProtocolError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Parses an ASVspoof-style protocol: "speaker utt_id - attack|- key".
/// Blank lines are skipped.
std::vector<ProtocolEntry> parse_protocol(std::istream& in);
std::vector<ProtocolEntry> parse_protocol_file(const std::filesystem::path& path);

inline constexpr std::uint32_t kGaieVersion = 1;
inline constexpr int kMaxLayer = 12;
inline constexpr std::size_t kGaieHeaderBytes = 4 + 4 + 4 + 2 + 8;
/// utt_id_len + label + frames
inline constexpr std::size_t kGaieRecordOverheadBytes = 2 + 1 + 4;

/// One utterance's frame-level embedding matrix for one layer.
struct EmbeddingRecord {
  std::string utt_id;
  int layer = 0;
  std::uint32_t frames = 0;
  std::uint32_t dim = 0;
  std::vector<float> values;  // frames x dim, row-major
  Label label = Label::unknown;

  std::span<const float> row(std::size_t frame) const {
    return std::span<const float>(values).subspan(frame * dim, dim);
  }
  bool operator==(const EmbeddingRecord&) const = default;
};

struct GaieHeader {
  std::uint32_t dim = 0;
  std::uint16_t layer = 0;
};

struct EmbeddingFile {
  GaieHeader header;
  std::vector<EmbeddingRecord> records;
};

EmbeddingFile read_embedding_file(std::istream& in);
EmbeddingFile read_embedding_file(const std::filesystem::path& path);
std::vector<EmbeddingRecord> read_embeddings(std::istream& in);
std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path);

/// Header is taken from the first record; the list must be non-empty.
void write_embeddings(std::span<const EmbeddingRecord> records, std::ostream& out);
/// Explicit header, so empty files can be written.
void write_embeddings(std::span<const EmbeddingRecord> records, const GaieHeader& header,
                      std::ostream& out);
void write_embeddings(std::span<const EmbeddingRecord> records, const GaieHeader& header,
                      const std::filesystem::path& path);

/// Exact on-disk size of a GAIE file holding `records`.
std::size_t gaie_file_size(std::span<const EmbeddingRecord> records);

// ---------------------------------------------------------------------------
// Labeled datasets

template <class Payload>
struct DatasetItem {
  std::string utt_id;
  Label label = Label::unknown;
  Payload payload;
};

/// Features joined with labels for one (layer, partition); sorted by utt_id.
template <class Payload>
struct LayerDataset {
  int layer = 0;
  Partition partition = Partition::train;
  std::vector<DatasetItem<Payload>> items;

  std::size_t size() const { return items.size(); }
  bool fully_labeled() const {
    return std::ranges::all_of(items, [](const auto& it) { return it.label != Label::unknown; });
  }
};

class AssemblyError : public FormatError {
 public:
  AssemblyError(const std::string& what, std::vector<std::string> offenders);
  const std::vector<std::string>& offenders() const { return offenders_; }

 private:
  std::vector<std::string> offenders_;
};

namespace detail {
std::string join_ids(const std::vector<std::string>& ids);
}

/// Inner join of payloads (anything with `utt_id` and `layer`) with protocol
/// entries. Records without a protocol entry are an error unless
/// `allow_unlabeled` is set and the partition is eval, in which case they are
/// kept with Label::unknown.
template <class Payload>
LayerDataset<Payload> assemble(std::vector<Payload> records, std::span<const ProtocolEntry> entries,
                               Partition partition, bool allow_unlabeled = false) {
  std::map<std::string_view, const ProtocolEntry*> by_id;
  std::vector<std::string> dup_entries;
  for (const auto& e : entries) {
    if (!by_id.emplace(e.utt_id, &e).second) dup_entries.push_back(e.utt_id);
  }
  if (!dup_entries.empty()) {
    auto message = "duplicate utt_id in protocol: " + detail::join_ids(dup_entries);
    throw AssemblyError(message, std::move(dup_entries));
  }

  std::ranges::sort(records, {}, [](const Payload& r) -> const std::string& { return r.utt_id; });
  std::vector<std::string> dup_records;
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].utt_id == records[i - 1].utt_id &&
        (dup_records.empty() || dup_records.back() != records[i].utt_id)) {
      dup_records.push_back(records[i].utt_id);
    }
  }
  if (!dup_records.empty()) {
    auto message = "duplicate utt_id in embeddings: " + detail::join_ids(dup_records);
    throw AssemblyError(message, std::move(dup_records));
  }

  const bool keep_unlabeled = allow_unlabeled && partition == Partition::eval;
  LayerDataset<Payload> out;
  out.partition = partition;
  out.layer = records.empty() ? 0 : records.front().layer;
  std::vector<std::string> missing;
  for (auto& r : records) {
    auto it = by_id.find(r.utt_id);
    if (it == by_id.end()) {
      if (!keep_unlabeled) {
        missing.push_back(r.utt_id);
        continue;
      }
      out.items.push_back({r.utt_id, Label::unknown, std::move(r)});
    } else {
      out.items.push_back({r.utt_id, it->second->label, std::move(r)});
    }
  }
  if (!missing.empty()) {
    auto message = "no protocol label for: " + detail::join_ids(missing);
    throw AssemblyError(message, std::move(missing));
  }
  return out;
}

}  // namespace greenspoof

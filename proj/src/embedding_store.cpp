#include "greenspoof/embedding_store.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace greenspoof {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::spoof: return "spoof";
    case Label::bonafide: return "bonafide";
    case Label::unknown: return "unknown";
  }
  return "unknown";
}

std::string_view to_string(Partition partition) {
  switch (partition) {
    case Partition::train: return "train";
    case Partition::dev: return "dev";
    case Partition::eval: return "eval";
  }
  return "train";
}

Partition parse_partition(std::string_view text) {
  if (text == "train") return Partition::train;
  if (text == "dev") return Partition::dev;
  if (text == "eval") return Partition::eval;
  throw UsageError(fmt::format("unknown partition '{}'", text));
}

ProtocolError::ProtocolError(std::size_t line, const std::string& what)
    : FormatError(fmt::format("protocol line {}: {}", line, what)), line_(line) {}

std::vector<ProtocolEntry> parse_protocol(std::istream& in) {
  std::vector<ProtocolEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(std::move(t));
    if (tok.empty()) continue;
    if (tok.size() != 5) {
      throw ProtocolError(lineno, fmt::format("field count {} (expected 5)", tok.size()));
    }
    ProtocolEntry e;
    e.speaker_id = tok[0];
    e.utt_id = tok[1];
    if (tok[4] == "bonafide") {
      e.label = Label::bonafide;
    } else if (tok[4] == "spoof") {
      e.label = Label::spoof;
    } else {
      throw ProtocolError(lineno, fmt::format("unknown key '{}'", tok[4]));
    }
    if (tok[3] != "-") e.attack_id = tok[3];
    if (e.attack_id.has_value() == (e.label == Label::bonafide)) {
      throw ProtocolError(lineno, "attack field must be '-' exactly for bonafide entries");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ProtocolEntry> parse_protocol_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::filesystem::filesystem_error("no such input", path, std::make_error_code(std::errc::no_such_file_or_directory));
  return parse_protocol(in);
}

// ---------------------------------------------------------------------------
// GAIE

namespace {

constexpr std::array<char, 4> kMagic = {'G', 'A', 'I', 'E'};

template <class T>
void put_le(std::ostream& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto bits = static_cast<U>(value);
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(buf.data(), buf.size());
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Returns false on short read.
  bool bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in_.gcount()) == n;
  }

  template <class T>
  bool le(T& value) {
    std::array<unsigned char, sizeof(T)> buf{};
    if (!bytes(reinterpret_cast<char*>(buf.data()), buf.size())) return false;
    std::make_unsigned_t<T> bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
    }
    value = static_cast<T>(bits);
    return true;
  }

  bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
};

Label label_from_byte(std::uint8_t b, std::size_t index) {
  switch (b) {
    case 0: return Label::spoof;
    case 1: return Label::bonafide;
    case 255: return Label::unknown;
    default: throw FormatError(fmt::format("record {}: invalid label byte {}", index, b));
  }
}

}  // namespace

EmbeddingFile read_embedding_file(std::istream& in) {
  Reader rd(in);
  std::array<char, 4> magic{};
  if (!rd.bytes(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("bad magic (not a GAIE file)");
  }
  std::uint32_t version = 0;
  EmbeddingFile file;
  std::uint64_t count = 0;
  if (!rd.le(version)) throw FormatError("truncated header");
  if (version != kGaieVersion) throw FormatError(fmt::format("unsupported GAIE version {}", version));
  if (!rd.le(file.header.dim) || !rd.le(file.header.layer) || !rd.le(count)) {
    throw FormatError("truncated header");
  }
  if (file.header.dim == 0) throw FormatError("header dim is 0");
  if (file.header.layer > kMaxLayer) {
    throw FormatError(fmt::format("header layer {} out of range [0,{}]", file.header.layer, kMaxLayer));
  }

  const std::uint32_t dim = file.header.dim;
  for (std::uint64_t i = 0; i < count; ++i) {
    auto truncated = [i] { return FormatError(fmt::format("record {}: truncated payload", i)); };
    EmbeddingRecord r;
    r.layer = file.header.layer;
    r.dim = dim;
    std::uint16_t id_len = 0;
    if (!rd.le(id_len)) throw truncated();
    r.utt_id.resize(id_len);
    if (!rd.bytes(r.utt_id.data(), id_len)) throw truncated();
    if (r.utt_id.empty()) throw FormatError(fmt::format("record {}: empty utt_id", i));
    std::uint8_t label = 0;
    if (!rd.le(label)) throw truncated();
    r.label = label_from_byte(label, i);
    if (!rd.le(r.frames)) throw truncated();
    if (r.frames == 0) throw FormatError(fmt::format("record {} ({}): zero frames", i, r.utt_id));
    const std::size_t n = static_cast<std::size_t>(r.frames) * dim;
    std::vector<char> raw(n * 4);
    if (!rd.bytes(raw.data(), raw.size())) throw truncated();
    r.values.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(raw[4 * k + b])) << (8 * b);
      }
      const float v = std::bit_cast<float>(bits);
      if (!std::isfinite(v)) {
        throw FormatError(fmt::format("record {} ({}): non-finite value at offset {}", i, r.utt_id, k));
      }
      r.values[k] = v;
    }
    file.records.push_back(std::move(r));
  }
  if (!rd.at_eof()) throw FormatError(fmt::format("trailing bytes after {} records", count));
  return file;
}

EmbeddingFile read_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::filesystem::filesystem_error("no such input", path,
                                            std::make_error_code(std::errc::no_such_file_or_directory));
  }
  return read_embedding_file(in);
}

std::vector<EmbeddingRecord> read_embeddings(std::istream& in) { return read_embedding_file(in).records; }

std::vector<EmbeddingRecord> read_embeddings(const std::filesystem::path& path) {
  return read_embedding_file(path).records;
}

void write_embeddings(std::span<const EmbeddingRecord> records, std::ostream& out) {
  if (records.empty()) throw UsageError("write_embeddings: empty record list needs an explicit header");
  write_embeddings(records, GaieHeader{records.front().dim, static_cast<std::uint16_t>(records.front().layer)},
                   out);
}

void write_embeddings(std::span<const EmbeddingRecord> records, const GaieHeader& header,
                      std::ostream& out) {
  if (header.dim == 0) throw UsageError("write_embeddings: dim must be positive");
  if (header.layer > kMaxLayer) throw UsageError("write_embeddings: layer out of range");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.dim != header.dim) {
      throw UsageError(fmt::format("write_embeddings: record {} has dim {}, file dim {}", i, r.dim, header.dim));
    }
    if (r.layer != header.layer) {
      throw UsageError(fmt::format("write_embeddings: record {} has layer {}, file layer {}", i, r.layer,
                                   header.layer));
    }
    if (r.utt_id.empty() || r.utt_id.size() > 0xFFFF) {
      throw UsageError(fmt::format("write_embeddings: record {} has invalid utt_id length", i));
    }
    if (r.frames == 0 || r.values.size() != static_cast<std::size_t>(r.frames) * r.dim) {
      throw UsageError(fmt::format("write_embeddings: record {} ({}) has inconsistent shape", i, r.utt_id));
    }
    if (!std::ranges::all_of(r.values, [](float v) { return std::isfinite(v); })) {
      throw UsageError(fmt::format("write_embeddings: record {} ({}) has non-finite values", i, r.utt_id));
    }
  }

  out.write(kMagic.data(), kMagic.size());
  put_le(out, kGaieVersion);
  put_le(out, header.dim);
  put_le(out, header.layer);
  put_le(out, static_cast<std::uint64_t>(records.size()));
  for (const auto& r : records) {
    put_le(out, static_cast<std::uint16_t>(r.utt_id.size()));
    out.write(r.utt_id.data(), static_cast<std::streamsize>(r.utt_id.size()));
    put_le(out, static_cast<std::uint8_t>(r.label));
    put_le(out, r.frames);
    std::vector<char> raw(r.values.size() * 4);
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      const auto bits = std::bit_cast<std::uint32_t>(r.values[k]);
      for (int b = 0; b < 4; ++b) raw[4 * k + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
  }
  if (!out) throw RunError("write_embeddings: stream write failed");
}

void write_embeddings(std::span<const EmbeddingRecord> records, const GaieHeader& header,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RunError(fmt::format("cannot open '{}' for writing", path.string()));
  write_embeddings(records, header, out);
}

std::size_t gaie_file_size(std::span<const EmbeddingRecord> records) {
  std::size_t size = kGaieHeaderBytes;
  for (const auto& r : records) size += kGaieRecordOverheadBytes + r.utt_id.size() + 4 * r.values.size();
  return size;
}

AssemblyError::AssemblyError(const std::string& what, std::vector<std::string> offenders)
    : FormatError(what), offenders_(std::move(offenders)) {}

namespace detail {
std::string join_ids(const std::vector<std::string>& ids) {
  constexpr std::size_t kShown = 10;
  std::string out;
  for (std::size_t i = 0; i < ids.size() && i < kShown; ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  if (ids.size() > kShown) out += fmt::format(" (+{} more)", ids.size() - kShown);
  return out;
}
}  // namespace detail

}  // namespace greenspoof

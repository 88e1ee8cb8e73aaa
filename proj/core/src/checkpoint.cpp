#include "mpa/tensor/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace mpa::tensor {

namespace {

constexpr std::array<char, 8> kMagic = {'M', 'P', 'A', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(U)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<U>(bytes);
  }
  return v;
}

template <typename U>
void put(std::ostream& os, U v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <typename U>
U get(std::istream& is) {
  U v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(U));
  if (!is) throw CheckpointError("checkpoint truncated");
  return to_little(v);
}

}  // namespace

const CheckpointEntry* Checkpoint::find(const std::string& path) const {
  for (const auto& e : entries) {
    if (e.path == path) return &e;
  }
  return nullptr;
}

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& checkpoint) {
  if (checkpoint.value_bytes != 4 && checkpoint.value_bytes != 8) {
    throw CheckpointError("value width must be 4 or 8 bytes");
  }
  std::ofstream os(file, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open " + file.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, checkpoint.format_version);
  put<std::uint32_t>(os, checkpoint.value_bytes);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(checkpoint.entries.size()));
  for (const auto& e : checkpoint.entries) {
    if (shape_numel(e.shape) != e.values.size()) {
      throw CheckpointError("entry " + e.path + " has inconsistent shape");
    }
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.kind));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.path.size()));
    os.write(e.path.data(), static_cast<std::streamsize>(e.path.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(e.shape.size()));
    for (auto d : e.shape) put<std::uint64_t>(os, d);
    for (double v : e.values) {
      if (checkpoint.value_bytes == 4) {
        put<std::uint32_t>(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      } else {
        put<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
      }
    }
  }
  os.flush();
  if (!os) throw CheckpointError("write failed for " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint " + file.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw CheckpointError(file.string() + " is not a checkpoint file");
  Checkpoint ck;
  ck.format_version = get<std::uint32_t>(is);
  if (ck.format_version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(ck.format_version));
  }
  ck.value_bytes = get<std::uint32_t>(is);
  if (ck.value_bytes != 4 && ck.value_bytes != 8) throw CheckpointError("bad value width");
  const auto count = get<std::uint32_t>(is);
  ck.entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointEntry e;
    const auto kind = get<std::uint32_t>(is);
    if (kind > 1) throw CheckpointError("bad entry kind");
    e.kind = static_cast<EntryKind>(kind);
    const auto name_len = get<std::uint32_t>(is);
    if (name_len > 4096) throw CheckpointError("entry name too long");
    e.path.resize(name_len);
    is.read(e.path.data(), name_len);
    const auto rank = get<std::uint32_t>(is);
    if (rank == 0 || rank > 8) throw CheckpointError("bad rank for " + e.path);
    std::uint64_t count_values = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      const auto d = get<std::uint64_t>(is);
      if (d == 0 || d > (1ULL << 32)) throw CheckpointError("bad dimension for " + e.path);
      e.shape.push_back(static_cast<std::size_t>(d));
      count_values *= d;
    }
    if (count_values > (1ULL << 32)) throw CheckpointError("entry " + e.path + " too large");
    e.values.resize(static_cast<std::size_t>(count_values));
    for (auto& v : e.values) {
      if (ck.value_bytes == 4) {
        v = std::bit_cast<float>(get<std::uint32_t>(is));
      } else {
        v = std::bit_cast<double>(get<std::uint64_t>(is));
      }
    }
    ck.entries.push_back(std::move(e));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw CheckpointError("trailing bytes after checkpoint entries");
  }
  return ck;
}

}  // namespace mpa::tensor

#pragma once

// Flat binary container for model state.
//
// Layout (all integers little-endian):
//   "MPACKPT\0"           8-byte magic
//   u32 format_version
//   u32 value_bytes        4 (float32) or 8 (float64)
//   u32 entry_count
//   entry_count x {
//     u32 kind             0 = trainable parameter, 1 = buffer (e.g. running stats)
//     u32 name_length, name bytes
//     u32 rank, rank x u64 dims
//     prod(dims) values, IEEE-754 little-endian of value_bytes width
//   }

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpa/tensor/tensor.hpp"

namespace mpa::tensor {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EntryKind : std::uint32_t { parameter = 0, buffer = 1 };

struct CheckpointEntry {
  std::string path;
  EntryKind kind = EntryKind::parameter;
  Shape shape;
  // Held at double precision in memory; float32 files round-trip exactly.
  std::vector<double> values;
};

struct Checkpoint {
  std::uint32_t format_version = kCheckpointVersion;
  std::uint32_t value_bytes = 8;
  std::vector<CheckpointEntry> entries;

  const CheckpointEntry* find(const std::string& path) const;
};

void save_checkpoint(const std::filesystem::path& file, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace mpa::tensor

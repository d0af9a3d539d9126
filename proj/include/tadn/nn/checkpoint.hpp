#pragma once

#include "tadn/precision.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tadn/nn/layers.hpp"

TADN_NAMESPACE_BEGIN
namespace nn {

// Checkpoint container (all integers little-endian):
//
//   char[8]  magic "TADNCKPT"
//   u32      version (= 1)
//   u32      metadata byte length, then "key=value\n" lines
//   u32      parameter count
//   per parameter:
//     u32 name length, name bytes (dot-separated path)
//     u32 rows, u32 cols
//     f32[rows*cols] row-major payload
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::vector<std::pair<std::string, Matrix>> tensors;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

Checkpoint snapshot(const ParameterStore& store);
// Copies every tensor into the store; names and shapes must match exactly.
void restore(ParameterStore& store, const Checkpoint& ckpt);

}  // namespace nn
TADN_NAMESPACE_END

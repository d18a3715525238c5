#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "cflab/types.hpp"

namespace cflab {

// 16-byte header of little-endian uint32 fields (magic, version, rows, cols)
// followed by rows * cols little-endian IEEE-754 doubles in row-major order.
inline constexpr std::uint32_t kCheckpointMagic = 0x4D454643;  // "CFEM"
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const EmbeddingMatrix& embeddings);
void write_checkpoint(const std::filesystem::path& path, const EmbeddingMatrix& embeddings);

// Throws std::runtime_error on a bad header or truncated payload.
EmbeddingMatrix read_checkpoint(std::istream& in);
EmbeddingMatrix read_checkpoint(const std::filesystem::path& path);

}  // namespace cflab

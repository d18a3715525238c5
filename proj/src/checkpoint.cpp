#include "cflab/checkpoint.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace cflab {

namespace {

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes;
  for (std::size_t k = 0; k < sizeof(U); ++k) bytes[k] = static_cast<char>((value >> (8 * k)) & 0xFF);
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) {
    throw std::runtime_error("checkpoint is truncated");
  }
  U value = 0;
  for (std::size_t k = 0; k < sizeof(U); ++k) value |= static_cast<U>(bytes[k]) << (8 * k);
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const EmbeddingMatrix& embeddings) {
  constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
  if (embeddings.rows() > kMax || embeddings.cols() > kMax) {
    throw std::invalid_argument("embedding shape does not fit the checkpoint header");
  }
  put_le<std::uint32_t>(out, kCheckpointMagic);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(embeddings.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(embeddings.cols()));
  for (Index r = 0; r < embeddings.rows(); ++r) {
    for (Index c = 0; c < embeddings.cols(); ++c) {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(embeddings(r, c)));
    }
  }
  if (!out) throw std::runtime_error("failed to write checkpoint");
}

void write_checkpoint(const std::filesystem::path& path, const EmbeddingMatrix& embeddings) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_checkpoint(out, embeddings);
}

EmbeddingMatrix read_checkpoint(std::istream& in) {
  if (get_le<std::uint32_t>(in) != kCheckpointMagic) throw std::runtime_error("not an embedding checkpoint");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto rows = get_le<std::uint32_t>(in);
  const auto cols = get_le<std::uint32_t>(in);
  EmbeddingMatrix e(rows, cols);
  for (Index r = 0; r < e.rows(); ++r) {
    for (Index c = 0; c < e.cols(); ++c) e(r, c) = std::bit_cast<double>(get_le<std::uint64_t>(in));
  }
  return e;
}

EmbeddingMatrix read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace cflab

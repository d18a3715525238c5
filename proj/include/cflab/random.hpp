#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace cflab {

using Rng = std::mt19937_64;

// Both std::mt19937_64 and std::seed_seq have fully specified output, so
// streams derived here are identical across standard library vendors.
// seed_seq keeps only 32 bits per value, so each key is fed as two words.
inline Rng make_rng(std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * keys.size());
  for (const std::uint64_t key : keys) {
    words.push_back(static_cast<std::uint32_t>(key));
    words.push_back(static_cast<std::uint32_t>(key >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

// Unbiased draw from [0, bound). std::uniform_int_distribution is avoided
// because its algorithm is implementation-defined.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % bound);
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw >= limit);
  return draw % bound;
}

template <typename T>
void shuffle(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace cflab

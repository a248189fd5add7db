#pragma once

#include <cstdint>
#include <random>

#include "ris/types.hpp"

namespace ris {

// Independent stream ids so each channel draw gets its own generator and
// adding trials or reordering draws never shifts another stream.
enum class Stream : std::uint64_t {
  direct = 1,
  backward = 2,
  forward = 3,
  estimation_error = 4,
};

// splitmix64 mix of (seed, stream); decorrelates derived seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

// Standard normal via Box-Muller on top of mt19937_64. std::normal_distribution
// is implementation-defined, this sequence is identical on every platform.
class Gaussian {
 public:
  explicit Gaussian(std::uint64_t seed) : eng_(seed) {}
  double operator()();

 private:
  double uniform01();  // in (0,1)
  std::mt19937_64 eng_;
  double spare_ = 0;
  bool has_spare_ = false;
};

// Entries i.i.d. CN(0,1): (x + jy)/sqrt(2) with x,y standard normal.
// Column-major fill order, so the draw sequence is part of the contract.
Mat complex_gaussian(int rows, int cols, std::uint64_t seed);

}  // namespace ris

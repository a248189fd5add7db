#include "ris/rng.hpp"

#include <cmath>
#include <numbers>

namespace ris {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream * 0x9E3779B97F4A7C15ull + 0x243F6A8885A308D3ull));
}

double Gaussian::uniform01() {
  // 53 uniform bits, in [0, 1 - 2^-53]; keeps log(1 - u) finite below
  return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Gaussian::operator()() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log1p(-u1));
  double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Mat complex_gaussian(int rows, int cols, std::uint64_t seed) {
  Gaussian g(seed);
  Mat m(rows, cols);
  const double c = 1.0 / std::numbers::sqrt2;
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) {
      double re = g();
      double im = g();
      m(i, j) = cxd(re * c, im * c);
    }
  return m;
}

}  // namespace ris

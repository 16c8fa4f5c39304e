#include "oscillab/rng.hpp"

#include <cmath>

namespace oscillab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void round_once(std::uint32_t c[4], const std::uint32_t k[2]) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  const std::uint32_t n0 = hi1 ^ c[1] ^ k[0];
  const std::uint32_t n1 = lo1;
  const std::uint32_t n2 = hi0 ^ c[3] ^ k[1];
  const std::uint32_t n3 = lo0;
  c[0] = n0;
  c[1] = n1;
  c[2] = n2;
  c[3] = n3;
}

inline double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
  // 53-bit mantissa in (0, 1]
  const std::uint64_t v =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(v) + 1.0) * 0x1p-53;
}

}  // namespace

void philox4x32(const std::uint32_t key[2], const std::uint32_t ctr[4],
                std::uint32_t out[4]) {
  std::uint32_t c[4] = {ctr[0], ctr[1], ctr[2], ctr[3]};
  std::uint32_t k[2] = {key[0], key[1]};
  for (int r = 0; r < 10; ++r) {
    round_once(c, k);
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  out[0] = c[0];
  out[1] = c[1];
  out[2] = c[2];
  out[3] = c[3];
}

void NoiseStream::refill() {
  const std::uint32_t key[2] = {static_cast<std::uint32_t>(seed_),
                                static_cast<std::uint32_t>(seed_ >> 32)};
  const std::uint32_t ctr[4] = {static_cast<std::uint32_t>(counter_),
                                static_cast<std::uint32_t>(counter_ >> 32),
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)};
  std::uint32_t out[4];
  philox4x32(key, ctr, out);
  ++counter_;
  const double u1 = to_unit_open(out[0], out[1]);
  const double u2 = to_unit_open(out[2], out[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  cache_[0] = rad * std::cos(2.0 * M_PI * u2);
  cache_[1] = rad * std::sin(2.0 * M_PI * u2);
  cached_ = 2;
}

double NoiseStream::gaussian() {
  if (cached_ == 0) refill();
  return cache_[--cached_];
}

double NoiseStream::increment(double dt) { return gaussian() * std::sqrt(dt); }

}  // namespace oscillab

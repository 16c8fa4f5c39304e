#pragma once

#include <cstdint>

namespace oscillab {

// Philox4x32-10 counter-based generator. A stream is addressed by
// (seed, stream_id); the position in the stream is an explicit counter, so
// ensembles partition deterministically across any number of workers.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_(stream_id) {}

  // Next standard normal variate (Box-Muller over Philox uniforms).
  double gaussian();
  // Gaussian increment of variance dt.
  double increment(double dt);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  double cache_[2] = {0.0, 0.0};
  int cached_ = 0;
};

// Raw block generator, exposed for tests of determinism/independence.
void philox4x32(const std::uint32_t key[2], const std::uint32_t ctr[4],
                std::uint32_t out[4]);

}  // namespace oscillab

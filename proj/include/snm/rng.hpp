#pragma once

// Counter-based random numbers. A stream is addressed by (seed, stream_index);
// draws are a pure function of that pair and the draw position, so runs can be
// generated in any order on any number of threads.

#include <array>
#include <cstdint>

#include "snm/linalg.hpp"

namespace snm {

struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;

  /// Child stream, decorrelated from the parent and from other children.
  RngStream substream(std::uint64_t child) const;

  friend bool operator==(const RngStream&, const RngStream&) = default;
};

/// Philox4x32-10 block function (Salmon et al. constants).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Sequential reader over a RngStream.
///
/// Key = seed; counter = (position, stream_index), each 64 bits split in two
/// 32-bit words. Every block yields two 64-bit outputs.
class RandomGenerator {
 public:
  explicit RandomGenerator(RngStream stream) : stream_(stream) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform01();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Standard normal (Box-Muller, both variates used).
  double normal();

  Vector normal_vector(Eigen::Index n);
  Vector uniform_vector(Eigen::Index n, double lo, double hi);

  const RngStream& stream() const { return stream_; }

 private:
  RngStream stream_;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 2> block_{};
  int block_used_ = 2;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Draws v ~ N(0, R) for PSD R through its eigendecomposition.
class GaussianSampler {
 public:
  explicit GaussianSampler(const SymMatrix& covariance);
  Vector sample(RandomGenerator& gen) const;
  Eigen::Index dim() const { return transform_.rows(); }

 private:
  Matrix transform_;
};

}  // namespace snm

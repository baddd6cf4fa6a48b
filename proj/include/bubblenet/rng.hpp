#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace bubblenet {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept;

/// Identifies one Monte Carlo path of one experiment cell under a master seed.
struct PathKey {
  std::uint64_t seed = 0;
  std::uint32_t cell = 0;
  std::uint32_t path = 0;
};

/// Standard normal variates for one (path, stream) pair, addressable by step.
/// Variate `step` is a pure function of (seed, cell, path, stream, step), so
/// any two consumers with the same coordinates see identical numbers.
class NormalStream {
 public:
  NormalStream() = default;
  NormalStream(PathKey key, std::uint32_t stream) noexcept;

  double at(std::uint64_t step) const noexcept;

  /// Sequential access; caches the Box-Muller partner.
  double next() noexcept;
  void seek(std::uint64_t step) noexcept { pos_ = step; }

 private:
  std::array<double, 2> pair(std::uint64_t pair_index) const noexcept;

  PhiloxKey key_{};
  std::uint32_t stream_ = 0;
  std::uint32_t path_ = 0;
  std::uint32_t cell_ = 0;
  std::uint64_t pos_ = 0;
  std::uint64_t cached_pair_ = ~std::uint64_t{0};
  std::array<double, 2> cache_{};
};

/// Uniform on (0,1) for a single counter draw; test and bootstrap helper.
double uniform01(PathKey key, std::uint32_t stream, std::uint64_t index) noexcept;

/// Assignment of Brownian drivers to stream ids for one path.
struct Drivers {
  PathKey key;
  std::uint32_t b1 = 0;  // bubble noise
  std::uint32_t b2 = 1;  // reserved: drift diffusion of the abstract bubble model
  std::uint32_t b3 = 2;  // illiquidity GBM
  std::vector<std::uint32_t> core;       // W^{k,B}
  std::vector<std::uint32_t> periphery;  // W^i

  /// Standard layout: B1, B2, B3, then m core streams, then n periphery streams.
  static Drivers standard(PathKey key, std::size_t n, std::size_t m);
};

/// Experiment cell id, injective for indices below 256.
std::uint32_t cell_id(std::uint32_t scenario, std::uint32_t lambda_index,
                      std::uint32_t delta_index, std::uint32_t extra = 0);

}  // namespace bubblenet

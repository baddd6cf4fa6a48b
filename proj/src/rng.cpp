#include "bubblenet/rng.hpp"

#include <cmath>
#include <numbers>

namespace bubblenet {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_unit_open(std::uint32_t lo, std::uint32_t hi) noexcept {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

PhiloxKey split_seed(std::uint64_t seed) noexcept {
  return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter c, PhiloxKey k) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c[0], hi0, lo0);
    mulhilo(kMul1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

NormalStream::NormalStream(PathKey key, std::uint32_t stream) noexcept
    : key_(split_seed(key.seed)), stream_(stream), path_(key.path), cell_(key.cell) {}

std::array<double, 2> NormalStream::pair(std::uint64_t pair_index) const noexcept {
  // The stream's high step bits share the counter word with the stream id.
  const PhiloxCounter ctr{static_cast<std::uint32_t>(pair_index),
                          stream_ ^ (static_cast<std::uint32_t>(pair_index >> 32) << 24),
                          path_, cell_};
  const PhiloxCounter r = philox4x32_10(ctr, key_);
  const double u1 = to_unit_open(r[0], r[1]);
  const double u2 = to_unit_open(r[2], r[3]);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

double NormalStream::at(std::uint64_t step) const noexcept { return pair(step >> 1)[step & 1]; }

double NormalStream::next() noexcept {
  const std::uint64_t idx = pos_ >> 1;
  if (idx != cached_pair_) {
    cache_ = pair(idx);
    cached_pair_ = idx;
  }
  return cache_[pos_++ & 1];
}

double uniform01(PathKey key, std::uint32_t stream, std::uint64_t index) noexcept {
  const PhiloxCounter ctr{static_cast<std::uint32_t>(index),
                          stream ^ (static_cast<std::uint32_t>(index >> 32) << 24), key.path,
                          key.cell};
  const PhiloxCounter r = philox4x32_10(ctr, split_seed(key.seed));
  return to_unit_open(r[0], r[1]);
}

Drivers Drivers::standard(PathKey key, std::size_t n, std::size_t m) {
  Drivers d;
  d.key = key;
  d.core.resize(m);
  d.periphery.resize(n);
  for (std::size_t k = 0; k < m; ++k) d.core[k] = static_cast<std::uint32_t>(3 + k);
  for (std::size_t i = 0; i < n; ++i) d.periphery[i] = static_cast<std::uint32_t>(3 + m + i);
  return d;
}

std::uint32_t cell_id(std::uint32_t scenario, std::uint32_t lambda_index,
                      std::uint32_t delta_index, std::uint32_t extra) {
  return ((extra & 0xFFu) << 24) | ((scenario & 0xFFu) << 16) | ((lambda_index & 0xFFu) << 8) |
         (delta_index & 0xFFu);
}

}  // namespace bubblenet

#pragma once

#include <cmath>
#include <cstdint>

namespace nrl {

// PCG64 (XSL-RR 128/64, "setseq" variant).  Each stream id selects a
// distinct increment, so streams are non-overlapping by construction.
class Pcg64 {
 public:
  Pcg64(std::uint64_t seed, std::uint64_t stream) {
    inc_ = ((u128(stream) << 1u) | 1u);
    state_ = 0u;
    next();
    state_ += (u128(seed) << 64) | (seed ^ 0x9e3779b97f4a7c15ULL);
    next();
  }

  std::uint64_t next() {
    state_ = state_ * multiplier() + inc_;
    const std::uint64_t xored =
        static_cast<std::uint64_t>(state_ >> 64) ^ static_cast<std::uint64_t>(state_);
    const unsigned rot = static_cast<unsigned>(state_ >> 122);
    return (xored >> rot) | (xored << ((64u - rot) & 63u));
  }

 private:
  using u128 = unsigned __int128;

  static constexpr u128 multiplier() {
    return (u128(0x2360ed051fc65da4ULL) << 64) | 0x4385df649fccf645ULL;
  }

  u128 state_ = 0;
  u128 inc_ = 0;
};

// One independent random stream per chain.  Normal variates use the
// Marsaglia polar method; the spare deviate is cached, so draws are
// reproducible for a fixed (seed, stream_id) within a build.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : engine_(seed, stream_id), seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_.next() >> 11) * 0x1.0p-53; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  Pcg64 engine_;
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace nrl

// rng.hpp — Counter-based splittable random streams (Philox4x32-10).
//
// A stream is keyed by (seed, stream index) and a draw depends only on the key
// and the draw's position, so Monte Carlo trajectories reproduce bit-exactly
// under any parallel schedule. Distribution transforms are implemented here
// rather than with std::<distribution> types, whose output is
// implementation-defined.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace specdiff {

class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream)
        : key0_(static_cast<std::uint32_t>(seed)),
          key1_(static_cast<std::uint32_t>(seed >> 32)),
          ctr2_(static_cast<std::uint32_t>(stream)),
          ctr3_(static_cast<std::uint32_t>(stream >> 32)) {}

    std::uint64_t next_u64() {
        if (buffered_ == 0) refill();
        return buf_[--buffered_];
    }

    // Uniform on the open interval (0, 1); endpoints are never produced.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * pi_ * u2;
        cached_ = r * std::sin(phi);
        have_cached_ = true;
        return r * std::cos(phi);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    double exponential(double rate) {
        if (rate <= 0.0) return std::numeric_limits<double>::infinity();
        return -std::log(uniform01()) / rate;
    }

    // True with probability p.
    bool bernoulli(double p) { return uniform01() < p; }

  private:
    static constexpr double pi_ = 3.14159265358979323846;

    static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
        const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
        hi = static_cast<std::uint32_t>(prod >> 32);
        lo = static_cast<std::uint32_t>(prod);
    }

    void refill() {
        std::uint32_t c0 = ctr0_, c1 = ctr1_, c2 = ctr2_, c3 = ctr3_;
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mulhilo(0xD2511F53u, c0, hi0, lo0);
            mulhilo(0xCD9E8D57u, c2, hi1, lo1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n1 = lo1;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            const std::uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        buf_[0] = (static_cast<std::uint64_t>(c0) << 32) | c1;
        buf_[1] = (static_cast<std::uint64_t>(c2) << 32) | c3;
        buffered_ = 2;
        if (++ctr0_ == 0) ++ctr1_;  // 2^64 blocks per stream
    }

    std::uint32_t key0_, key1_;
    std::uint32_t ctr0_ = 0, ctr1_ = 0, ctr2_, ctr3_;
    std::uint64_t buf_[2] = {0, 0};
    int buffered_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace specdiff

#pragma once

// Reproducible parallel random streams.
//
// Stream derivation is counter-based: a Philox4x32-10 block keyed by the
// master seed maps (replica, purpose) counters to the initial state of a
// xoshiro256++ generator. Philox is a keyed bijection on 128-bit counters,
// so distinct (replica, purpose) pairs always produce distinct states.
// See README for the exact derivation recipe.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace cascade::rng {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

class Stream {
public:
    using result_type = std::uint64_t;

    Stream() : Stream(std::array<std::uint64_t, 4>{1, 2, 3, 4}) {}
    explicit Stream(std::array<std::uint64_t, 4> state) : s_(state) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    result_type operator()() { return next_u64(); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return next_double() < p; }

    // Standard normal via Box-Muller; the second value of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_double();
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    const std::array<std::uint64_t, 4>& state() const { return s_; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Stream purposes. Keeping the integers stable keeps runs reproducible
// across code revisions that add purposes.
enum Purpose : std::uint32_t {
    kPurposeTree = 0,
    kPurposeWalk = 1,
    kPurposeSpine = 2,
    kPurposeSide = 3,
    kPurposeDiagnostics = 4,
    kPurposeLadder = 5,
    kPurposeRenewal = 6,
    kPurposeMisc = 7,
};

Stream derive_stream(std::uint64_t master_seed, std::uint64_t replica, std::uint32_t purpose);

} // namespace cascade::rng

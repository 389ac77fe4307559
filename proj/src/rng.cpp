#include "cascade/rng.hpp"

namespace cascade::rng {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * counter[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * counter[2];
        const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
        const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
        counter = {hi1 ^ counter[1] ^ key[0], lo1, hi0 ^ counter[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return counter;
}

Stream derive_stream(std::uint64_t master_seed, std::uint64_t replica, std::uint32_t purpose) {
    const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(master_seed),
                                              static_cast<std::uint32_t>(master_seed >> 32)};
    const std::array<std::uint32_t, 4> ctr0 = {static_cast<std::uint32_t>(replica),
                                               static_cast<std::uint32_t>(replica >> 32), purpose,
                                               0u};
    std::array<std::uint32_t, 4> ctr1 = ctr0;
    ctr1[3] = 1u;
    const auto b0 = philox4x32(ctr0, key);
    const auto b1 = philox4x32(ctr1, key);
    auto word = [](std::uint32_t lo, std::uint32_t hi) {
        return static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
    };
    std::array<std::uint64_t, 4> state = {word(b0[0], b0[1]), word(b0[2], b0[3]),
                                          word(b1[0], b1[1]), word(b1[2], b1[3])};
    // xoshiro must not start from the all-zero state.
    if ((state[0] | state[1] | state[2] | state[3]) == 0) state[0] = 1;
    return Stream(state);
}

} // namespace cascade::rng

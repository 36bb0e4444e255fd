#pragma once

#include <array>
#include <cstdint>

namespace tfmseg {

// Counter-based pseudo-random generator: Philox 4x64 with 10 rounds.
//
// Each (seed, stream) pair addresses an independent sequence, so Monte Carlo
// replications get their own stream (stream = replication index) and produce
// the same draws whether replications run serially or in parallel. The raw
// 64-bit output matches the reference Philox4x64-10 keyed as key = (seed,
// stream) with the counter starting at zero; the unit tests pin this down
// against externally generated vectors.
//
// Normal variates use the Marsaglia polar method on 53-bit uniforms. Draws
// are bit-reproducible for a fixed platform and math library.
class Rng {
  public:
    Rng(std::uint64_t seed, std::uint64_t stream)
        : key_{seed, stream}, counter_{0, 0, 0, 0}, index_(4), has_spare_(false), spare_(0.0) {}

    // One Philox block: 10 rounds applied to (counter, key).
    static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> counter,
                                              std::array<std::uint64_t, 2> key);

    std::uint64_t next_u64() {
        if (index_ == 4) refill();
        return block_[index_++];
    }

    // Uniform on [0,1) with 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Positions the stream at an arbitrary counter value (a long jump).
    // Discards any buffered words and any cached normal variate.
    void set_counter(const std::array<std::uint64_t, 4>& counter) {
        counter_ = counter;
        index_ = 4;
        has_spare_ = false;
    }

    // Standard normal via the polar method; the second variate of each
    // accepted pair is cached.
    double normal();

  private:
    void refill();

    std::array<std::uint64_t, 2> key_;
    std::array<std::uint64_t, 4> counter_;
    std::array<std::uint64_t, 4> block_;
    int index_;
    bool has_spare_;
    double spare_;
};

}  // namespace tfmseg

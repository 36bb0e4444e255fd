#include "tfmseg/rng.hpp"

#include <cmath>

namespace tfmseg {

namespace {

constexpr std::uint64_t kMult0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMult1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mul_hilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(prod >> 64);
    lo = static_cast<std::uint64_t>(prod);
}

inline void round_once(std::array<std::uint64_t, 4>& x, const std::array<std::uint64_t, 2>& k) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mul_hilo(kMult0, x[0], hi0, lo0);
    mul_hilo(kMult1, x[2], hi1, lo1);
    x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint64_t, 4> Rng::block(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key) {
    for (int r = 0; r < 10; ++r) {
        round_once(counter, key);
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return counter;
}

void Rng::refill() {
    block_ = block(counter_, key_);
    index_ = 0;
    // 256-bit counter increment, low word first.
    for (int i = 0; i < 4; ++i) {
        if (++counter_[i] != 0) break;
    }
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    for (;;) {
        double u = 2.0 * uniform01() - 1.0;
        double v = 2.0 * uniform01() - 1.0;
        double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            double m = std::sqrt(-2.0 * std::log(s) / s);
            spare_ = v * m;
            has_spare_ = true;
            return u * m;
        }
    }
}

}  // namespace tfmseg

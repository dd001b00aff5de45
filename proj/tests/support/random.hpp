#pragma once

// Small deterministic PRNG for property tests (fixed seeds keep CI runs
// byte-reproducible).

#include <cstdint>

namespace testsupport {

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) : s_(seed ? seed : 1) {}

    std::uint64_t next() {
        s_ ^= s_ << 13;
        s_ ^= s_ >> 7;
        s_ ^= s_ << 17;
        return s_;
    }

    /// uniform in [lo, hi)
    double uniform(double lo, double hi) {
        const double u = static_cast<double>(next() >> 11) / 9007199254740992.0;
        return lo + (hi - lo) * u;
    }

    int uniform_int(int lo, int hi) { // inclusive
        return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
    }

private:
    std::uint64_t s_;
};

} // namespace testsupport

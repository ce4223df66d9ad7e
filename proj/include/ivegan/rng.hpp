#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "ivegan/common.hpp"

namespace ivegan {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic random stream. All distributions are derived from the raw
// mt19937_64 output (no libstdc++ distribution objects), so the sequence is
// identical across standard libraries and the full state round-trips through
// save_state()/restore_state().
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Independent substream for (seed, stream) pairs.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(splitmix64(seed ^ splitmix64(stream)));
    }

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Standard normal via Box-Muller; stateless between calls.
    double normal() {
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::acos(-1.0) * u2);
    }

    // Uniform integer in [lo, hi], inclusive, unbiased.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (lo > hi) throw ValueError("uniform_int: lo > hi");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(gen_());  // full range
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t x = gen_();
        while (x >= limit) x = gen_();
        return lo + static_cast<std::int64_t>(x % span);
    }

    std::string save_state() const {
        std::ostringstream os;
        os << gen_;
        return os.str();
    }

    void restore_state(const std::string& s) {
        std::istringstream is(s);
        is >> gen_;
        if (is.fail()) throw ValueError("Rng::restore_state: malformed state string");
    }

    bool operator==(const Rng& o) const { return gen_ == o.gen_; }

private:
    std::mt19937_64 gen_;
};

}  // namespace ivegan

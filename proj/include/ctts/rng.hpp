#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ctts {

// Deterministic random source. All draws are built from raw mt19937_64
// output so streams are identical across standard libraries; the std::
// distribution classes are implementation-defined and would break
// bit-reproducibility between toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // uniform in [0, 1), 53-bit resolution
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // standard normal via Box-Muller; one draw per call, spare discarded
    double gaussian() {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    // uniform integer in [0, n)
    std::uint64_t bounded(std::uint64_t n) { return engine_() % n; }

    std::uint64_t raw() { return engine_(); }

    // Fisher-Yates; same permutation on every platform for a given state
    template <typename T>
    void shuffle(std::vector<T>& v) {
        if (v.size() < 2) return;
        for (std::size_t i = v.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i + 1));
            std::swap(v[i], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ctts

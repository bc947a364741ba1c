#ifndef CORRNET_RNG_HPP_
#define CORRNET_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace corrnet {

// Seeded generator with hand-rolled distributions. std::uniform_real_distribution
// and friends are implementation-defined, which would break the bit-reproducibility
// contract across standard libraries; everything here is pinned to mt19937_64 output.
class Rng {
 public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Uniform index in [0, n). Modulo bias is below 2^-50 for any n used here.
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(engine_() % static_cast<std::uint64_t>(n));
    }

    bool coin() { return (engine_() & 1u) != 0; }

    // Standard normal via Box-Muller, one spare value cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log is finite.
        double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
        double u2 = uniform01();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        if (items.size() < 2) return;
        for (std::size_t i = items.size() - 1; i > 0; --i) {
            std::size_t j = index(i + 1);
            std::swap(items[i], items[j]);
        }
    }

 private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace corrnet

#endif  // CORRNET_RNG_HPP_

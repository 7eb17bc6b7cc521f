#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace hjreg {

/// Halton low-discrepancy sequence in up to 8 dimensions. The seed shifts the
/// starting index, so every run with the same seed sees the same points.
class Halton {
public:
    static constexpr int max_dim = 8;

    explicit Halton(std::uint64_t seed = 0) : index_(seed * 7919 + 1) {}

    /// Coordinate `d` of point number `i` (radical inverse in base prime[d]).
    static double radical_inverse(std::uint64_t i, int d) {
        if (d < 0 || d >= max_dim) throw std::out_of_range("Halton dimension");
        const std::uint64_t base = primes[static_cast<std::size_t>(d)];
        double inv = 1.0 / static_cast<double>(base);
        double f = inv;
        double r = 0.0;
        while (i > 0) {
            r += f * static_cast<double>(i % base);
            i /= base;
            f *= inv;
        }
        return r;
    }

    std::array<double, max_dim> next() {
        std::array<double, max_dim> out{};
        for (int d = 0; d < max_dim; ++d) out[static_cast<std::size_t>(d)] = radical_inverse(index_, d);
        ++index_;
        return out;
    }

    std::uint64_t index() const { return index_; }

private:
    static constexpr std::array<std::uint64_t, max_dim> primes{2, 3, 5, 7, 11, 13, 17, 19};
    std::uint64_t index_;
};

}  // namespace hjreg

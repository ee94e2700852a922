#include "rlab/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace rlab::rng {

double Rng::normal() {
    // Box-Muller with a guarded logarithm; u1 in (0,1].
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

seqspace::TruncVec Rng::unit_vector(std::size_t dim, seqspace::FieldMode field,
                                    seqspace::NormMode mode) {
    std::vector<cx> c(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        const double re = normal();
        const double im = (field == seqspace::FieldMode::Complex) ? normal() : 0.0;
        c[i] = cx(re, im);
    }
    seqspace::TruncVec v{std::move(c), field, mode};
    const double n = seqspace::norm(v);
    if (n == 0.0) {
        // Astronomically unlikely; fall back to a basis vector.
        return seqspace::unit_vec(dim, 0, field, mode);
    }
    for (auto& vi : v.c) vi /= n;
    return v;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    // splitmix64 finalizer over (base + golden-gamma * (index + 1)).
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace rlab::rng

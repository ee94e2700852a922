#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "rlab/seqspace.hpp"

namespace rlab::rng {

/// Deterministic generator with hand-mapped uniforms. std::mt19937_64 output
/// is specified bit-for-bit by the standard, and the mapping below avoids
/// std::uniform_real_distribution (whose algorithm is implementation-defined),
/// so every stream here is reproducible across compilers and platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1): top 53 bits scaled by 2^-53.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (always consumes two uniforms, so the
    /// stream position is deterministic regardless of values drawn).
    double normal();

    /// Unit-norm random vector for the given mode (normalized Gaussian
    /// coordinates; complex mode draws independent real and imaginary parts).
    seqspace::TruncVec unit_vector(std::size_t dim, seqspace::FieldMode field,
                                   seqspace::NormMode mode);

  private:
    std::mt19937_64 eng_;
};

/// Stable per-sample seed derivation: mixes a base seed with a sample index
/// via splitmix64 finalization so seeds of consecutive samples are unrelated.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// FNV-1a 64-bit digest of a byte string; used for config digests.
std::uint64_t fnv1a64(const std::string& bytes);

} // namespace rlab::rng

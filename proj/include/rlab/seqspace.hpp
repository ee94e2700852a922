#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace rlab {

using cx = std::complex<double>;

namespace seqspace {

/// Norm selector: an lp exponent in [1, 64], or the sup norm (c0-style).
struct NormMode {
    bool sup = false;
    double p = 2.0;

    static NormMode lp(double p);
    static NormMode sup_norm() { return NormMode{true, 0.0}; }

    bool operator==(const NormMode& o) const {
        return sup == o.sup && (sup || p == o.p);
    }
};

enum class FieldMode { Real, Complex };

/// Immutable finite truncation of a sequence-space vector. All operations
/// below are pure; nothing mutates a TruncVec after construction.
struct TruncVec {
    std::vector<cx> c;
    FieldMode field = FieldMode::Real;
    NormMode mode = NormMode::lp(2.0);

    std::size_t dim() const { return c.size(); }
};

TruncVec make_vec(std::vector<cx> coeffs, FieldMode field, NormMode mode);
TruncVec make_real_vec(const std::vector<double>& coeffs, NormMode mode);
/// Coordinate basis vector e_k.
TruncVec unit_vec(std::size_t dim, std::size_t k, FieldMode field, NormMode mode);
TruncVec zero_vec(std::size_t dim, FieldMode field, NormMode mode);

/// Scale-safe norm: max-factored accumulation, so coefficients near the top
/// of the double range do not overflow when raised to p.
double norm(const TruncVec& x);

/// a*x + y. Dimensions and modes must agree; a real-mode result requires a
/// real scalar.
TruncVec axpy(cx a, const TruncVec& x, const TruncVec& y);

/// Pair (x, y) standing for x + i y with real-mode components.
struct PairVec {
    TruncVec x;
    TruncVec y;
};

PairVec make_pair_vec(TruncVec x, TruncVec y);

/// sup_{t in [0, 2pi]} || cos(t) x - sin(t) y ||, evaluated on a 1024-point
/// grid and refined by golden-section search to bracket width 1e-10.
/// Documented accuracy: 1e-8 relative on smooth profiles.
double complexification_norm(const TruncVec& x, const TruncVec& y);

inline double pair_norm(const PairVec& z) { return complexification_norm(z.x, z.y); }

inline constexpr double kComplexificationTol = 1e-8;

} // namespace seqspace
} // namespace rlab

#pragma once

#include <cstddef>
#include <vector>

#include "rlab/seqspace.hpp"

namespace rlab::linalg {

/// Dense square complex matrix, column-major.
struct Mat {
    std::size_t n = 0;
    std::vector<cx> a;

    Mat() = default;
    explicit Mat(std::size_t n_) : n(n_), a(n_ * n_, cx(0.0, 0.0)) {}

    cx& at(std::size_t i, std::size_t j) { return a[j * n + i]; }
    const cx& at(std::size_t i, std::size_t j) const { return a[j * n + i]; }
};

/// Smallest singular value by one-sided Jacobi orthogonalization of the
/// columns (complex rotations with the phase absorbed into one column).
/// Accurate for tiny singular values; intended for n <= 512.
double sigma_min_jacobi(Mat a);

/// All singular values (ascending) by the same sweep; used by cross-checks.
std::vector<double> singular_values_jacobi(Mat a);

/// Smallest singular value by power iteration on (A^H A)^{-1} through an LU
/// factorization (two triangular solves per step). Converges from above, so
/// intermediate values never understate distance-to-singularity. Returns 0
/// when the factorization detects exact singularity.
double sigma_min_inverse_iteration(const Mat& a, double rel_tol = 1e-8);

/// Smallest singular value of a bidiagonal matrix (diagonal d, superdiagonal
/// e), by bisection with Sturm counts on the Golub-Kahan augmented form: the
/// 2n x 2n symmetric tridiagonal with zero diagonal whose off-diagonals
/// interleave |d_1|, |e_1|, |d_2|, ..., |d_n| has eigenvalues {+/- sigma_i}.
/// Counting negative pivots of its shifted LDL^T never squares the entries,
/// so tiny singular values keep full relative accuracy (unlike bisection on
/// B^H B, which floors near sqrt(eps) * ||B||). Complex entries reduce to
/// magnitudes first (diagonal phase scaling preserves singular values).
/// O(n) per bisection step.
double sigma_min_bidiagonal(const std::vector<cx>& d, const std::vector<cx>& e);

/// True when every nonzero of A sits on the main or first super-diagonal.
bool is_upper_bidiagonal(const Mat& a);

/// Solve A x = b in place via LU with partial pivoting (complex). Returns
/// false when a pivot vanishes (singular to working precision).
bool lu_solve(Mat a, std::vector<cx>& b);

} // namespace rlab::linalg

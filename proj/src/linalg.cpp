#include "rlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rlab::linalg {

namespace {

// One-sided Jacobi: orthogonalize columns pairwise; on convergence the
// column norms are the singular values.
std::vector<double> jacobi_column_norms(Mat& m) {
    const std::size_t n = m.n;
    if (n == 0) return {};
    std::vector<double> colsq(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += std::norm(m.at(i, j));
        colsq[j] = s;
    }
    constexpr double kTol = 1e-13;
    constexpr int kMaxSweeps = 60;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                cx g(0.0, 0.0);
                for (std::size_t i = 0; i < n; ++i) g += std::conj(m.at(i, p)) * m.at(i, q);
                const double alpha = colsq[p];
                const double beta = colsq[q];
                const double gabs = std::abs(g);
                if (gabs <= kTol * std::sqrt(alpha * beta) || gabs == 0.0) continue;
                rotated = true;
                // Absorb the phase of g into column q so the pair's Gram
                // off-diagonal becomes the real number |g|, then rotate as in
                // the real case: tan(2θ) = 2|g| / (α − β), smaller-angle root.
                // The factor must be conj(g)/|g|: <u, (conj(g)/|g|) v> = |g|.
                const cx phase = std::conj(g) / gabs;
                const double tau = (beta - alpha) / (2.0 * gabs);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const cx vp = m.at(i, p);
                    const cx vq = phase * m.at(i, q); // phase-absorbed
                    m.at(i, p) = c * vp - s * vq;
                    m.at(i, q) = s * vp + c * vq;
                }
                colsq[p] = alpha - t * gabs;
                colsq[q] = beta + t * gabs;
            }
        }
        if (!rotated) break;
    }
    std::vector<double> sv(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += std::norm(m.at(i, j));
        sv[j] = std::sqrt(s);
    }
    std::sort(sv.begin(), sv.end());
    return sv;
}

} // namespace

double sigma_min_jacobi(Mat a) {
    const std::vector<double> sv = jacobi_column_norms(a);
    if (sv.empty()) throw std::invalid_argument("sigma_min_jacobi: empty matrix");
    return sv.front();
}

std::vector<double> singular_values_jacobi(Mat a) { return jacobi_column_norms(a); }

namespace {

// In-place LU with partial pivoting; factors stored in `a`, row swaps in
// `piv`. Returns false on a vanishing pivot.
struct Lu {
    Mat a;
    std::vector<std::size_t> piv;

    bool factor() {
        const std::size_t n = a.n;
        piv.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            std::size_t pivot = k;
            double best = std::abs(a.at(k, k));
            for (std::size_t i = k + 1; i < n; ++i) {
                const double m = std::abs(a.at(i, k));
                if (m > best) {
                    best = m;
                    pivot = i;
                }
            }
            if (best == 0.0) return false;
            piv[k] = pivot;
            if (pivot != k) {
                for (std::size_t j = 0; j < n; ++j) std::swap(a.at(k, j), a.at(pivot, j));
            }
            const cx diag = a.at(k, k);
            for (std::size_t i = k + 1; i < n; ++i) {
                const cx f = a.at(i, k) / diag;
                a.at(i, k) = f;
                if (f == cx(0.0, 0.0)) continue;
                for (std::size_t j = k + 1; j < n; ++j) a.at(i, j) -= f * a.at(k, j);
            }
        }
        return true;
    }

    void solve(std::vector<cx>& b) const {
        const std::size_t n = a.n;
        for (std::size_t k = 0; k < n; ++k) {
            if (piv[k] != k) std::swap(b[k], b[piv[k]]);
            for (std::size_t i = k + 1; i < n; ++i) b[i] -= a.at(i, k) * b[k];
        }
        for (std::size_t k = n; k-- > 0;) {
            cx acc = b[k];
            for (std::size_t j = k + 1; j < n; ++j) acc -= a.at(k, j) * b[j];
            b[k] = acc / a.at(k, k);
        }
    }
};

} // namespace

bool lu_solve(Mat a, std::vector<cx>& b) {
    if (b.size() != a.n) throw std::invalid_argument("lu_solve: dimension mismatch");
    Lu lu{std::move(a), {}};
    if (!lu.factor()) return false;
    lu.solve(b);
    return true;
}

double sigma_min_inverse_iteration(const Mat& a, double rel_tol) {
    const std::size_t n = a.n;
    if (n == 0) throw std::invalid_argument("sigma_min_inverse_iteration: empty matrix");
    Mat ah(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) ah.at(i, j) = std::conj(a.at(j, i));
    }
    const auto norm2 = [](const std::vector<cx>& v) {
        double mx = 0.0;
        for (const cx& c : v) mx = std::max(mx, std::abs(c));
        if (mx == 0.0) return 0.0;
        double acc = 0.0;
        for (const cx& c : v) {
            const double r = std::abs(c) / mx;
            acc += r * r;
        }
        return mx * std::sqrt(acc);
    };
    // Deterministic start: alternating-sign ramp (no crafted symmetry with
    // shift sections, cheap, reproducible).
    std::vector<cx> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = cx((i % 2 == 0) ? 1.0 : -1.0, 0.25 + static_cast<double>(i) / double(n));
    }
    const double vn0 = norm2(v);
    for (auto& c : v) c /= vn0;
    Lu lu_a{a, {}};
    Lu lu_ah{std::move(ah), {}};
    if (!lu_a.factor() || !lu_ah.factor()) return 0.0;
    double sigma = 0.0;
    constexpr int kMaxIters = 500;
    for (int it = 0; it < kMaxIters; ++it) {
        std::vector<cx> y = v;
        lu_ah.solve(y);          // y <- A^-H v
        lu_a.solve(y);           // y <- A^-1 A^-H v
        const double rho = norm2(y); // -> 1 / sigma_min^2
        if (rho == 0.0) return 0.0;
        const double s = 1.0 / std::sqrt(rho);
        for (std::size_t i = 0; i < n; ++i) v[i] = y[i] / rho;
        if (it > 0 && std::abs(s - sigma) <= rel_tol * std::max(s, 1e-300)) return s;
        sigma = s;
    }
    throw std::runtime_error(
        "sigma_min_inverse_iteration: no convergence after 500 steps; last value " +
        std::to_string(sigma));
}

double sigma_min_bidiagonal(const std::vector<cx>& d, const std::vector<cx>& e) {
    const std::size_t n = d.size();
    if (n == 0) throw std::invalid_argument("sigma_min_bidiagonal: empty diagonal");
    if (e.size() + 1 != n) throw std::invalid_argument("sigma_min_bidiagonal: bad superdiagonal");
    // Off-diagonals of the Golub-Kahan augmented tridiagonal (zero diagonal):
    // |d_1|, |e_1|, |d_2|, |e_2|, ..., |d_n|  (length 2n - 1). Its spectrum
    // is {+sigma_i, -sigma_i}, so for t > 0 the number of eigenvalues below
    // t equals n + #{sigma_i < t}.
    std::vector<double> c(2 * n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        c[2 * i] = std::abs(d[i]);
        if (i + 1 < n) c[2 * i + 1] = std::abs(e[i]);
    }
    constexpr double kPivMin = 1e-300;
    // Negative-pivot count of the LDL^T factorization of (T_GK - t I).
    const auto sigmas_below = [&](double t) -> std::size_t {
        std::size_t negatives = 0;
        double p = -t;
        if (p < 0.0) ++negatives;
        if (std::abs(p) < kPivMin) p = -kPivMin;
        for (std::size_t k = 0; k < c.size(); ++k) {
            p = -t - (c[k] * c[k]) / p;
            if (p < 0.0) ++negatives;
            if (std::abs(p) < kPivMin) p = -kPivMin;
        }
        return negatives > n ? negatives - n : 0;
    };
    double hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = c[2 * i];
        if (i + 1 < n) row += c[2 * i + 1];
        if (i > 0) row += c[2 * i - 1];
        hi = std::max(hi, row);
    }
    if (hi == 0.0) return 0.0;
    hi = hi * (1.0 + 1e-12) + 1e-300;
    double lo = 0.0;
    // Invariant: sigmas_below(lo) == 0 < sigmas_below(hi).
    while (hi - lo > 1e-9 * hi + 1e-290) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket is one ulp wide
        if (sigmas_below(mid) >= 1) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

bool is_upper_bidiagonal(const Mat& a) {
    for (std::size_t j = 0; j < a.n; ++j) {
        for (std::size_t i = 0; i < a.n; ++i) {
            if (a.at(i, j) == cx(0.0, 0.0)) continue;
            if (i != j && j != i + 1) return false;
        }
    }
    return true;
}

} // namespace rlab::linalg

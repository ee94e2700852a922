#include "rlab/seqspace.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rlab::seqspace {

NormMode NormMode::lp(double p) {
    if (!(p >= 1.0 && p <= 64.0)) {
        throw std::invalid_argument("NormMode: lp exponent must lie in [1, 64]");
    }
    return NormMode{false, p};
}

TruncVec make_vec(std::vector<cx> coeffs, FieldMode field, NormMode mode) {
    if (field == FieldMode::Real) {
        for (const cx& v : coeffs) {
            if (v.imag() != 0.0) {
                throw std::invalid_argument("make_vec: nonzero imaginary part in real-mode vector");
            }
        }
    }
    return TruncVec{std::move(coeffs), field, mode};
}

TruncVec make_real_vec(const std::vector<double>& coeffs, NormMode mode) {
    std::vector<cx> c(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) c[i] = cx(coeffs[i], 0.0);
    return TruncVec{std::move(c), FieldMode::Real, mode};
}

TruncVec unit_vec(std::size_t dim, std::size_t k, FieldMode field, NormMode mode) {
    if (k >= dim) throw std::out_of_range("unit_vec: index outside truncation");
    std::vector<cx> c(dim, cx(0.0, 0.0));
    c[k] = cx(1.0, 0.0);
    return TruncVec{std::move(c), field, mode};
}

TruncVec zero_vec(std::size_t dim, FieldMode field, NormMode mode) {
    return TruncVec{std::vector<cx>(dim, cx(0.0, 0.0)), field, mode};
}

namespace {

double abs_cx(const cx& v) {
    // std::abs on complex<double> is hypot-based and overflow-safe already.
    return std::abs(v);
}

} // namespace

double norm(const TruncVec& x) {
    if (x.c.empty()) return 0.0;
    double mx = 0.0;
    for (const cx& v : x.c) mx = std::max(mx, abs_cx(v));
    if (x.mode.sup || mx == 0.0) return mx;
    if (!std::isfinite(mx)) return mx;
    const double p = x.mode.p;
    // Factor out the max so each ratio is <= 1; (ratio)^p cannot overflow and
    // the sum is at most dim, keeping the final root well inside range.
    double acc = 0.0;
    for (const cx& v : x.c) {
        const double r = abs_cx(v) / mx;
        if (r > 0.0) acc += std::pow(r, p);
    }
    return mx * std::pow(acc, 1.0 / p);
}

TruncVec axpy(cx a, const TruncVec& x, const TruncVec& y) {
    if (x.dim() != y.dim()) throw std::invalid_argument("axpy: dimension mismatch");
    if (!(x.mode == y.mode) || x.field != y.field) {
        throw std::invalid_argument("axpy: mode mismatch");
    }
    if (x.field == FieldMode::Real && a.imag() != 0.0) {
        throw std::invalid_argument("axpy: complex scalar on real-mode vectors");
    }
    std::vector<cx> c(x.dim());
    for (std::size_t i = 0; i < x.dim(); ++i) c[i] = a * x.c[i] + y.c[i];
    return TruncVec{std::move(c), x.field, x.mode};
}

PairVec make_pair_vec(TruncVec x, TruncVec y) {
    if (x.dim() != y.dim()) throw std::invalid_argument("make_pair_vec: dimension mismatch");
    if (!(x.mode == y.mode)) throw std::invalid_argument("make_pair_vec: mode mismatch");
    if (x.field != FieldMode::Real || y.field != FieldMode::Real) {
        throw std::invalid_argument("make_pair_vec: components must be real-mode");
    }
    return PairVec{std::move(x), std::move(y)};
}

namespace {

double rotation_norm(const TruncVec& x, const TruncVec& y, double t) {
    const double ct = std::cos(t);
    const double st = std::sin(t);
    TruncVec z = zero_vec(x.dim(), x.field, x.mode);
    for (std::size_t i = 0; i < x.dim(); ++i) z.c[i] = ct * x.c[i] - st * y.c[i];
    return norm(z);
}

} // namespace

double complexification_norm(const TruncVec& x, const TruncVec& y) {
    if (x.dim() != y.dim()) {
        throw std::invalid_argument("complexification_norm: dimension mismatch");
    }
    if (!(x.mode == y.mode)) {
        throw std::invalid_argument("complexification_norm: mode mismatch");
    }
    constexpr int kGrid = 1024;
    const double two_pi = 2.0 * std::numbers::pi;
    double best = -1.0;
    int best_i = 0;
    for (int i = 0; i < kGrid; ++i) {
        const double t = two_pi * static_cast<double>(i) / kGrid;
        const double v = rotation_norm(x, y, t);
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    // Golden-section refinement of the maximum inside the bracket around the
    // best grid point.
    double a = two_pi * static_cast<double>(best_i - 1) / kGrid;
    double b = two_pi * static_cast<double>(best_i + 1) / kGrid;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c1 = b - gr * (b - a);
    double c2 = a + gr * (b - a);
    double f1 = rotation_norm(x, y, c1);
    double f2 = rotation_norm(x, y, c2);
    while (b - a > 1e-10) {
        if (f1 < f2) {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + gr * (b - a);
            f2 = rotation_norm(x, y, c2);
        } else {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - gr * (b - a);
            f1 = rotation_norm(x, y, c1);
        }
    }
    return std::max({best, f1, f2});
}

} // namespace rlab::seqspace

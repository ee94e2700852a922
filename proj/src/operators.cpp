#include "rlab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rlab/rng.hpp"

namespace rlab::ops {

namespace {

std::size_t boundary_index(const ctype::CTypeData& ct, std::size_t dim) {
    for (std::size_t m = 1; m < ct.b.size(); ++m) {
        if (ct.b[m] == dim) return m;
    }
    throw std::invalid_argument("C-type operator: dimension " + std::to_string(dim) +
                                " is not a stored block boundary");
}

std::shared_ptr<const ctype::CTypeData> truncate_blocks(
    std::shared_ptr<const ctype::CTypeData> ct, std::size_t m) {
    if (m == ct->blocks()) return ct;
    auto cut = std::make_shared<ctype::CTypeData>();
    cut->b.assign(ct->b.begin(), ct->b.begin() + static_cast<std::ptrdiff_t>(m + 1));
    cut->phi.assign(ct->phi.begin(), ct->phi.begin() + static_cast<std::ptrdiff_t>(m));
    cut->w.assign(ct->w.begin(), ct->w.begin() + static_cast<std::ptrdiff_t>(cut->dim()));
    cut->v.assign(ct->v.begin(), ct->v.begin() + static_cast<std::ptrdiff_t>(m));
    return cut;
}

OperatorSpec make_ctype(OpKind kind, std::shared_ptr<const ctype::CTypeData> ct,
                        std::size_t dim, FieldMode field, NormMode mode) {
    if (!ct) throw std::invalid_argument("C-type operator: missing parameter data");
    if (dim == 0) dim = ct->dim();
    const std::size_t m = boundary_index(*ct, dim);
    OperatorSpec s;
    s.kind = kind;
    s.ct = truncate_blocks(std::move(ct), m);
    s.dim = dim;
    s.field = field;
    s.mode = mode;
    return s;
}

} // namespace

OperatorSpec make_identity(std::size_t dim, FieldMode field, NormMode mode) {
    if (dim == 0) throw std::invalid_argument("identity: dimension must be positive");
    OperatorSpec s;
    s.kind = OpKind::Identity;
    s.dim = dim;
    s.field = field;
    s.mode = mode;
    return s;
}

OperatorSpec make_scalar_mul(cx lambda, std::size_t dim, FieldMode field, NormMode mode) {
    if (dim == 0) throw std::invalid_argument("scalar-mul: dimension must be positive");
    if (field == FieldMode::Real && lambda.imag() != 0.0) {
        throw std::invalid_argument("scalar-mul: complex scalar requires complex field");
    }
    OperatorSpec s;
    s.kind = OpKind::ScalarMul;
    s.dim = dim;
    s.field = field;
    s.mode = mode;
    s.lambda = lambda;
    return s;
}

OperatorSpec make_backward_shift(std::vector<double> weights, FieldMode field, NormMode mode) {
    if (weights.empty()) throw std::invalid_argument("backward-shift: empty weight sequence");
    for (double w : weights) {
        if (!std::isfinite(w)) throw std::invalid_argument("backward-shift: non-finite weight");
    }
    OperatorSpec s;
    s.kind = OpKind::BackwardShift;
    s.dim = weights.size();
    s.field = field;
    s.mode = mode;
    s.weights = std::move(weights);
    return s;
}

OperatorSpec make_backward_shift_uniform(double weight, std::size_t dim, FieldMode field,
                                         NormMode mode) {
    return make_backward_shift(std::vector<double>(dim, weight), field, mode);
}

OperatorSpec make_ctype_wb(std::shared_ptr<const ctype::CTypeData> ct, std::size_t dim,
                           FieldMode field, NormMode mode) {
    return make_ctype(OpKind::CTypeWB, std::move(ct), dim, field, mode);
}

OperatorSpec make_ctype_full(std::shared_ptr<const ctype::CTypeData> ct, std::size_t dim,
                             FieldMode field, NormMode mode) {
    return make_ctype(OpKind::CTypeFull, std::move(ct), dim, field, mode);
}

OperatorSpec make_compact_k(std::shared_ptr<const ctype::CTypeData> ct, std::size_t dim,
                            FieldMode field, NormMode mode) {
    return make_ctype(OpKind::CompactK, std::move(ct), dim, field, mode);
}

OperatorSpec make_direct_sum(OperatorSpec left, OperatorSpec right) {
    if (!(left.mode == right.mode)) {
        throw std::invalid_argument("direct-sum: children must share the norm exponent");
    }
    if (left.field != right.field) {
        throw std::invalid_argument("direct-sum: children must share the scalar field");
    }
    OperatorSpec s;
    s.kind = OpKind::DirectSum;
    s.dim = left.dim + right.dim;
    s.field = left.field;
    s.mode = left.mode;
    s.children.push_back(std::move(left));
    s.children.push_back(std::move(right));
    return s;
}

OperatorSpec complexify(OperatorSpec inner) {
    if (inner.kind == OpKind::Complexified) {
        throw std::invalid_argument("complexify: operator is already complexified");
    }
    if (inner.field != FieldMode::Real) {
        throw std::invalid_argument("complexify: requires a real-mode operator");
    }
    OperatorSpec s;
    s.kind = OpKind::Complexified;
    s.dim = 2 * inner.dim;
    s.field = FieldMode::Real;
    s.mode = inner.mode;
    s.children.push_back(std::move(inner));
    return s;
}

SparseRow basis_row(const OperatorSpec& spec, std::size_t k) {
    if (k >= spec.dim) throw std::out_of_range("basis_row: index outside truncation");
    SparseRow row;
    switch (spec.kind) {
        case OpKind::Identity:
            row.push(k, cx(1.0, 0.0));
            break;
        case OpKind::ScalarMul:
            row.push(k, spec.lambda);
            break;
        case OpKind::BackwardShift:
            if (k > 0) row.push(k - 1, cx(spec.weights[k], 0.0));
            break;
        case OpKind::CTypeWB: {
            const auto& ct = *spec.ct;
            const std::size_t n = ct.block_of(k);
            if (k + 1 == ct.b[n + 1]) {
                row.push(ct.b[n], cx(-1.0 / ct.interior_product(n), 0.0));
            } else {
                row.push(k + 1, cx(ct.w[k + 1], 0.0));
            }
            break;
        }
        case OpKind::CTypeFull: {
            const auto& ct = *spec.ct;
            const std::size_t n = ct.block_of(k);
            if (k + 1 == ct.b[n + 1]) {
                const double pinv = 1.0 / ct.interior_product(n);
                if (n == 0) {
                    row.push(0, cx(pinv, 0.0));
                } else {
                    row.push(ct.b[ct.phi[n]], cx(ct.v[n], 0.0));
                    row.push(ct.b[n], cx(-pinv, 0.0));
                }
            } else {
                row.push(k + 1, cx(ct.w[k + 1], 0.0));
            }
            break;
        }
        case OpKind::CompactK: {
            const auto& ct = *spec.ct;
            const std::size_t n = ct.block_of(k);
            if (k + 1 == ct.b[n + 1]) {
                if (n == 0) {
                    row.push(0, cx(2.0 / ct.interior_product(0), 0.0));
                } else {
                    row.push(ct.b[ct.phi[n]], cx(ct.v[n], 0.0));
                }
            }
            break;
        }
        case OpKind::DirectSum: {
            const OperatorSpec& left = spec.children[0];
            const OperatorSpec& right = spec.children[1];
            if (k < left.dim) {
                row = basis_row(left, k);
            } else {
                row = basis_row(right, k - left.dim);
                for (int i = 0; i < row.count; ++i) {
                    row.entry[static_cast<std::size_t>(i)].first += left.dim;
                }
            }
            break;
        }
        case OpKind::Complexified: {
            const OperatorSpec& inner = spec.children[0];
            if (k < inner.dim) {
                row = basis_row(inner, k);
            } else {
                row = basis_row(inner, k - inner.dim);
                for (int i = 0; i < row.count; ++i) {
                    row.entry[static_cast<std::size_t>(i)].first += inner.dim;
                }
            }
            break;
        }
    }
    return row;
}

std::vector<std::pair<std::size_t, cx>> basis_image(const OperatorSpec& spec, std::size_t k) {
    const SparseRow row = basis_row(spec, k);
    return {row.entry.begin(), row.entry.begin() + row.count};
}

TruncVec apply(const OperatorSpec& spec, const TruncVec& x) {
    if (x.dim() != spec.dim) throw std::invalid_argument("apply: dimension mismatch");
    if (spec.field == FieldMode::Real && x.field == FieldMode::Complex) {
        throw std::invalid_argument("apply: complex vector under a real-mode operator");
    }
    TruncVec y = seqspace::zero_vec(spec.dim, x.field, x.mode);
    for (std::size_t k = 0; k < spec.dim; ++k) {
        const cx xk = x.c[k];
        if (xk == cx(0.0, 0.0)) continue;
        const SparseRow row = basis_row(spec, k);
        for (int i = 0; i < row.count; ++i) {
            const auto& [idx, val] = row.entry[static_cast<std::size_t>(i)];
            y.c[idx] += val * xk;
        }
    }
    return y;
}

TruncVec concat_pair(const PairVec& z) {
    std::vector<cx> c;
    c.reserve(2 * z.x.dim());
    c.insert(c.end(), z.x.c.begin(), z.x.c.end());
    c.insert(c.end(), z.y.c.begin(), z.y.c.end());
    return TruncVec{std::move(c), FieldMode::Real, z.x.mode};
}

PairVec split_pair(const TruncVec& xy) {
    if (xy.dim() % 2 != 0) throw std::invalid_argument("split_pair: odd dimension");
    const std::size_t d = xy.dim() / 2;
    TruncVec x{std::vector<cx>(xy.c.begin(), xy.c.begin() + static_cast<std::ptrdiff_t>(d)),
               FieldMode::Real, xy.mode};
    TruncVec y{std::vector<cx>(xy.c.begin() + static_cast<std::ptrdiff_t>(d), xy.c.end()),
               FieldMode::Real, xy.mode};
    return PairVec{std::move(x), std::move(y)};
}

PairVec apply_pair(const OperatorSpec& spec, const PairVec& z) {
    if (spec.kind != OpKind::Complexified) {
        throw std::invalid_argument("apply_pair: requires a complexified operator");
    }
    const OperatorSpec& inner = spec.children[0];
    return PairVec{apply(inner, z.x), apply(inner, z.y)};
}

bool is_monomial(const OperatorSpec& spec) {
    switch (spec.kind) {
        case OpKind::CTypeFull:
            return false;
        case OpKind::DirectSum:
            return is_monomial(spec.children[0]) && is_monomial(spec.children[1]);
        case OpKind::Complexified:
            return is_monomial(spec.children[0]);
        default:
            return true;
    }
}

bool MonomialMap::injective_on_support() const {
    std::vector<bool> seen(target.size(), false);
    for (std::size_t j = 0; j < target.size(); ++j) {
        const std::size_t t = target[j];
        if (t == kNoTarget || scale[j] == cx(0.0, 0.0)) continue;
        if (seen[t]) return false;
        seen[t] = true;
    }
    return true;
}

namespace {

MonomialMap monomial_identity(std::size_t dim) {
    MonomialMap m;
    m.target.resize(dim);
    m.scale.assign(dim, cx(1.0, 0.0));
    for (std::size_t j = 0; j < dim; ++j) m.target[j] = j;
    return m;
}

MonomialMap monomial_base(const OperatorSpec& spec) {
    MonomialMap m;
    m.target.assign(spec.dim, kNoTarget);
    m.scale.assign(spec.dim, cx(0.0, 0.0));
    for (std::size_t k = 0; k < spec.dim; ++k) {
        const SparseRow row = basis_row(spec, k);
        if (row.count > 1) {
            throw std::logic_error("monomial map requested for a non-monomial operator");
        }
        if (row.count == 1) {
            m.target[k] = row.entry[0].first;
            m.scale[k] = row.entry[0].second;
        }
    }
    return m;
}

// after ∘ first (apply `first`, then `after`).
MonomialMap monomial_compose(const MonomialMap& after, const MonomialMap& first) {
    MonomialMap out;
    const std::size_t dim = first.target.size();
    out.target.assign(dim, kNoTarget);
    out.scale.assign(dim, cx(0.0, 0.0));
    for (std::size_t j = 0; j < dim; ++j) {
        const std::size_t t = first.target[j];
        if (t == kNoTarget) continue;
        const std::size_t u = after.target[t];
        if (u == kNoTarget) continue;
        out.target[j] = u;
        out.scale[j] = after.scale[t] * first.scale[j];
    }
    return out;
}

} // namespace

MonomialMap monomial_power(const OperatorSpec& spec, std::uint64_t k) {
    if (!is_monomial(spec)) {
        throw std::logic_error("monomial map requested for a non-monomial operator");
    }
    MonomialMap result = monomial_identity(spec.dim);
    if (k == 0) return result;
    MonomialMap base = monomial_base(spec);
    for (;;) {
        if (k & 1ULL) result = monomial_compose(base, result);
        k >>= 1;
        if (k == 0) break;
        base = monomial_compose(base, base);
    }
    return result;
}

TruncVec apply_power(const OperatorSpec& spec, const TruncVec& x, std::uint64_t k,
                     std::uint64_t max_iter) {
    if (x.dim() != spec.dim) throw std::invalid_argument("apply_power: dimension mismatch");
    if (k > max_iter) {
        throw std::invalid_argument("apply_power: power " + std::to_string(k) +
                                    " exceeds the configured iteration cap " +
                                    std::to_string(max_iter));
    }
    if (k == 0) return x;
    if (is_monomial(spec)) {
        const MonomialMap m = monomial_power(spec, k);
        TruncVec y = seqspace::zero_vec(spec.dim, x.field, x.mode);
        for (std::size_t j = 0; j < spec.dim; ++j) {
            if (m.target[j] == kNoTarget) continue;
            const cx xj = x.c[j];
            if (xj == cx(0.0, 0.0)) continue;
            y.c[m.target[j]] += m.scale[j] * xj;
        }
        return y;
    }
    TruncVec y = x;
    for (std::uint64_t i = 0; i < k; ++i) y = apply(spec, y);
    return y;
}

double power_norm_exact(const OperatorSpec& spec, std::uint64_t k) {
    const MonomialMap m = monomial_power(spec, k);
    // Group scale magnitudes by target coordinate; the norm of the map is the
    // max over targets of the dual-exponent norm of each group (Hölder,
    // attained), which collapses to max |scale| on injective maps.
    std::vector<std::pair<std::size_t, double>> hits;
    hits.reserve(m.target.size());
    for (std::size_t j = 0; j < m.target.size(); ++j) {
        if (m.target[j] == kNoTarget) continue;
        const double a = std::abs(m.scale[j]);
        if (a > 0.0) hits.emplace_back(m.target[j], a);
    }
    if (hits.empty()) return 0.0;
    std::sort(hits.begin(), hits.end());
    const bool q_inf = !spec.mode.sup && spec.mode.p == 1.0; // dual of l1 is sup
    const double q = spec.mode.sup ? 1.0 : spec.mode.p / (spec.mode.p - 1.0);
    double best = 0.0;
    std::size_t i = 0;
    while (i < hits.size()) {
        std::size_t j = i;
        double gmax = 0.0;
        while (j < hits.size() && hits[j].first == hits[i].first) {
            gmax = std::max(gmax, hits[j].second);
            ++j;
        }
        double group;
        if (q_inf || j == i + 1) {
            group = gmax;
        } else {
            double acc = 0.0;
            for (std::size_t t = i; t < j; ++t) acc += std::pow(hits[t].second / gmax, q);
            group = gmax * std::pow(acc, 1.0 / q);
        }
        best = std::max(best, group);
        i = j;
    }
    return best;
}

double restricted_norm_exact(const OperatorSpec& spec, std::uint64_t power,
                             const std::vector<std::size_t>& basis, std::uint64_t max_iter) {
    if (basis.empty()) throw std::invalid_argument("restricted_norm_exact: empty basis");
    {
        std::vector<std::size_t> sorted = basis;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw std::invalid_argument("restricted_norm_exact: duplicate basis index");
        }
        if (sorted.back() >= spec.dim) {
            throw std::out_of_range("restricted_norm_exact: basis index outside truncation");
        }
    }
    std::vector<bool> seen(spec.dim, false);
    double best = 0.0;
    for (std::size_t j : basis) {
        const TruncVec image =
            apply_power(spec, seqspace::unit_vec(spec.dim, j, spec.field, spec.mode), power,
                        max_iter);
        for (std::size_t t = 0; t < image.dim(); ++t) {
            if (image.c[t] == cx(0.0, 0.0)) continue;
            if (seen[t]) {
                throw DisjointnessViolated(
                    "restricted_norm_exact: images overlap at coordinate " + std::to_string(t));
            }
            seen[t] = true;
        }
        best = std::max(best, seqspace::norm(image));
    }
    return best;
}

namespace {

NormEstimate norm_by_sampling(const OperatorSpec& spec, std::size_t trials, std::uint64_t seed) {
    rng::Rng gen(rng::derive_seed(seed, 0x5A11));
    double best = 0.0;
    if (spec.kind == OpKind::Complexified) {
        const OperatorSpec& inner = spec.children[0];
        for (std::size_t k = 0; k < inner.dim; ++k) {
            const PairVec z{seqspace::unit_vec(inner.dim, k, FieldMode::Real, spec.mode),
                            seqspace::zero_vec(inner.dim, FieldMode::Real, spec.mode)};
            best = std::max(best, seqspace::pair_norm(apply_pair(spec, z)));
        }
        for (std::size_t t = 0; t < trials; ++t) {
            PairVec z{gen.unit_vector(inner.dim, FieldMode::Real, spec.mode),
                      gen.unit_vector(inner.dim, FieldMode::Real, spec.mode)};
            const double zn = seqspace::pair_norm(z);
            if (zn == 0.0) continue;
            best = std::max(best, seqspace::pair_norm(apply_pair(spec, z)) / zn);
        }
        return NormEstimate{best, true};
    }
    for (std::size_t k = 0; k < spec.dim; ++k) {
        best = std::max(
            best, seqspace::norm(apply(spec, seqspace::unit_vec(spec.dim, k, spec.field,
                                                                spec.mode))));
    }
    for (std::size_t t = 0; t < trials; ++t) {
        const TruncVec x = gen.unit_vector(spec.dim, spec.field, spec.mode);
        best = std::max(best, seqspace::norm(apply(spec, x)));
    }
    return NormEstimate{best, true};
}

} // namespace

NormEstimate operator_norm_estimate(const OperatorSpec& spec, std::size_t trials,
                                    std::uint64_t seed) {
    if (spec.kind == OpKind::Complexified || spec.mode.sup || spec.mode.p != 2.0) {
        return norm_by_sampling(spec, trials, seed);
    }
    // Hilbert case: power iteration z <- A*A z; the Rayleigh value ||A z|| at
    // unit z never exceeds the top singular value, so intermediate estimates
    // are honest from below.
    std::vector<SparseRow> rows(spec.dim);
    for (std::size_t k = 0; k < spec.dim; ++k) rows[k] = basis_row(spec, k);
    const auto apply_rows = [&](const std::vector<cx>& z, std::vector<cx>& out) {
        std::fill(out.begin(), out.end(), cx(0.0, 0.0));
        for (std::size_t k = 0; k < spec.dim; ++k) {
            if (z[k] == cx(0.0, 0.0)) continue;
            const SparseRow& r = rows[k];
            for (int i = 0; i < r.count; ++i) {
                out[r.entry[static_cast<std::size_t>(i)].first] +=
                    r.entry[static_cast<std::size_t>(i)].second * z[k];
            }
        }
    };
    const auto apply_adjoint = [&](const std::vector<cx>& y, std::vector<cx>& out) {
        for (std::size_t k = 0; k < spec.dim; ++k) {
            cx acc(0.0, 0.0);
            const SparseRow& r = rows[k];
            for (int i = 0; i < r.count; ++i) {
                acc += std::conj(r.entry[static_cast<std::size_t>(i)].second) *
                       y[r.entry[static_cast<std::size_t>(i)].first];
            }
            out[k] = acc;
        }
    };
    rng::Rng gen(rng::derive_seed(seed, 0x9E57));
    TruncVec start = gen.unit_vector(spec.dim, spec.field, spec.mode);
    std::vector<cx> z = start.c;
    std::vector<cx> az(spec.dim), ahaz(spec.dim);
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
    double sigma = 0.0;
    constexpr int kMaxIters = 20000;
    for (int it = 0; it < kMaxIters; ++it) {
        apply_rows(z, az);
        const double s = norm2(az);
        if (s == 0.0) return NormEstimate{0.0, false};
        apply_adjoint(az, ahaz);
        const double n = norm2(ahaz);
        if (n == 0.0) return NormEstimate{s, false};
        for (std::size_t k = 0; k < spec.dim; ++k) z[k] = ahaz[k] / n;
        if (it > 0 && std::abs(s - sigma) <= 1e-6 * std::max(s, 1e-300)) {
            return NormEstimate{s, false};
        }
        sigma = s;
    }
    return NormEstimate{sigma, true};
}

} // namespace rlab::ops

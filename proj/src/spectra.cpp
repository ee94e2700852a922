#include "rlab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace rlab::spectra {

namespace {

nlohmann::ordered_json descriptor_json(const SpectrumDescriptor& d) {
    nlohmann::ordered_json j;
    switch (d.kind) {
        case SpectrumDescriptor::Kind::Circle:
            j["kind"] = "circle";
            j["radius"] = d.radius;
            break;
        case SpectrumDescriptor::Kind::FiniteSet: {
            j["kind"] = "finite-set";
            nlohmann::ordered_json pts = nlohmann::ordered_json::array();
            for (const cx& p : d.points) pts.push_back({p.real(), p.imag()});
            j["points"] = std::move(pts);
            break;
        }
        case SpectrumDescriptor::Kind::Union: {
            j["kind"] = "union";
            nlohmann::ordered_json parts = nlohmann::ordered_json::array();
            for (const auto& p : d.parts) parts.push_back(descriptor_json(p));
            j["parts"] = std::move(parts);
            break;
        }
        case SpectrumDescriptor::Kind::UnknownAnalytic:
            j["kind"] = "unknown-analytic";
            break;
    }
    j["note"] = d.note;
    return j;
}

bool uniform_weight(const std::vector<double>& w, double& out) {
    if (w.empty()) return false;
    for (double x : w) {
        if (x != w.front()) return false;
    }
    out = w.front();
    return true;
}

SpectrumDescriptor unknown(const std::string& note) {
    SpectrumDescriptor d;
    d.kind = SpectrumDescriptor::Kind::UnknownAnalytic;
    d.note = note;
    return d;
}

} // namespace

std::string SpectrumDescriptor::to_json() const { return descriptor_json(*this).dump(2); }

SpectrumDescriptor essential_spectrum_analytic(const OperatorSpec& spec) {
    SpectrumDescriptor d;
    switch (spec.kind) {
        case ops::OpKind::Identity:
            d.kind = SpectrumDescriptor::Kind::FiniteSet;
            d.points = {cx(1.0, 0.0)};
            d.note = "identity: essential spectrum is the single point 1";
            return d;
        case ops::OpKind::ScalarMul:
            d.kind = SpectrumDescriptor::Kind::FiniteSet;
            d.points = {spec.lambda};
            d.note = "scalar multiple of the identity: essential spectrum is {lambda}";
            return d;
        case ops::OpKind::BackwardShift: {
            double w = 0.0;
            if (!uniform_weight(spec.weights, w)) {
                return unknown("backward shift with non-uniform weights: no closed form carried");
            }
            if (w == 0.0) {
                d.kind = SpectrumDescriptor::Kind::FiniteSet;
                d.points = {cx(0.0, 0.0)};
                d.note = "zero operator: essential spectrum is {0}";
                return d;
            }
            d.kind = SpectrumDescriptor::Kind::Circle;
            d.radius = std::abs(w);
            d.note = "uniform-weight backward shift: essential spectrum is the circle of "
                     "radius |weight| (essential and left-essential spectra coincide here)";
            return d;
        }
        case ops::OpKind::DirectSum: {
            SpectrumDescriptor left = essential_spectrum_analytic(spec.children[0]);
            SpectrumDescriptor right = essential_spectrum_analytic(spec.children[1]);
            if (left.kind == SpectrumDescriptor::Kind::UnknownAnalytic) return left;
            if (right.kind == SpectrumDescriptor::Kind::UnknownAnalytic) return right;
            d.kind = SpectrumDescriptor::Kind::Union;
            d.note = "direct sum: union of the summands' essential spectra";
            const auto absorb = [&](SpectrumDescriptor&& part) {
                if (part.kind == SpectrumDescriptor::Kind::Union) {
                    for (auto& p : part.parts) d.parts.push_back(std::move(p));
                } else {
                    d.parts.push_back(std::move(part));
                }
            };
            absorb(std::move(left));
            absorb(std::move(right));
            return d;
        }
        case ops::OpKind::Complexified: {
            SpectrumDescriptor inner = essential_spectrum_analytic(spec.children[0]);
            if (inner.kind == SpectrumDescriptor::Kind::FiniteSet) {
                // Conjugation closure: the complexified operator's spectrum
                // is symmetric about the real axis.
                std::vector<cx> pts = inner.points;
                for (const cx& p : inner.points) {
                    if (p.imag() != 0.0) pts.push_back(std::conj(p));
                }
                inner.points = std::move(pts);
            }
            inner.note += "; complexification preserves this set (conjugation-symmetric)";
            return inner;
        }
        default:
            return unknown("no analytic essential-spectrum formula carried for this class");
    }
}

bool unit_disc_gate(const SpectrumDescriptor& desc) {
    switch (desc.kind) {
        case SpectrumDescriptor::Kind::Circle:
            return desc.radius <= 1.0;
        case SpectrumDescriptor::Kind::FiniteSet:
            return std::any_of(desc.points.begin(), desc.points.end(),
                               [](const cx& p) { return std::abs(p) <= 1.0; });
        case SpectrumDescriptor::Kind::Union:
            return std::any_of(desc.parts.begin(), desc.parts.end(),
                               [](const SpectrumDescriptor& p) { return unit_disc_gate(p); });
        case SpectrumDescriptor::Kind::UnknownAnalytic:
            break;
    }
    throw std::invalid_argument(
        "unit_disc_gate: descriptor is not analytic; refusing to guess from finite sections");
}

namespace {

cx int_pow(cx base, std::uint64_t k) {
    cx result(1.0, 0.0);
    while (k) {
        if (k & 1ULL) result *= base;
        base *= base;
        k >>= 1;
    }
    return result;
}

} // namespace

std::size_t point_spectrum_blocks(const ctype::CTypeData& ct, cx lam, std::size_t N_blocks) {
    if (std::abs(std::abs(lam) - 1.0) > 1e-9) {
        throw std::invalid_argument(
            "point_spectrum_blocks: lambda must lie on the unit circle (point spectrum of the "
            "block-cyclic shift consists of roots of unity)");
    }
    if (N_blocks >= ct.blocks()) {
        throw std::out_of_range("point_spectrum_blocks: horizon exceeds stored blocks");
    }
    std::size_t count = 0;
    for (std::size_t n = 0; n <= N_blocks; ++n) {
        const cx val = int_pow(lam, ct.block_len(n));
        if (std::abs(val + cx(1.0, 0.0)) <= 1e-9) ++count;
    }
    return count;
}

InverseWitness inverse_unboundedness_witness(const ctype::CTypeData& ct, double threshold) {
    InverseWitness out;
    out.threshold = threshold;
    for (std::size_t n = 0; n < ct.blocks(); ++n) {
        InverseWitness::Row row;
        row.n = n;
        row.P = ct.interior_product(n);
        row.log2_P = ct.log2_interior_product(n);
        row.vP = (n < ct.v.size() ? std::abs(ct.v[n]) : 0.0) * row.P;
        out.rows.push_back(row);
        if (row.P > out.max_P) {
            out.max_P = row.P;
            out.argmax = n;
        }
        const double wrap = -1.0 / row.P; // forward wrap scalar of block n
        out.wrap_roundtrip_error =
            std::max(out.wrap_roundtrip_error, std::abs(wrap * row.P + 1.0));
        const double from_logs = std::exp2(row.log2_P);
        out.log_product_rel_error = std::max(
            out.log_product_rel_error, std::abs(from_logs - row.P) / std::max(row.P, 1e-300));
    }
    out.witnessed = out.max_P > threshold;
    out.verdict = out.witnessed ? "witnessed up to truncation" : "not witnessed up to truncation";
    return out;
}

linalg::Mat finite_section(const OperatorSpec& spec, std::size_t D) {
    if (D == 0) throw std::invalid_argument("finite_section: dimension must be positive");
    if (D > 2048) throw std::invalid_argument("finite_section: dimension cap 2048 exceeded");
    if (D > spec.dim) throw std::invalid_argument("finite_section: dimension exceeds operator");
    linalg::Mat m(D);
    for (std::size_t k = 0; k < D; ++k) {
        const ops::SparseRow row = ops::basis_row(spec, k);
        for (int i = 0; i < row.count; ++i) {
            const auto& [idx, val] = row.entry[static_cast<std::size_t>(i)];
            if (idx < D) m.at(idx, k) = val;
        }
    }
    return m;
}

namespace {

double sigma_bidiagonal_shifted(const linalg::Mat& a, cx mu) {
    const std::size_t n = a.n;
    std::vector<cx> d(n), e(n > 0 ? n - 1 : 0);
    for (std::size_t i = 0; i < n; ++i) d[i] = a.at(i, i) - mu;
    for (std::size_t i = 0; i + 1 < n; ++i) e[i] = a.at(i, i + 1);
    return linalg::sigma_min_bidiagonal(d, e);
}

} // namespace

double smallest_singular(const linalg::Mat& a, cx mu, SigmaMethod method) {
    if (a.n == 0) throw std::invalid_argument("smallest_singular: empty matrix");
    if (method == SigmaMethod::Auto) {
        if (linalg::is_upper_bidiagonal(a)) return sigma_bidiagonal_shifted(a, mu);
        method = (a.n <= 512) ? SigmaMethod::Jacobi : SigmaMethod::InverseIteration;
    }
    if (method == SigmaMethod::BidiagonalSturm) {
        if (!linalg::is_upper_bidiagonal(a)) {
            throw std::invalid_argument("smallest_singular: matrix is not bidiagonal");
        }
        return sigma_bidiagonal_shifted(a, mu);
    }
    linalg::Mat shifted = a;
    for (std::size_t i = 0; i < a.n; ++i) shifted.at(i, i) -= mu;
    if (method == SigmaMethod::Jacobi) return linalg::sigma_min_jacobi(std::move(shifted));
    return linalg::sigma_min_inverse_iteration(shifted);
}

std::string PseudospectrumGrid::to_csv() const {
    std::ostringstream out;
    out << "re,im,sigma_min\n";
    char buf[64];
    std::size_t idx = 0;
    for (std::size_t iy = 0; iy < rect.ny; ++iy) {
        const double im =
            rect.ny == 1 ? rect.im0
                         : rect.im0 + (rect.im1 - rect.im0) * static_cast<double>(iy) /
                               static_cast<double>(rect.ny - 1);
        for (std::size_t ix = 0; ix < rect.nx; ++ix, ++idx) {
            const double re =
                rect.nx == 1 ? rect.re0
                             : rect.re0 + (rect.re1 - rect.re0) * static_cast<double>(ix) /
                                   static_cast<double>(rect.nx - 1);
            std::snprintf(buf, sizeof(buf), "%.17g", re);
            out << buf << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", im);
            out << buf << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", sigma[idx]);
            out << buf << "\n";
        }
    }
    return out.str();
}

PseudospectrumGrid pseudospectrum_grid(const OperatorSpec& spec, std::size_t D,
                                       const GridRect& rect) {
    if (rect.nx == 0 || rect.ny == 0) {
        throw std::invalid_argument("pseudospectrum_grid: empty grid");
    }
    if (rect.nx * rect.ny > 100'000) {
        throw std::invalid_argument("pseudospectrum_grid: grid cap 1e5 points exceeded");
    }
    const linalg::Mat section = finite_section(spec, D);
    PseudospectrumGrid grid;
    grid.rect = rect;
    grid.sigma.resize(rect.nx * rect.ny);
    std::size_t idx = 0;
    for (std::size_t iy = 0; iy < rect.ny; ++iy) {
        const double im =
            rect.ny == 1 ? rect.im0
                         : rect.im0 + (rect.im1 - rect.im0) * static_cast<double>(iy) /
                               static_cast<double>(rect.ny - 1);
        for (std::size_t ix = 0; ix < rect.nx; ++ix, ++idx) {
            const double re =
                rect.nx == 1 ? rect.re0
                             : rect.re0 + (rect.re1 - rect.re0) * static_cast<double>(ix) /
                                   static_cast<double>(rect.nx - 1);
            grid.sigma[idx] = smallest_singular(section, cx(re, im), SigmaMethod::Auto);
        }
    }
    return grid;
}

} // namespace rlab::spectra

#include "rlab/ctype_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace rlab::ctype {

std::size_t CTypeData::block_of(std::size_t k) const {
    if (k >= dim()) throw std::out_of_range("block_of: coordinate outside truncation");
    // b is sorted; find last boundary <= k.
    auto it = std::upper_bound(b.begin(), b.end(), k);
    return static_cast<std::size_t>(it - b.begin()) - 1;
}

double CTypeData::interior_product(std::size_t n) const {
    double p = 1.0;
    for (std::size_t j = b[n] + 1; j <= b[n + 1] - 1; ++j) p *= w[j];
    return p;
}

double CTypeData::log2_interior_product(std::size_t n) const {
    double s = 0.0;
    for (std::size_t j = b[n] + 1; j <= b[n + 1] - 1; ++j) s += std::log2(std::abs(w[j]));
    return s;
}

std::vector<std::string> CTypeData::validate() const {
    std::vector<std::string> out;
    if (b.size() < 2) {
        out.push_back("block boundaries: need at least one block");
        return out;
    }
    bool boundaries_ok = true;
    if (b.front() != 0) {
        out.push_back("block boundaries: b_0 must be 0");
        boundaries_ok = false;
    }
    for (std::size_t i = 0; i + 1 < b.size(); ++i) {
        if (b[i + 1] <= b[i]) {
            out.push_back("block boundaries: b_" + std::to_string(i + 1) +
                          " must exceed b_" + std::to_string(i));
            boundaries_ok = false;
        }
    }
    const std::size_t m = blocks();
    if (phi.size() != m) {
        out.push_back("feedback map: expected " + std::to_string(m) + " entries, got " +
                      std::to_string(phi.size()));
        return out;
    }
    std::set<std::size_t> attained;
    for (std::size_t n = 1; n < m; ++n) {
        if (phi[n] >= n) {
            out.push_back("feedback map: phi(" + std::to_string(n) +
                          ") = " + std::to_string(phi[n]) + " must be < n");
        } else {
            attained.insert(phi[n]);
        }
    }
    // Finite-range surrogate for "each target is fed infinitely often":
    // every target below the largest attained one must itself be attained by
    // some stored block. (Whether fibers are infinite is untestable here; the
    // harness attaches a warning to that effect.)
    if (!attained.empty()) {
        const std::size_t l_max = *attained.rbegin();
        for (std::size_t l = 0; l <= l_max; ++l) {
            if (!attained.count(l)) {
                out.push_back("feedback map: target block " + std::to_string(l) +
                              " is fed by no stored block (truncation too short?)");
            }
        }
    }
    for (std::size_t n = 1; boundaries_ok && n < m; ++n) {
        if (phi[n] >= n) continue; // already reported above
        const std::size_t ln = block_len(n);
        const std::size_t lphin = block_len(phi[n]);
        if (ln % (2 * lphin) != 0) {
            out.push_back("block lengths: L_" + std::to_string(n) + " = " + std::to_string(ln) +
                          " is not a multiple of 2*L_" + std::to_string(phi[n]) + " = " +
                          std::to_string(2 * lphin));
        }
    }
    if (w.size() != dim()) {
        out.push_back("weights: expected " + std::to_string(dim()) + " entries, got " +
                      std::to_string(w.size()));
    } else {
        double wmin = std::numeric_limits<double>::infinity();
        double wmax = 0.0;
        bool finite = true;
        for (std::size_t j = 1; j < w.size(); ++j) {
            const double a = std::abs(w[j]);
            if (!std::isfinite(a)) finite = false;
            wmin = std::min(wmin, a);
            wmax = std::max(wmax, a);
        }
        if (!finite) out.push_back("weights: non-finite entry");
        if (w.size() > 1 && wmin <= 0.0) out.push_back("weights: |w_j| must be bounded away from 0");
        if (w.size() > 1 && !(wmax < std::numeric_limits<double>::infinity())) {
            out.push_back("weights: |w_j| must be bounded above");
        }
    }
    if (v.size() != m) {
        out.push_back("couplings: expected " + std::to_string(m) + " entries, got " +
                      std::to_string(v.size()));
    } else {
        for (std::size_t n = 1; n < m; ++n) {
            if (!std::isfinite(v[n])) out.push_back("couplings: non-finite v_" + std::to_string(n));
        }
        for (std::size_t n = 2; n < m; ++n) {
            if (std::abs(v[n]) > std::abs(v[n - 1])) {
                out.push_back("couplings: |v_n| must be nonincreasing (summability witness), "
                              "violated at n = " + std::to_string(n));
                break;
            }
        }
    }
    return out;
}

std::size_t phi_clear_top_bit(std::size_t n) {
    if (n == 0) return 0;
    std::size_t top = std::size_t{1} << (63 - static_cast<unsigned>(__builtin_clzll(n)));
    return n - top;
}

namespace {

CTypeData doubling_config(std::size_t n_blocks, bool capped) {
    if (n_blocks < 1) throw std::invalid_argument("doubling config: need at least one block");
    CTypeData ct;
    ct.b.resize(n_blocks + 1);
    ct.b[0] = 0;
    for (std::size_t n = 0; n < n_blocks; ++n) {
        const std::size_t e = capped ? std::min<std::size_t>(n, 10) : n;
        if (!capped && e >= 60) throw std::invalid_argument("doubling config: block length overflow");
        ct.b[n + 1] = ct.b[n] + (std::size_t{1} << e);
    }
    ct.phi.resize(n_blocks, 0);
    for (std::size_t n = 1; n < n_blocks; ++n) ct.phi[n] = phi_clear_top_bit(n);
    ct.w.assign(ct.dim(), 1.0);
    for (std::size_t n = 0; n < n_blocks; ++n) {
        const std::size_t interior = ct.block_len(n) - 1;
        const std::size_t heavy = capped ? (interior + 1) / 2 : interior;
        for (std::size_t j = 0; j < heavy; ++j) ct.w[ct.b[n] + 1 + j] = 2.0;
    }
    ct.v.resize(n_blocks, 0.0);
    for (std::size_t n = 1; n < n_blocks; ++n) ct.v[n] = std::ldexp(1.0, -static_cast<int>(n));
    return ct;
}

} // namespace

CTypeData capped_doubling(std::size_t n_blocks) { return doubling_config(n_blocks, true); }

CTypeData uncapped_doubling(std::size_t n_blocks) {
    if (n_blocks > 10) {
        // 2^(L_9 - 1) = 2^511 is the largest representable interior product.
        throw std::invalid_argument("uncapped doubling: interior products overflow past 10 blocks");
    }
    return doubling_config(n_blocks, false);
}

} // namespace rlab::ctype

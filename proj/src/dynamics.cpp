#include "rlab/dynamics.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rlab/rng.hpp"

namespace rlab::dynamics {

namespace {

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
    return buf;
}

double residual_to(const TruncVec& y, const TruncVec& x) {
    return seqspace::norm(seqspace::axpy(cx(-1.0, 0.0), x, y));
}

} // namespace

std::string OrbitRecord::to_json() const {
    nlohmann::ordered_json j;
    j["spec_digest"] = spec_digest;
    nlohmann::ordered_json init = nlohmann::ordered_json::array();
    for (const cx& c : initial) init.push_back({c.real(), c.imag()});
    j["initial"] = std::move(init);
    j["steps"] = steps;
    j["norms"] = norms;
    j["residuals"] = residuals;
    j["diverged"] = diverged;
    j["diverged_at"] = diverged_at;
    return j.dump(2);
}

std::string OrbitRecord::to_csv() const {
    std::ostringstream out;
    out << "n,norm,residual\n";
    char buf[64];
    for (std::size_t i = 0; i < steps.size(); ++i) {
        out << steps[i] << ",";
        std::snprintf(buf, sizeof(buf), "%.17g", norms[i]);
        out << buf << ",";
        std::snprintf(buf, sizeof(buf), "%.17g", residuals[i]);
        out << buf << "\n";
    }
    return out.str();
}

OrbitRecord orbit_scan(const OperatorSpec& spec, const TruncVec& x, std::uint64_t N,
                       std::uint64_t max_iter) {
    if (N > max_iter) {
        throw std::invalid_argument("orbit_scan: N exceeds the configured iteration cap");
    }
    OrbitRecord rec;
    rec.spec_digest = hex64(rng::fnv1a64(ops::to_toml(spec)));
    rec.initial = x.c;
    TruncVec y = x;
    for (std::uint64_t n = 0;; ++n) {
        const double norm_n = seqspace::norm(y);
        rec.steps.push_back(n);
        rec.norms.push_back(norm_n);
        rec.residuals.push_back(n == 0 ? 0.0 : residual_to(y, x));
        if (norm_n > 1e300) {
            rec.diverged = true;
            rec.diverged_at = n;
            break;
        }
        if (n == N) break;
        y = ops::apply(spec, y);
    }
    return rec;
}

std::vector<std::uint64_t> return_times(const OperatorSpec& spec, const TruncVec& x,
                                        std::uint64_t N, double eps, std::uint64_t max_iter) {
    if (N > max_iter) {
        throw std::invalid_argument("return_times: N exceeds the configured iteration cap");
    }
    const double xnorm = seqspace::norm(x);
    if (xnorm == 0.0) throw std::invalid_argument("return_times: x must be nonzero");
    std::vector<std::uint64_t> out;
    TruncVec y = x;
    for (std::uint64_t n = 1; n <= N; ++n) {
        y = ops::apply(spec, y);
        if (residual_to(y, x) < eps * xnorm) out.push_back(n);
        if (seqspace::norm(y) > 1e300) break;
    }
    return out;
}

namespace {

unsigned __int128 lcm128(unsigned __int128 a, unsigned __int128 b) {
    unsigned __int128 x = a, y = b;
    while (y != 0) {
        const unsigned __int128 r = x % y;
        x = y;
        y = r;
    }
    return (a / x) * b;
}

} // namespace

std::uint64_t exact_period(const ctype::CTypeData& ct, const std::set<std::size_t>& blocks) {
    if (blocks.empty()) throw std::invalid_argument("exact_period: empty block set");
    unsigned __int128 acc = 1;
    const unsigned __int128 cap = static_cast<unsigned __int128>(UINT64_MAX);
    for (std::size_t n : blocks) {
        if (n >= ct.blocks()) throw std::out_of_range("exact_period: block outside truncation");
        acc = lcm128(acc, static_cast<unsigned __int128>(2 * ct.block_len(n)));
        if (acc > cap) {
            throw std::overflow_error(
                "exact_period: lcm exceeds 64 bits; restrict the support to fewer blocks");
        }
    }
    return static_cast<std::uint64_t>(acc);
}

std::vector<std::uint64_t> quasi_rigidity_witness(const ctype::CTypeData& ct,
                                                  std::size_t n_blocks) {
    if (n_blocks == 0 || n_blocks > ct.blocks()) {
        throw std::invalid_argument("quasi_rigidity_witness: block count outside stored range");
    }
    std::vector<std::uint64_t> k;
    k.reserve(n_blocks);
    std::set<std::size_t> blocks;
    std::uint64_t prev = 0;
    for (std::size_t m = 0; m < n_blocks; ++m) {
        blocks.insert(m);
        const std::uint64_t g = exact_period(ct, blocks);
        // Smallest multiple of g strictly greater than the previous entry.
        const std::uint64_t q = prev / g + 1;
        if (q > UINT64_MAX / g) {
            throw std::overflow_error("quasi_rigidity_witness: sequence exceeds 64 bits");
        }
        prev = q * g;
        k.push_back(prev);
    }
    return k;
}

DivergenceScan divergence_scan(const OperatorSpec& spec, const TruncVec& x, std::uint64_t N,
                               double M, std::uint64_t max_iter) {
    const OrbitRecord rec = orbit_scan(spec, x, N, max_iter);
    DivergenceScan out;
    for (std::size_t i = 0; i < rec.norms.size(); ++i) {
        if (rec.norms[i] >= M) {
            out.crossed = true;
            out.first_crossing = rec.steps[i];
            break;
        }
    }
    const std::size_t len = rec.norms.size();
    if (len >= 2) {
        out.tail_monotone = true;
        for (std::size_t i = (3 * len) / 4; i + 1 < len; ++i) {
            if (rec.norms[i + 1] < rec.norms[i]) {
                out.tail_monotone = false;
                break;
            }
        }
    }
    return out;
}

} // namespace rlab::dynamics

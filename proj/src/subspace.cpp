#include "rlab/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "rlab/dynamics.hpp"
#include "rlab/linalg.hpp"
#include "rlab/rng.hpp"

namespace rlab::subspace {

namespace {

using seqspace::axpy;
using seqspace::norm;
using seqspace::unit_vec;
using seqspace::zero_vec;

// ---------------------------------------------------------------------------
// Dual functionals via the Gram matrix
// ---------------------------------------------------------------------------

struct DualSystem {
    std::vector<std::vector<cx>> u;  // ambient functionals, u[n](x) = sum_k u[n][k] x[k]
    std::vector<double> norms;       // dual-norm upper bounds, p-aware
};

void require_consistent(const std::vector<TruncVec>& gens, const char* who) {
    for (const auto& g : gens) {
        if (g.dim() != gens.front().dim() || !(g.mode == gens.front().mode) ||
            g.field != gens.front().field) {
            throw std::invalid_argument(std::string(who) +
                                        ": generators disagree in dimension, norm, or field");
        }
    }
}

// Dual-norm inflation factor from the l2 value: for coefficient norm lp the
// functional's dual norm is its lq norm (1/p + 1/q = 1), bounded by
// s^{max(0, 1/2 - 1/p)} times the l2 norm on a support of size s.
double dual_factor(const NormMode& mode, std::size_t support) {
    const double s = static_cast<double>(std::max<std::size_t>(support, 1));
    double e = 0.0;
    if (mode.sup) {
        e = 0.5;
    } else if (mode.p > 2.0) {
        e = 0.5 - 1.0 / mode.p;
    }
    return std::pow(s, e);
}

// Least-coefficient-norm biorthogonal functionals of an independent system:
// solve the Gram system M c = e_n with M(j,i) = sum_k g_j[k] conj(g_i[k]);
// then u_n[k] = sum_i c_i conj(g_i[k]) and ||u_n||_2^2 = Re(c_n).
DualSystem dual_system(const std::vector<TruncVec>& gens) {
    require_consistent(gens, "dual_system");
    const std::size_t m = gens.size();
    const std::size_t dim = gens.front().dim();

    linalg::Mat gram(m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            cx s(0.0, 0.0);
            for (std::size_t k = 0; k < dim; ++k) s += gens[j].c[k] * std::conj(gens[i].c[k]);
            gram.at(j, i) = s;
        }
    }

    DualSystem out;
    out.u.resize(m);
    out.norms.resize(m);
    for (std::size_t n = 0; n < m; ++n) {
        std::vector<cx> c(m, cx(0.0, 0.0));
        c[n] = cx(1.0, 0.0);
        if (!linalg::lu_solve(gram, c)) {
            throw std::invalid_argument("dual_system: rank-deficient generator system");
        }
        const double l2sq = c[n].real();
        if (!(l2sq > 0.0) || !std::isfinite(l2sq)) {
            throw std::invalid_argument("dual_system: rank-deficient generator system");
        }
        std::vector<cx> u(dim, cx(0.0, 0.0));
        for (std::size_t i = 0; i < m; ++i) {
            if (c[i] == cx(0.0, 0.0)) continue;
            for (std::size_t k = 0; k < dim; ++k) u[k] += c[i] * std::conj(gens[i].c[k]);
        }
        std::size_t support = 0;
        for (const auto& val : u) {
            if (std::abs(val) > 0.0) ++support;
        }
        out.norms[n] = std::sqrt(l2sq) * dual_factor(gens.front().mode, support);
        out.u[n] = std::move(u);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Exact null-space step for the extraction
// ---------------------------------------------------------------------------

// Row-reduce the r x m complex matrix `rows` in place; returns the pivot
// column of each eliminated row (rank = pivots.size()).
std::vector<std::size_t> reduce_complex(std::vector<std::vector<cx>>& rows, double tol) {
    std::vector<std::size_t> pivots;
    if (rows.empty()) return pivots;
    const std::size_t m = rows.front().size();
    std::size_t rank = 0;
    for (std::size_t col = 0; col < m && rank < rows.size(); ++col) {
        std::size_t piv = rank;
        double best = std::abs(rows[rank][col]);
        for (std::size_t r = rank + 1; r < rows.size(); ++r) {
            if (std::abs(rows[r][col]) > best) {
                best = std::abs(rows[r][col]);
                piv = r;
            }
        }
        if (best <= tol) continue;
        std::swap(rows[rank], rows[piv]);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r == rank || rows[r][col] == cx(0.0, 0.0)) continue;
            const cx f = rows[r][col] / rows[rank][col];
            for (std::size_t k = col; k < m; ++k) rows[r][k] -= f * rows[rank][k];
            rows[r][col] = cx(0.0, 0.0);
        }
        pivots.push_back(col);
        ++rank;
    }
    return pivots;
}

TruncVec combine(const Subspace& gens, const std::vector<cx>& coef) {
    TruncVec x = zero_vec(gens.front().dim(), gens.front().field, gens.front().mode);
    for (std::size_t k = 0; k < gens.size(); ++k) {
        if (coef[k] == cx(0.0, 0.0)) continue;
        for (std::size_t t = 0; t < x.dim(); ++t) x.c[t] += coef[k] * gens[k].c[t];
    }
    return x;
}

double max_abs(const std::vector<std::vector<cx>>& rows) {
    double m = 0.0;
    for (const auto& r : rows) {
        for (const auto& v : r) m = std::max(m, std::abs(v));
    }
    return m;
}

// ---------------------------------------------------------------------------
// Shared cert helpers
// ---------------------------------------------------------------------------

// Upper bound for ||T^power|| on the span of the listed coordinates: exact
// when the coordinate images have disjoint supports, otherwise the triangle
// sum of the image norms (sound because the coordinates themselves are
// disjoint, so |a_n| <= ||sum a e||).
double tail_bound(const ops::OperatorSpec& spec, std::uint64_t power,
                  const std::vector<std::size_t>& tail, std::vector<std::string>* warnings) {
    if (tail.empty()) return 0.0;
    try {
        return ops::restricted_norm_exact(spec, power, tail);
    } catch (const ops::DisjointnessViolated&) {
        double s = 0.0;
        for (std::size_t idx : tail) {
            TruncVec e = unit_vec(spec.dim, idx, spec.field, spec.mode);
            s += norm(ops::apply_power(spec, e, power));
        }
        if (warnings != nullptr) {
            warnings->push_back(
                "restricted norm bounded by a triangle sum (coordinate images overlap)");
        }
        return s;
    }
}

double bound_pair(std::size_t j1, std::size_t n1) {  // 1-based indices
    return std::exp2(-static_cast<double>(j1 + n1));
}

std::vector<double> abs_coeffs(const std::vector<cx>& a) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = std::abs(a[i]);
    return out;
}

nlohmann::ordered_json vec_to_json(const TruncVec& v) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& z : v.c) {
        arr.push_back(nlohmann::ordered_json::array({z.real(), z.imag()}));
    }
    return arr;
}

}  // namespace

// ---------------------------------------------------------------------------
// mazur_extract
// ---------------------------------------------------------------------------

ExtractionResult mazur_extract(const std::vector<Subspace>& chain, std::size_t count) {
    if (count == 0) throw std::invalid_argument("mazur_extract: count must be positive");
    if (chain.size() < count) {
        throw std::invalid_argument("mazur_extract: chain too shallow (" +
                                    std::to_string(chain.size()) + " subspaces for " +
                                    std::to_string(count) + " requested vectors)");
    }
    for (const auto& sub : chain) {
        if (sub.empty()) throw std::invalid_argument("mazur_extract: empty subspace in chain");
        require_consistent(sub, "mazur_extract");
        if (sub.front().dim() != chain.front().front().dim()) {
            throw std::invalid_argument("mazur_extract: chain dimensions disagree");
        }
    }

    ExtractionResult out;
    std::vector<std::vector<cx>> duals;  // functionals of the selected vectors

    for (std::size_t step = 0; step < count; ++step) {
        const Subspace& sub = chain[step];
        const std::size_t m = sub.size();

        // Constraint matrix: rows r over generator coefficients k.
        std::vector<std::vector<cx>> cons(duals.size(), std::vector<cx>(m, cx(0.0, 0.0)));
        for (std::size_t r = 0; r < duals.size(); ++r) {
            for (std::size_t k = 0; k < m; ++k) {
                cx s(0.0, 0.0);
                for (std::size_t t = 0; t < sub[k].dim(); ++t) s += duals[r][t] * sub[k].c[t];
                cons[r][k] = s;
            }
        }
        const double tol = 1e-12 * std::max(1.0, max_abs(cons));

        // Scan null vectors (smallest free index first) for one with a
        // usable norm; generators may be dependent, so a null coefficient
        // vector can still combine to ~0.
        TruncVec picked = zero_vec(sub.front().dim(), sub.front().field, sub.front().mode);
        bool found = false;
        std::vector<std::vector<cx>> reduced = cons;
        const std::vector<std::size_t> pivots = reduce_complex(reduced, tol);
        std::vector<bool> is_pivot(m, false);
        for (std::size_t p : pivots) is_pivot[p] = true;
        for (std::size_t free = 0; free < m && !found; ++free) {
            if (is_pivot[free]) continue;
            std::vector<cx> c(m, cx(0.0, 0.0));
            c[free] = cx(1.0, 0.0);
            for (std::size_t r = 0; r < pivots.size(); ++r) {
                cx s(0.0, 0.0);
                for (std::size_t k = pivots[r] + 1; k < m; ++k) {
                    if (!is_pivot[k]) s += reduced[r][k] * c[k];
                }
                c[pivots[r]] = -s / reduced[r][pivots[r]];
            }
            TruncVec candidate = combine(sub, c);
            const double nrm = norm(candidate);
            if (nrm > 1e-9) {
                for (auto& z : candidate.c) z /= nrm;
                picked = std::move(candidate);
                found = true;
            }
        }
        if (!found) {
            throw NotFoundWithinTruncation(
                "mazur_extract: null space empty at truncation after " +
                std::to_string(step) + " vectors (subspace rank too small)");
        }

        out.vectors.push_back(picked);
        const DualSystem ds = dual_system(out.vectors);
        duals = ds.u;

        ExtractionStage stage;
        for (std::size_t t = 0; t < picked.dim(); ++t) {
            if (std::abs(out.vectors.back().c[t]) > 0.0) stage.support.push_back(t);
        }
        stage.functional = ds.u.back();
        stage.functional_norm = ds.norms.back();
        out.stages.push_back(std::move(stage));
    }

    // Sampled estimate of the basis constant: worst prefix-projection ratio
    // over deterministic random coefficient draws.
    rng::Rng gen(0x4D5A3252ULL);
    double worst = 1.0;
    const std::size_t dim = out.vectors.front().dim();
    const FieldMode field = out.vectors.front().field;
    const NormMode mode = out.vectors.front().mode;
    for (int trial = 0; trial < 64; ++trial) {
        std::vector<cx> a(count);
        for (auto& z : a) {
            z = field == FieldMode::Complex ? cx(gen.normal(), gen.normal())
                                            : cx(gen.normal(), 0.0);
        }
        TruncVec x = zero_vec(dim, field, mode);
        std::vector<double> prefix_norms;
        for (std::size_t n = 0; n < count; ++n) {
            x = axpy(a[n], out.vectors[n], x);
            prefix_norms.push_back(norm(x));
        }
        const double total = prefix_norms.back();
        if (total < 1e-12) continue;
        for (std::size_t n = 0; n + 1 < count; ++n) {
            worst = std::max(worst, prefix_norms[n] / total);
        }
    }
    out.basis_constant = worst;
    return out;
}

ExtractionResult mazur_extract_indices(const std::vector<std::vector<std::size_t>>& chain,
                                       std::size_t count, std::size_t dim, FieldMode field,
                                       NormMode mode) {
    std::vector<Subspace> subs;
    subs.reserve(chain.size());
    for (const auto& idx_set : chain) {
        Subspace sub;
        sub.reserve(idx_set.size());
        for (std::size_t idx : idx_set) {
            if (idx >= dim) {
                throw std::invalid_argument("mazur_extract_indices: index out of range");
            }
            sub.push_back(unit_vec(dim, idx, field, mode));
        }
        subs.push_back(std::move(sub));
    }
    return mazur_extract(subs, count);
}

// ---------------------------------------------------------------------------
// dual_norm_bound
// ---------------------------------------------------------------------------

double dual_norm_bound(const std::vector<TruncVec>& gens) {
    if (gens.empty()) return 1.0;
    const DualSystem ds = dual_system(gens);
    double worst = 0.0;
    for (double v : ds.norms) worst = std::max(worst, v);
    return 1.0 + worst;
}

// ---------------------------------------------------------------------------
// second_option_select
// ---------------------------------------------------------------------------

std::vector<std::size_t> second_option_select(const ctype::CTypeData& ct,
                                              const std::vector<std::uint64_t>& k_seq,
                                              double m_bound) {
    if (!(m_bound > 0.0)) throw std::invalid_argument("second_option_select: m_bound must be positive");
    for (std::size_t k = 1; k < ct.w.size(); ++k) {
        if (std::abs(ct.w[k]) > m_bound) {
            throw std::invalid_argument(
                "second_option_select: m_bound must dominate every weight magnitude (|w[" +
                std::to_string(k) + "]| = " + std::to_string(std::abs(ct.w[k])) + ")");
        }
    }
    const double log_m = std::log2(m_bound);
    std::vector<std::size_t> out;
    std::size_t prev = 0;  // selections start at block 1 and strictly increase
    for (std::size_t n = 0; n < k_seq.size(); ++n) {
        const double excess = static_cast<double>(k_seq[n] - 1);
        bool found = false;
        for (std::size_t l = std::max<std::size_t>(prev + 1, 1); l < ct.blocks(); ++l) {
            const bool len_ok = static_cast<double>(ct.block_len(l)) > excess;
            const bool prod_ok = excess * log_m <= ct.log2_interior_product(l);
            if (len_ok && prod_ok) {
                out.push_back(l);
                prev = l;
                found = true;
                break;
            }
        }
        if (!found) {
            std::ostringstream msg;
            msg << "second_option_select: no stored block after index " << prev
                << " admits power " << k_seq[n] << " (need block length > " << excess
                << " and log2 interior product >= " << excess * log_m
                << "); grow the block structure";
            throw NotFoundWithinTruncation(msg.str());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

ApproxOracle block_truncation_oracle(std::shared_ptr<const ctype::CTypeData> ct) {
    if (!ct) throw std::invalid_argument("block_truncation_oracle: null block structure");
    return [ct](const TruncVec& target, double delta) -> TruncVec {
        // Keep the fewest leading blocks whose cut tail stays under delta;
        // shorter prefixes have smaller exact periods.
        const std::size_t dim = target.dim();
        for (std::size_t m = 0; m <= ct->blocks(); ++m) {
            const std::size_t cut = std::min(ct->b[m], dim);
            TruncVec y = target;
            for (std::size_t k = cut; k < dim; ++k) y.c[k] = cx(0.0, 0.0);
            TruncVec tail = axpy(cx(-1.0, 0.0), y, target);
            if (norm(tail) < delta) return y;
            if (cut == dim) break;
        }
        return target;  // block-aligned truncation: the full vector, tail 0 < delta
    };
}

ApproxOracle passthrough_oracle() {
    return [](const TruncVec& target, double) { return target; };
}

// ---------------------------------------------------------------------------
// claim_construct
// ---------------------------------------------------------------------------

SubspaceCert claim_construct(const ops::OperatorSpec& spec,
                             const std::vector<std::uint64_t>& k_candidates,
                             const std::vector<std::size_t>& e_basis, std::size_t steps,
                             const ApproxOracle& oracle, double basis_k) {
    if (steps == 0) throw std::invalid_argument("claim_construct: steps must be positive");
    if (e_basis.size() < steps) {
        throw std::invalid_argument("claim_construct: need at least one target coordinate per step");
    }
    if (!(basis_k >= 1.0)) throw std::invalid_argument("claim_construct: basis bound must be >= 1");
    if (!oracle) throw std::invalid_argument("claim_construct: missing oracle");
    std::set<std::size_t> distinct(e_basis.begin(), e_basis.begin() + static_cast<long>(steps));
    if (distinct.size() != steps) {
        throw std::invalid_argument("claim_construct: target coordinates must be distinct");
    }
    for (std::size_t idx : e_basis) {
        if (idx >= spec.dim) throw std::invalid_argument("claim_construct: coordinate out of range");
    }
    for (std::size_t i = 1; i < k_candidates.size(); ++i) {
        if (k_candidates[i] <= k_candidates[i - 1]) {
            throw std::invalid_argument("claim_construct: candidate powers must strictly increase");
        }
    }
    if (k_candidates.empty() || k_candidates.front() == 0) {
        throw std::invalid_argument("claim_construct: candidate powers must be positive");
    }

    SubspaceCert cert;
    cert.mode = "claim";
    cert.K = basis_k;
    cert.op_toml = ops::to_toml(spec);
    cert.warnings.push_back(
        "perturbation radius rule: min of the dual-sum bound and the continuity margin "
        "(a max of the two cannot guarantee both smallness conditions at once)");

    const bool monomial = ops::is_monomial(spec);
    std::vector<double> power_norms;  // exact ||T^{powers[j]}|| when available

    for (std::size_t n1 = 1; n1 <= steps; ++n1) {  // 1-based step index
        const std::size_t i = n1 - 1;
        const TruncVec e_n = unit_vec(spec.dim, e_basis[i], spec.field, spec.mode);

        // Radius: the (i) bound shrunk by the continuity margin for the
        // already-selected powers, when an exact norm is available.
        const double bound_i = 1.0 / (std::exp2(static_cast<double>(n1 + 1)) * basis_k);
        double delta = bound_i;
        for (std::size_t j = 0; j < cert.powers.size(); ++j) {
            if (monomial && power_norms[j] > 0.0) {
                delta = std::min(delta, bound_pair(j + 1, n1) / power_norms[j]);
            }
        }
        delta *= 0.5;  // measured values must sit strictly inside their bounds

        TruncVec f = e_n;
        TruncVec g = zero_vec(spec.dim, spec.field, spec.mode);
        std::vector<double> row_ii;
        bool accepted = false;
        for (int attempt = 0; attempt < 64 && !accepted; ++attempt) {
            f = oracle(e_n, delta);
            if (f.dim() != spec.dim || !(f.mode == e_n.mode) || f.field != e_n.field) {
                throw std::invalid_argument("claim_construct: oracle output shape mismatch");
            }
            g = axpy(cx(-1.0, 0.0), e_n, f);
            row_ii.clear();
            bool ok = norm(g) < bound_i;
            for (std::size_t j = 0; ok && j < cert.powers.size(); ++j) {
                const double r = norm(ops::apply_power(spec, g, cert.powers[j]));
                row_ii.push_back(r);
                ok = r < bound_pair(j + 1, n1);
            }
            if (ok && row_ii.size() == cert.powers.size()) {
                accepted = true;
            } else {
                delta *= 0.5;
                if (delta < 1e-280) break;
            }
        }
        if (!accepted) {
            throw NotFoundWithinTruncation(
                "claim_construct: oracle cannot meet the perturbation radius at step " +
                std::to_string(n1) + " (truncation too small for the requested smallness)");
        }

        cert.gen_f.push_back(f);
        cert.basis_e.push_back(e_basis[i]);
        cert.ledger_i.push_back(norm(g));
        cert.ledger_ii.push_back(row_ii);

        // Return power: smallest admissible candidate above the previous
        // selection under which every constructed generator nearly returns.
        const std::uint64_t prev = cert.powers.empty() ? 0 : cert.powers.back();
        bool selected = false;
        for (std::uint64_t k : k_candidates) {
            if (k <= prev) continue;
            std::vector<double> row_iii;
            bool ok = true;
            for (std::size_t t = 0; t < cert.gen_f.size() && ok; ++t) {
                TruncVec img = ops::apply_power(spec, cert.gen_f[t], k);
                const double r = norm(axpy(cx(-1.0, 0.0), cert.gen_f[t], img));
                row_iii.push_back(r);
                ok = r < bound_pair(n1, t + 1);
            }
            if (ok) {
                cert.powers.push_back(k);
                cert.ledger_iii.push_back(std::move(row_iii));
                power_norms.push_back(monomial ? ops::power_norm_exact(spec, k) : -1.0);
                selected = true;
                break;
            }
        }
        if (!selected) {
            throw NotFoundWithinTruncation(
                "claim_construct: no admissible return power within the candidate range at step " +
                std::to_string(n1) + " (extend the candidate sequence)");
        }

        std::vector<std::size_t> tail(e_basis.begin() + static_cast<long>(n1),
                                      e_basis.begin() + static_cast<long>(steps));
        cert.tail_restricted.push_back(tail_bound(spec, cert.powers.back(), tail, &cert.warnings));
    }

    // Coordinate targets have dual functionals of norm exactly 1 on their
    // span, so the perturbation sum is the plain sum of the ledger (i) row.
    for (double v : cert.ledger_i) cert.S += v;
    if (!(cert.S < 0.5)) {
        throw std::invalid_argument(
            "claim_construct: certificate refused, perturbation sum reached " +
            std::to_string(cert.S) + " >= 1/2");
    }
    return cert;
}

// ---------------------------------------------------------------------------
// second_option_cert
// ---------------------------------------------------------------------------

SubspaceCert second_option_cert(const ops::OperatorSpec& spec,
                                const std::vector<std::uint64_t>& k_seq, double m_bound) {
    if (spec.kind != ops::OpKind::CTypeWB || !spec.ct) {
        throw std::invalid_argument("second_option_cert: requires the block-cyclic shift kind");
    }
    const ctype::CTypeData& ct = *spec.ct;

    SubspaceCert cert;
    cert.mode = "second-option";
    cert.op_toml = ops::to_toml(spec);
    cert.selection_powers = k_seq;
    cert.selected_blocks = second_option_select(ct, k_seq, m_bound);

    const std::size_t m = cert.selected_blocks.size();
    for (std::size_t l : cert.selected_blocks) cert.basis_e.push_back(ct.b[l + 1] - 1);

    std::vector<TruncVec> gens;
    for (std::size_t idx : cert.basis_e) {
        gens.push_back(unit_vec(spec.dim, idx, spec.field, spec.mode));
    }
    cert.gen_f = gens;
    cert.K = dual_norm_bound(gens);
    cert.S = 0.0;
    cert.ledger_i.assign(m, 0.0);
    for (std::size_t n = 0; n < m; ++n) {
        cert.ledger_ii.emplace_back(n, 0.0);  // perturbations are exactly zero
    }

    // Restricted norms at the selection powers: on the span of the block-end
    // coordinates from position n onward they must not exceed 1.
    for (std::size_t n = 0; n < m; ++n) {
        std::vector<std::size_t> span(cert.basis_e.begin() + static_cast<long>(n),
                                      cert.basis_e.end());
        const double rn = ops::restricted_norm_exact(spec, k_seq[n], span);
        if (!(rn <= 1.0 + 1e-12)) {
            throw std::runtime_error(
                "second_option_cert: selected block violates the unit restricted-norm bound "
                "(value " + std::to_string(rn) + " at position " + std::to_string(n) + ")");
        }
        cert.second_option_norms.push_back(rn);
    }

    // Return powers: cumulative least common multiples of the generator
    // periods, bumped to the next multiple so the sequence strictly
    // increases. Every generator up to position j returns exactly.
    std::set<std::size_t> blocks_so_far;
    std::uint64_t prev = 0;
    for (std::size_t j = 0; j < m; ++j) {
        blocks_so_far.insert(cert.selected_blocks[j]);
        const std::uint64_t period = dynamics::exact_period(ct, blocks_so_far);
        const std::uint64_t k = period * (prev / period + 1);
        cert.powers.push_back(k);
        prev = k;

        std::vector<double> row_iii;
        for (std::size_t n = 0; n <= j; ++n) {
            TruncVec img = ops::apply_power(spec, gens[n], k);
            row_iii.push_back(norm(axpy(cx(-1.0, 0.0), gens[n], img)));
        }
        cert.ledger_iii.push_back(std::move(row_iii));

        std::vector<std::size_t> tail(cert.basis_e.begin() + static_cast<long>(j) + 1,
                                      cert.basis_e.end());
        cert.tail_restricted.push_back(tail_bound(spec, k, tail, &cert.warnings));
    }
    return cert;
}

// ---------------------------------------------------------------------------
// Certificate JSON round-trip (schema "rlab-cert/1")
// ---------------------------------------------------------------------------

std::string SubspaceCert::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "rlab-cert/1";
    j["mode"] = mode;
    if (!gen_f.empty()) {
        j["field"] = gen_f.front().field == FieldMode::Complex ? "complex" : "real";
        if (gen_f.front().mode.sup) {
            j["norm"] = "sup";
        } else {
            j["norm"] = gen_f.front().mode.p;
        }
        j["dim"] = gen_f.front().dim();
    }
    j["powers"] = powers;
    j["selection_powers"] = selection_powers;
    j["selected_blocks"] = selected_blocks;
    j["basis_e"] = basis_e;
    nlohmann::ordered_json gens = nlohmann::ordered_json::array();
    for (const auto& f : gen_f) gens.push_back(vec_to_json(f));
    j["gen_f"] = std::move(gens);
    j["K"] = K;
    j["S"] = S;
    j["ledger_i"] = ledger_i;
    j["ledger_ii"] = ledger_ii;
    j["ledger_iii"] = ledger_iii;
    j["tail_restricted"] = tail_restricted;
    j["second_option_norms"] = second_option_norms;
    j["op_toml"] = op_toml;
    j["warnings"] = warnings;
    return j.dump(2) + "\n";
}

SubspaceCert SubspaceCert::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("certificate parse error: ") + e.what());
    }
    if (!j.is_object() || j.value("schema", "") != "rlab-cert/1") {
        throw std::invalid_argument("certificate schema mismatch (expected rlab-cert/1)");
    }
    SubspaceCert cert;
    cert.mode = j.value("mode", "");

    FieldMode field = FieldMode::Real;
    NormMode mode = NormMode::lp(2.0);
    std::size_t dim = 0;
    if (j.contains("field")) {
        field = j["field"] == "complex" ? FieldMode::Complex : FieldMode::Real;
    }
    if (j.contains("norm")) {
        if (j["norm"].is_string()) {
            mode = NormMode::sup_norm();
        } else {
            mode = NormMode::lp(j["norm"].get<double>());
        }
    }
    if (j.contains("dim")) dim = j["dim"].get<std::size_t>();

    auto u64s = [&j](const char* key) {
        return j.value(key, std::vector<std::uint64_t>{});
    };
    auto sizes = [&j](const char* key) {
        return j.value(key, std::vector<std::size_t>{});
    };
    cert.powers = u64s("powers");
    cert.selection_powers = u64s("selection_powers");
    cert.selected_blocks = sizes("selected_blocks");
    cert.basis_e = sizes("basis_e");
    for (const auto& gen : j.value("gen_f", nlohmann::json::array())) {
        std::vector<cx> coeffs;
        coeffs.reserve(gen.size());
        for (const auto& pair : gen) {
            coeffs.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
        }
        if (dim != 0 && coeffs.size() != dim) {
            throw std::invalid_argument("certificate generator dimension mismatch");
        }
        cert.gen_f.push_back(seqspace::make_vec(std::move(coeffs), field, mode));
    }
    cert.K = j.value("K", 1.0);
    cert.S = j.value("S", 0.0);
    cert.ledger_i = j.value("ledger_i", std::vector<double>{});
    cert.ledger_ii = j.value("ledger_ii", std::vector<std::vector<double>>{});
    cert.ledger_iii = j.value("ledger_iii", std::vector<std::vector<double>>{});
    cert.tail_restricted = j.value("tail_restricted", std::vector<double>{});
    cert.second_option_norms = j.value("second_option_norms", std::vector<double>{});
    cert.op_toml = j.value("op_toml", "");
    cert.warnings = j.value("warnings", std::vector<std::string>{});
    return cert;
}

// ---------------------------------------------------------------------------
// verify_recurrent_subspace
// ---------------------------------------------------------------------------

VerifyOutcome verify_recurrent_subspace(const ops::OperatorSpec& spec, const SubspaceCert& cert,
                                        std::size_t sample_count, std::uint64_t seed,
                                        double eps) {
    // --- structural gates (shape problems are thrown, not reported) ---
    if (cert.mode != "claim" && cert.mode != "second-option") {
        throw std::invalid_argument("invalid certificate: unknown mode '" + cert.mode + "'");
    }
    const std::size_t m = cert.gen_f.size();
    if (m == 0 || cert.basis_e.size() != m || cert.ledger_i.size() != m ||
        cert.powers.size() != m || cert.ledger_ii.size() != m || cert.ledger_iii.size() != m ||
        cert.tail_restricted.size() != m) {
        throw std::invalid_argument("invalid certificate: inconsistent ledger shapes");
    }
    for (std::size_t n = 0; n < m; ++n) {
        if (cert.ledger_ii[n].size() != n || cert.ledger_iii[n].size() != n + 1) {
            throw std::invalid_argument("invalid certificate: triangular ledger shape broken");
        }
    }
    for (std::size_t j = 1; j < m; ++j) {
        if (cert.powers[j] <= cert.powers[j - 1]) {
            throw std::invalid_argument("invalid certificate: powers must strictly increase");
        }
    }
    if (!(cert.K >= 1.0)) throw std::invalid_argument("invalid certificate: K < 1");
    std::set<std::size_t> distinct(cert.basis_e.begin(), cert.basis_e.end());
    if (distinct.size() != m) {
        throw std::invalid_argument("invalid certificate: repeated basis coordinates");
    }
    for (std::size_t idx : cert.basis_e) {
        if (idx >= spec.dim) {
            throw std::invalid_argument("invalid certificate: basis coordinate out of range");
        }
    }
    for (const auto& f : cert.gen_f) {
        if (f.dim() != spec.dim || !(f.mode == spec.mode) || f.field != spec.field) {
            throw std::invalid_argument("invalid certificate: generator shape mismatch");
        }
    }

    // --- perturbation-sum gate: recorded AND recomputed must stay < 1/2 ---
    std::vector<TruncVec> e_vecs;
    std::vector<TruncVec> g_vecs;
    double s_recomputed = 0.0;
    for (std::size_t n = 0; n < m; ++n) {
        e_vecs.push_back(unit_vec(spec.dim, cert.basis_e[n], spec.field, spec.mode));
        g_vecs.push_back(axpy(cx(-1.0, 0.0), e_vecs[n], cert.gen_f[n]));
        s_recomputed += norm(g_vecs[n]);
    }
    if (!(cert.S < 0.5) || !(s_recomputed < 0.5)) {
        throw std::invalid_argument("invalid certificate: perturbation sum S >= 1/2");
    }

    VerifyOutcome out;
    out.samples = sample_count;
    auto fail = [&out](const std::string& msg) { out.failures.push_back(msg); };
    auto close = [](double a, double b) {
        return std::abs(a - b) <= 1e-9 * std::max({1e-300, std::abs(a), std::abs(b)}) + 1e-12;
    };

    if (std::abs(cert.S - s_recomputed) > 1e-9 * std::max(1.0, s_recomputed) + 1e-12) {
        fail("recorded perturbation sum disagrees with the recomputed value");
    }
    if (!cert.op_toml.empty() && cert.op_toml != ops::to_toml(spec)) {
        fail("operator description in the certificate disagrees with the supplied operator");
    }

    // --- ledger re-verification: recompute, match, and stay strictly inside ---
    for (std::size_t n = 0; n < m; ++n) {
        const double gn = norm(g_vecs[n]);
        const double bi = 1.0 / (std::exp2(static_cast<double>(n + 2)) * cert.K);
        if (!close(gn, cert.ledger_i[n])) {
            fail("ledger (i) entry " + std::to_string(n + 1) + " does not match recomputation");
        }
        if (!(gn < bi) || !(cert.ledger_i[n] < bi)) {
            fail("ledger (i) entry " + std::to_string(n + 1) + " not strictly inside its bound");
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double r = norm(ops::apply_power(spec, g_vecs[n], cert.powers[j]));
            const double bd = bound_pair(j + 1, n + 1);
            if (!close(r, cert.ledger_ii[n][j])) {
                fail("ledger (ii) entry (" + std::to_string(j + 1) + "," + std::to_string(n + 1) +
                     ") does not match recomputation");
            }
            if (!(r < bd) || !(cert.ledger_ii[n][j] < bd)) {
                fail("ledger (ii) entry (" + std::to_string(j + 1) + "," + std::to_string(n + 1) +
                     ") not strictly inside its bound");
            }
        }
    }
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t n = 0; n <= j; ++n) {
            TruncVec img = ops::apply_power(spec, cert.gen_f[n], cert.powers[j]);
            const double r = norm(axpy(cx(-1.0, 0.0), cert.gen_f[n], img));
            const double bd = bound_pair(j + 1, n + 1);
            if (!close(r, cert.ledger_iii[j][n])) {
                fail("ledger (iii) entry (" + std::to_string(j + 1) + "," + std::to_string(n + 1) +
                     ") does not match recomputation");
            }
            if (!(r < bd) || !(cert.ledger_iii[j][n] < bd)) {
                fail("ledger (iii) entry (" + std::to_string(j + 1) + "," + std::to_string(n + 1) +
                     ") not strictly inside its bound");
            }
        }
        std::vector<std::size_t> tail(cert.basis_e.begin() + static_cast<long>(j) + 1,
                                      cert.basis_e.end());
        const double recomputed = tail_bound(spec, cert.powers[j], tail, nullptr);
        if (cert.tail_restricted[j] < recomputed * (1.0 - 1e-12) - 1e-15) {
            fail("tail restriction bound at power index " + std::to_string(j + 1) +
                 " understates the recomputed value");
        }
    }
    if (cert.mode == "second-option" && cert.selection_powers.size() == m &&
        cert.second_option_norms.size() == m) {
        for (std::size_t n = 0; n < m; ++n) {
            std::vector<std::size_t> span(cert.basis_e.begin() + static_cast<long>(n),
                                          cert.basis_e.end());
            double rn = 0.0;
            try {
                rn = ops::restricted_norm_exact(spec, cert.selection_powers[n], span);
            } catch (const ops::DisjointnessViolated&) {
                fail("restricted-norm recomputation unavailable at position " +
                     std::to_string(n + 1));
                continue;
            }
            if (!close(rn, cert.second_option_norms[n])) {
                fail("recorded restricted norm at position " + std::to_string(n + 1) +
                     " does not match recomputation");
            }
        }
    }

    // --- sampled majorant domination and final-power residual ---
    for (std::size_t s = 0; s < sample_count; ++s) {
        rng::Rng gen(rng::derive_seed(seed, s));
        std::vector<cx> a(m);
        for (auto& z : a) {
            z = spec.field == FieldMode::Complex ? cx(gen.normal(), gen.normal())
                                                 : cx(gen.normal(), 0.0);
        }
        const std::vector<double> amag = abs_coeffs(a);

        TruncVec x = zero_vec(spec.dim, spec.field, spec.mode);
        for (std::size_t n = 0; n < m; ++n) x = axpy(a[n], cert.gen_f[n], x);
        const double xnorm = norm(x);
        if (xnorm < 1e-12) continue;

        for (std::size_t j = 0; j < m; ++j) {
            TruncVec img = ops::apply_power(spec, x, cert.powers[j]);
            const double resid = norm(axpy(cx(-1.0, 0.0), x, img));

            double head = 0.0;
            for (std::size_t n = 0; n <= j; ++n) head += amag[n] * cert.ledger_iii[j][n];
            TruncVec tail_e = zero_vec(spec.dim, spec.field, spec.mode);
            TruncVec tail_f = zero_vec(spec.dim, spec.field, spec.mode);
            double tail_ii = 0.0;
            for (std::size_t n = j + 1; n < m; ++n) {
                tail_e = axpy(a[n], e_vecs[n], tail_e);
                tail_f = axpy(a[n], cert.gen_f[n], tail_f);
                tail_ii += amag[n] * cert.ledger_ii[n][j];
            }
            const double majorant =
                head + cert.tail_restricted[j] * norm(tail_e) + tail_ii + norm(tail_f);
            out.worst_margin = std::max(out.worst_margin, resid - majorant);
            if (resid > majorant * (1.0 + 1e-10) + 1e-14) {
                fail("sample " + std::to_string(s) + ": residual at power index " +
                     std::to_string(j + 1) + " exceeds the ledger majorant");
            }
            if (j + 1 == m) {
                const double rel = resid / xnorm;
                out.max_residual = std::max(out.max_residual, rel);
                if (!(rel < eps)) {
                    fail("sample " + std::to_string(s) +
                         ": relative residual at the final power is " + std::to_string(rel) +
                         " (eps " + std::to_string(eps) + ")");
                }
            }
        }
    }

    out.pass = out.failures.empty();
    return out;
}

// ---------------------------------------------------------------------------
// project_pair_subspace
// ---------------------------------------------------------------------------

namespace {

// In-place Gauss-Jordan; returns the rank. Rows are fully reduced so the
// leading nonzero rows form a clean spanning set.
std::size_t echelon_real(std::vector<std::vector<double>>& rows, double tol) {
    if (rows.empty()) return 0;
    const std::size_t cols = rows.front().size();
    std::size_t rank = 0;
    for (std::size_t col = 0; col < cols && rank < rows.size(); ++col) {
        std::size_t piv = rank;
        double best = std::abs(rows[rank][col]);
        for (std::size_t r = rank + 1; r < rows.size(); ++r) {
            if (std::abs(rows[r][col]) > best) {
                best = std::abs(rows[r][col]);
                piv = r;
            }
        }
        if (best <= tol) continue;
        std::swap(rows[rank], rows[piv]);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (r == rank || rows[r][col] == 0.0) continue;
            const double f = rows[r][col] / rows[rank][col];
            for (std::size_t k = col; k < cols; ++k) rows[r][k] -= f * rows[rank][k];
            rows[r][col] = 0.0;
        }
        ++rank;
    }
    return rank;
}

double max_abs_real(const std::vector<std::vector<double>>& rows) {
    double m = 0.0;
    for (const auto& r : rows) {
        for (double v : r) m = std::max(m, std::abs(v));
    }
    return m;
}

}  // namespace

PairProjection project_pair_subspace(const std::vector<PairVec>& family) {
    if (family.empty()) throw std::invalid_argument("project_pair_subspace: empty family");
    const std::size_t dim = family.front().x.dim();
    for (const auto& z : family) {
        if (z.x.dim() != dim || z.y.dim() != dim) {
            throw std::invalid_argument("project_pair_subspace: dimensions disagree");
        }
    }

    // Ranks are taken over the reals (the pair space realifies the scalars),
    // so each coordinate contributes its real and imaginary part separately.
    auto realify = [dim](std::vector<double>& row, std::size_t base, const TruncVec& v,
                         double scale) {
        for (std::size_t k = 0; k < dim; ++k) {
            row[base + 2 * k] = scale * v.c[k].real();
            row[base + 2 * k + 1] = scale * v.c[k].imag();
        }
    };

    std::vector<std::vector<double>> z_rows;
    for (const auto& z : family) {
        std::vector<double> row(4 * dim, 0.0);
        realify(row, 0, z.x, 1.0);
        realify(row, 2 * dim, z.y, 1.0);
        z_rows.push_back(std::move(row));
    }
    const double tol = 1e-12 * std::max(1.0, max_abs_real(z_rows));

    PairProjection out;
    {
        auto rows = z_rows;
        out.rank_z = echelon_real(rows, tol);
    }
    if (out.rank_z < family.size()) {
        throw std::invalid_argument("project_pair_subspace: generators dependent at truncation");
    }

    {
        auto rows = z_rows;
        for (const auto& z : family) {
            std::vector<double> rot(4 * dim, 0.0);
            realify(rot, 0, z.y, -1.0);
            realify(rot, 2 * dim, z.x, 1.0);
            rows.push_back(std::move(rot));
        }
        out.rotation_invariant = echelon_real(rows, tol) == out.rank_z;
    }

    const FieldMode field = family.front().x.field;
    const NormMode mode = family.front().x.mode;
    auto project = [&](bool left) {
        std::vector<std::vector<double>> rows;
        for (const auto& z : family) {
            std::vector<double> row(2 * dim, 0.0);
            realify(row, 0, left ? z.x : z.y, 1.0);
            rows.push_back(std::move(row));
        }
        const std::size_t rank = echelon_real(rows, tol);
        std::vector<TruncVec> basis;
        for (std::size_t r = 0; r < rank; ++r) {
            std::vector<cx> coeffs(dim);
            for (std::size_t k = 0; k < dim; ++k) {
                coeffs[k] = cx(rows[r][2 * k], rows[r][2 * k + 1]);
            }
            basis.push_back(seqspace::make_vec(std::move(coeffs), field, mode));
        }
        return std::make_pair(rank, basis);
    };
    auto [rank_p, p_basis] = project(true);
    auto [rank_q, q_basis] = project(false);
    out.rank_p = rank_p;
    out.rank_q = rank_q;
    out.p_basis = std::move(p_basis);
    out.q_basis = std::move(q_basis);
    out.dichotomy_equal = std::max(out.rank_p, out.rank_q) == out.rank_z;

    if (out.rotation_invariant && out.rank_p != out.rank_q) {
        throw std::runtime_error(
            "project_pair_subspace: rotation-invariant family with unequal projection ranks "
            "(numerical rank tolerance breached)");
    }
    return out;
}

}  // namespace rlab::subspace

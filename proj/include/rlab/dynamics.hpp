#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "rlab/ctype_data.hpp"
#include "rlab/operators.hpp"

namespace rlab::dynamics {

using ops::OperatorSpec;
using seqspace::TruncVec;

/// Trace of T^n x for n = 0..N: norms and distances back to x. If a norm
/// exceeds 1e300 the scan stops and the record is marked diverged.
struct OrbitRecord {
    std::string spec_digest;       // content hash of the operator description
    std::vector<cx> initial;       // starting vector coefficients
    std::vector<std::uint64_t> steps;
    std::vector<double> norms;     // ||T^n x||
    std::vector<double> residuals; // ||T^n x - x||
    bool diverged = false;
    std::uint64_t diverged_at = 0;

    std::string to_json() const;
    std::string to_csv() const; // header: n,norm,residual
};

OrbitRecord orbit_scan(const OperatorSpec& spec, const TruncVec& x, std::uint64_t N,
                       std::uint64_t max_iter = ops::kDefaultMaxIter);

/// All n in [1, N] with ||T^n x - x|| < eps * ||x||. Requires x != 0. An
/// empty list is a legitimate outcome (no near-returns at this horizon).
std::vector<std::uint64_t> return_times(const OperatorSpec& spec, const TruncVec& x,
                                        std::uint64_t N, double eps,
                                        std::uint64_t max_iter = ops::kDefaultMaxIter);

/// Exact period of every vector supported in the given blocks of the
/// block-cyclic shift: lcm over the set of 2 * L_n (one block traversal
/// flips the sign, two restore it; interior weights cancel against the wrap
/// factor exactly). 128-bit lcm arithmetic; throws std::overflow_error when
/// the result exceeds 64 bits.
std::uint64_t exact_period(const ctype::CTypeData& ct, const std::set<std::size_t>& blocks);

/// Strictly increasing sequence (k_m), m = 1..n_blocks, such that T^{k_m}
/// fixes every vector supported in the first m blocks: k_m is the smallest
/// multiple of lcm(2L_0..2L_{m-1}) strictly greater than k_{m-1}. (Raw
/// successive lcms need not increase — repeated block lengths stall them —
/// hence the smallest-multiple rule.)
std::vector<std::uint64_t> quasi_rigidity_witness(const ctype::CTypeData& ct,
                                                  std::size_t n_blocks);

struct DivergenceScan {
    bool crossed = false;
    std::uint64_t first_crossing = 0;
    /// Norms nondecreasing over the last quarter of the scanned range — a
    /// finite-horizon trend report, never a limit claim.
    bool tail_monotone = false;
};

DivergenceScan divergence_scan(const OperatorSpec& spec, const TruncVec& x, std::uint64_t N,
                               double M, std::uint64_t max_iter = ops::kDefaultMaxIter);

} // namespace rlab::dynamics

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlab/ctype_data.hpp"
#include "rlab/operators.hpp"
#include "rlab/seqspace.hpp"

namespace rlab::subspace {

using seqspace::FieldMode;
using seqspace::NormMode;
using seqspace::PairVec;
using seqspace::TruncVec;

/// Thrown when a search over the finite truncation exhausts the available
/// blocks/indices/retries without satisfying the requested conditions. The
/// message states what was required and how far the stored data reaches.
class NotFoundWithinTruncation : public std::runtime_error {
public:
    explicit NotFoundWithinTruncation(const std::string& what_arg)
        : std::runtime_error(what_arg) {}
};

// ---------------------------------------------------------------------------
// Basic-sequence extraction from a chain of subspaces
// ---------------------------------------------------------------------------

/// A finite-dimensional subspace given by a spanning list of vectors.
using Subspace = std::vector<TruncVec>;

struct ExtractionStage {
    std::vector<std::size_t> support;  ///< coordinate support of the newest vector
    std::vector<cx> functional;        ///< dual functional of the newest vector (dense)
    double functional_norm = 0.0;      ///< upper bound for its dual norm
};

struct ExtractionResult {
    std::vector<TruncVec> vectors;  ///< normalized, vectors[i] in chain[i]
    std::vector<ExtractionStage> stages;
    double basis_constant = 1.0;    ///< sampled estimate of the basis constant
};

/// Finite-dimensional basic-sequence extraction: given a non-increasing
/// chain of subspaces, picks a normalized vector from each, each new vector
/// lying in the exact null space (at truncation) of the dual functionals
/// accumulated so far. Dual functionals are least-coefficient-norm solutions
/// of the biorthogonality system (Gram solve); free coordinates are chosen
/// smallest-index-first. Throws std::invalid_argument when the chain is
/// shallower than `count` and NotFoundWithinTruncation when the null space
/// contains no usable vector.
ExtractionResult mazur_extract(const std::vector<Subspace>& chain, std::size_t count);

/// Convenience wrapper: chain links given as sets of coordinate indices.
ExtractionResult mazur_extract_indices(const std::vector<std::vector<std::size_t>>& chain,
                                       std::size_t count, std::size_t dim, FieldMode field,
                                       NormMode mode);

/// Upper bound 1 + max_n ||g_n*|| for the dual functionals of the system
/// {g_0, ..., g_{m-1}}. For coefficient-l2 the value is exact
/// (sqrt((G^{-1})_{nn}) from the Gram inverse); for other coefficient norms
/// the l2 value is inflated by s^{max(0, 1/2 - 1/p)} where s is the support
/// size of the functional itself (sup mode counts as 1/p = 0). Throws on a
/// rank-deficient system.
double dual_norm_bound(const std::vector<TruncVec>& gens);

// ---------------------------------------------------------------------------
// Block selection driven by return-power sequences
// ---------------------------------------------------------------------------

/// For each power k_n selects the smallest block index l exceeding the
/// previous selection (starting at 1) such that
///   (a) the block length exceeds k_n - 1, and
///   (b) (k_n - 1) * log2(m_bound) <= log2 of the interior weight product,
/// evaluated in log space so large products never overflow. Requires
/// m_bound >= every |w_j|. Throws NotFoundWithinTruncation when the stored
/// blocks run out, reporting the length/product that would be needed.
std::vector<std::size_t> second_option_select(const ctype::CTypeData& ct,
                                              const std::vector<std::uint64_t>& k_seq,
                                              double m_bound);

// ---------------------------------------------------------------------------
// Recurrent-subspace certificate
// ---------------------------------------------------------------------------

/// Self-contained record of a constructed almost-periodic system: the
/// perturbed generators, the return powers, and per-step ledgers for the
/// three smallness conditions of the recursion, so that everything can be
/// re-checked after the fact. With steps numbered n = 1.. and powers
/// numbered j = 1.. the recorded conditions are
///   (i)   ||g_n|| = ||f_n - e_n||          <  1 / (2^{n+1} K)
///   (ii)  ||T^{powers[j]} g_n||            <  2^{-(j+n)}      for j < n
///   (iii) ||T^{powers[j]} f_n - f_n||      <  2^{-(j+n)}      for n <= j.
struct SubspaceCert {
    std::string mode;                          ///< "claim" or "second-option"
    std::vector<std::uint64_t> powers;         ///< return powers, strictly increasing
    std::vector<std::uint64_t> selection_powers;  ///< block-selection powers (second-option)
    std::vector<std::size_t> selected_blocks;  ///< selected block indices (second-option)
    std::vector<std::size_t> basis_e;          ///< coordinates of the unperturbed e_n
    std::vector<TruncVec> gen_f;               ///< perturbed generators f_n
    double K = 1.0;                            ///< dual-norm bound used in the (i) bounds
    double S = 0.0;                            ///< sum ||e_n*|| ||g_n||; must stay < 1/2
    std::vector<double> ledger_i;              ///< per n: ||g_n||
    std::vector<std::vector<double>> ledger_ii;   ///< per n: ||T^{powers[j]} g_n||, j < n
    std::vector<std::vector<double>> ledger_iii;  ///< per j: ||T^{powers[j]} f_n - f_n||, n <= j
    std::vector<double> tail_restricted;       ///< per j: bound for T^{powers[j]} on span{e_n : n > j}
    std::vector<double> second_option_norms;   ///< per n: restricted norm at selection power
    std::string op_toml;                       ///< canonical operator serialization
    std::vector<std::string> warnings;

    std::string to_json() const;  ///< schema "rlab-cert/1"
    static SubspaceCert from_json(const std::string& text);
};

/// Produces a vector close to `target` that the construction can certify:
/// given (target, delta) it must return f with ||f - target|| < delta whose
/// returns under suitable powers are as clean as it can manage. The
/// recursion verifies every bound it needs and retries with a smaller delta
/// if the output falls short, so the oracle is never trusted blindly.
using ApproxOracle = std::function<TruncVec(const TruncVec& target, double delta)>;

/// Oracle for block-cyclic operators: truncates the target to the fewest
/// leading blocks that keep the cut tail under delta. Block-supported
/// prefixes span invariant subspaces on which suitable powers act as the
/// identity, so coordinate targets pass through unchanged.
ApproxOracle block_truncation_oracle(std::shared_ptr<const ctype::CTypeData> ct);

/// Oracle that returns the target unchanged (valid whenever targets already
/// return exactly, e.g. for the identity operator).
ApproxOracle passthrough_oracle();

/// Runs the recursive construction for `steps` stages against `spec`:
/// perturbs the coordinate vectors e_{basis_e[n]} into f_n within radius
/// min(1/(2^{n+1} K), margin) — halving on verification failure — and picks
/// each return power as the smallest admissible entry of k_candidates
/// exceeding the previous one, so the powers form a subsequence of
/// k_candidates. Records every measured bound in the ledgers. Throws
/// NotFoundWithinTruncation when radii or candidate powers are exhausted and
/// std::invalid_argument when the final perturbation sum S reaches 1/2.
SubspaceCert claim_construct(const ops::OperatorSpec& spec,
                             const std::vector<std::uint64_t>& k_candidates,
                             const std::vector<std::size_t>& e_basis, std::size_t steps,
                             const ApproxOracle& oracle, double basis_k = 2.0);

/// Builds the explicit block-generator certificate for a block-cyclic shift:
/// selects blocks via second_option_select against the supplied powers,
/// takes the end-of-block coordinates e_{b_{l+1}-1} as generators, records
/// the restricted norms at the selection powers, and uses cumulative least
/// common multiples of the generator periods as the return powers (under
/// which every prefix of generators returns exactly).
SubspaceCert second_option_cert(const ops::OperatorSpec& spec,
                                const std::vector<std::uint64_t>& k_seq, double m_bound);

struct VerifyOutcome {
    bool pass = false;
    double max_residual = 0.0;  ///< worst relative residual at the final power
    double worst_margin = 0.0;  ///< max over checks of measured - majorant
    std::size_t samples = 0;
    std::vector<std::string> failures;
};

/// Re-checks a certificate against the operator. Refuses (throws
/// std::invalid_argument) any certificate whose perturbation sum S reaches
/// 1/2 — recorded or recomputed. Otherwise: re-verifies every ledger entry
/// by direct computation (strictly inside its bound, matching the recorded
/// value), then draws `sample_count` seeded coefficient vectors, forms
/// x = sum a_n f_n, and for every power j checks that the measured residual
/// ||T^{powers[j]} x - x|| is dominated by the ledger majorant
///   sum_{n<=j} |a_n| iii[j][n] + tail_restricted[j] ||sum_{n>j} a_n e_n||
///   + sum_{n>j} |a_n| ii[n][j] + ||sum_{n>j} a_n f_n||,
/// and that the relative residual at the final power stays below eps.
VerifyOutcome verify_recurrent_subspace(const ops::OperatorSpec& spec,
                                        const SubspaceCert& cert, std::size_t sample_count,
                                        std::uint64_t seed, double eps = 1e-6);

// ---------------------------------------------------------------------------
// Coordinate projections of pair subspaces
// ---------------------------------------------------------------------------

struct PairProjection {
    std::vector<TruncVec> p_basis;  ///< spanning set of the left projection
    std::vector<TruncVec> q_basis;  ///< spanning set of the right projection
    std::size_t rank_z = 0;
    std::size_t rank_p = 0;
    std::size_t rank_q = 0;
    /// max(rank_p, rank_q) == rank_z at this truncation.
    bool dichotomy_equal = false;
    /// Family closed under (x, y) -> (-y, x), i.e. multiplication by i in
    /// the pair picture.
    bool rotation_invariant = false;
};

/// Real Gaussian elimination on the stacked vectors (x; y) in R^{2D}:
/// computes the span's rank, the ranks and spanning sets of the left and
/// right coordinate projections, and whether the family is closed under the
/// pair rotation. Requires an independent input family (throws
/// std::invalid_argument otherwise); a rotation-invariant family must come
/// out with rank_p == rank_q, enforced by a runtime check.
PairProjection project_pair_subspace(const std::vector<PairVec>& family);

}  // namespace rlab::subspace

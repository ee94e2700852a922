#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlab/ctype_data.hpp"
#include "rlab/seqspace.hpp"
#include "rlab/toml_lite.hpp"

namespace rlab::ops {

using seqspace::FieldMode;
using seqspace::NormMode;
using seqspace::PairVec;
using seqspace::TruncVec;

enum class OpKind {
    Identity,
    ScalarMul,
    BackwardShift,
    CTypeWB,    // block-cyclic weighted shift (each block wraps onto itself)
    CTypeFull,  // the same shift plus the feedback coupling rows
    CompactK,   // the coupling part alone: CTypeFull minus CTypeWB
    DirectSum,
    Complexified,
};

/// Thrown by restricted_norm_exact when the images of the supplied basis
/// vectors share a coordinate, so the max-over-generators formula is invalid.
struct DisjointnessViolated : std::runtime_error {
    explicit DisjointnessViolated(const std::string& what) : std::runtime_error(what) {}
};

/// Algebraic operator description. Operators are applied through closed-form
/// row rules (never materialized matrices); every row has at most two
/// entries. Immutable after construction.
struct OperatorSpec {
    OpKind kind = OpKind::Identity;
    std::size_t dim = 0;
    FieldMode field = FieldMode::Real;
    NormMode mode = NormMode::lp(2.0);
    cx lambda{1.0, 0.0};                        // ScalarMul
    std::vector<double> weights;                // BackwardShift: T e_k = weights[k] e_{k-1}
    std::shared_ptr<const ctype::CTypeData> ct; // C-type kinds
    std::vector<OperatorSpec> children;         // DirectSum: {left, right}; Complexified: {inner}
};

/// Constructors (validate their arguments and fill derived fields).
OperatorSpec make_identity(std::size_t dim, FieldMode field, NormMode mode);
OperatorSpec make_scalar_mul(cx lambda, std::size_t dim, FieldMode field, NormMode mode);
OperatorSpec make_backward_shift(std::vector<double> weights, FieldMode field, NormMode mode);
OperatorSpec make_backward_shift_uniform(double weight, std::size_t dim, FieldMode field,
                                         NormMode mode);
/// dim must equal a stored block boundary b_m; fewer blocks than stored means
/// the structure is truncated to the first m blocks.
OperatorSpec make_ctype_wb(std::shared_ptr<const ctype::CTypeData> ct, std::size_t dim,
                           FieldMode field, NormMode mode);
OperatorSpec make_ctype_full(std::shared_ptr<const ctype::CTypeData> ct, std::size_t dim,
                             FieldMode field, NormMode mode);
OperatorSpec make_compact_k(std::shared_ptr<const ctype::CTypeData> ct, std::size_t dim,
                            FieldMode field, NormMode mode);
OperatorSpec make_direct_sum(OperatorSpec left, OperatorSpec right);
/// Complexification: acts on pairs (x, y) standing for x + iy; in the
/// concatenated coordinate picture it is the two-fold direct sum of inner.
OperatorSpec complexify(OperatorSpec inner);

/// Sparse row with at most two entries, sorted by index.
struct SparseRow {
    std::array<std::pair<std::size_t, cx>, 2> entry;
    int count = 0;

    void push(std::size_t idx, cx val) {
        entry[static_cast<std::size_t>(count++)] = {idx, val};
    }
};

/// Exact image of the basis vector e_k as a sparse row.
SparseRow basis_row(const OperatorSpec& spec, std::size_t k);
/// Same, as a plain list (convenience / serialization form).
std::vector<std::pair<std::size_t, cx>> basis_image(const OperatorSpec& spec, std::size_t k);

/// One application T x. Exact linear extension of the rows.
TruncVec apply(const OperatorSpec& spec, const TruncVec& x);

/// Complexified application on a pair: (x, y) -> (T x, T y). Requires a
/// Complexified spec; runs the same arithmetic as `apply` on each component,
/// so conjugation with the pair-to-concatenation map is bit-identical.
PairVec apply_pair(const OperatorSpec& spec, const PairVec& z);

/// Pair -> concatenated coordinates (x_0..x_{D-1}, y_0..y_{D-1}).
TruncVec concat_pair(const PairVec& z);
PairVec split_pair(const TruncVec& xy);

inline constexpr std::uint64_t kDefaultMaxIter = 10'000'000;

/// k-fold application. Kinds whose every row has at most one entry (all but
/// CTypeFull and sums containing it) go through an exact coordinate-map
/// composition by binary exponentiation, O(D log k); the rest iterate.
TruncVec apply_power(const OperatorSpec& spec, const TruncVec& x, std::uint64_t k,
                     std::uint64_t max_iter = kDefaultMaxIter);

/// Coordinate-map ("monomial") form of T^k: e_j -> scale[j] * e_{target[j]},
/// target kNoTarget meaning the image is zero.
inline constexpr std::size_t kNoTarget = static_cast<std::size_t>(-1);
struct MonomialMap {
    std::vector<std::size_t> target;
    std::vector<cx> scale;

    bool injective_on_support() const;
};

/// Whether every power of spec admits a MonomialMap (row width <= 1).
bool is_monomial(const OperatorSpec& spec);
/// Build the map for T^k (is_monomial required).
MonomialMap monomial_power(const OperatorSpec& spec, std::uint64_t k);
/// Exact operator norm of T^k for monomial specs, any p in [1, inf]:
/// coordinates mapping to a common target contribute their scales' dual-norm;
/// the operator norm is the max of that over targets.
double power_norm_exact(const OperatorSpec& spec, std::uint64_t k);

/// Exact restricted norm of T^power on the span of the listed coordinate
/// basis vectors, valid when the images have pairwise disjoint supports:
/// the norm is then max_j ||T^power e_{basis[j]}||.
/// Throws DisjointnessViolated when supports overlap.
double restricted_norm_exact(const OperatorSpec& spec, std::uint64_t power,
                             const std::vector<std::size_t>& basis,
                             std::uint64_t max_iter = kDefaultMaxIter);

struct NormEstimate {
    double value = 0.0;
    /// true when the value is only certified as a lower bound for the norm
    /// (sampling route); false for the converged Hilbert-space estimate.
    bool lower_bound_only = false;
};

/// Operator-norm estimate. p = 2: power iteration on the Gram form A*A with
/// relative tolerance 1e-6 (deterministic seeded start). Other p, sup mode,
/// and Complexified specs: max ratio ||T x|| / ||x|| over `trials` seeded
/// random unit vectors plus all basis vectors — an explicit lower bound.
NormEstimate operator_norm_estimate(const OperatorSpec& spec, std::size_t trials,
                                    std::uint64_t seed = 0);

/// TOML round-trip. Serialization always writes fully explicit parameter
/// arrays (presets are expanded at load time).
std::string to_toml(const OperatorSpec& spec);
OperatorSpec from_toml(const toml::Table& operator_table);
OperatorSpec from_toml_text(const std::string& text); // expects an [operator] table

} // namespace rlab::ops

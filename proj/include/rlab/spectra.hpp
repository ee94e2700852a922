#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rlab/ctype_data.hpp"
#include "rlab/linalg.hpp"
#include "rlab/operators.hpp"

namespace rlab::spectra {

using ops::OperatorSpec;

/// Analytic description of an essential spectrum. Only classes with a known
/// closed form are described; everything else is UnknownAnalytic — the gate
/// refuses to consume that rather than guess from finite sections.
struct SpectrumDescriptor {
    enum class Kind { Circle, FiniteSet, Union, UnknownAnalytic };

    Kind kind = Kind::UnknownAnalytic;
    double radius = 0.0;                   // Circle: { |z| = radius }
    std::vector<cx> points;                // FiniteSet
    std::vector<SpectrumDescriptor> parts; // Union
    std::string note;                      // which analytic fact produced it

    std::string to_json() const;
};

/// Closed-form essential spectrum for the supported classes: the identity
/// and scalar multiples (single point), uniform-weight backward shifts (the
/// circle of radius |weight|), direct sums (union of the parts), and
/// complexifications of these (conjugation-closed). Anything else — C-type
/// kinds, non-uniform shifts — yields UnknownAnalytic.
SpectrumDescriptor essential_spectrum_analytic(const OperatorSpec& spec);

/// Whether the described set meets the closed unit disc. Throws
/// std::invalid_argument for UnknownAnalytic input — the gate never guesses.
bool unit_disc_gate(const SpectrumDescriptor& desc);

/// Count of blocks n = 0..N_blocks (inclusive) whose length L_n satisfies
/// lam^{L_n} = -1 within 1e-9. lam must lie on the unit circle within 1e-9
/// (eigenvalues of the block-cyclic shift are roots of unity). A bounded
/// count means the kernel criterion fails at this horizon.
std::size_t point_spectrum_blocks(const ctype::CTypeData& ct, cx lam, std::size_t N_blocks);

/// Growth report for the interior weight products P_n. The block-cyclic
/// shift's inverse has wrap rows of magnitude P_n, so max_n P_n crossing the
/// threshold witnesses — at this truncation — that the inverse cannot stay
/// bounded. rows[n].vP records |v_n| * P_n, the coupling-amplified product.
struct InverseWitness {
    struct Row {
        std::size_t n = 0;
        double log2_P = 0.0;
        double P = 0.0;
        double vP = 0.0;
    };
    std::vector<Row> rows;
    double max_P = 0.0;
    std::size_t argmax = 0;
    double threshold = 0.0;
    bool witnessed = false;
    std::string verdict; // "witnessed up to truncation" | "not witnessed up to truncation"
    /// Cross-checks: forward wrap scalar times inverse wrap magnitude must
    /// return -1, and the direct product must match its log-space value.
    double wrap_roundtrip_error = 0.0;
    double log_product_rel_error = 0.0;
};

InverseWitness inverse_unboundedness_witness(const ctype::CTypeData& ct, double threshold = 1e6);

/// Dense D x D compression: column k is the image of e_k, truncated to the
/// first D coordinates. D is capped at 2048.
linalg::Mat finite_section(const OperatorSpec& spec, std::size_t D);

enum class SigmaMethod { Auto, Jacobi, InverseIteration, BidiagonalSturm };

/// Smallest singular value of (A - mu I). Auto dispatch: bidiagonal shapes
/// go to Sturm bisection; dense matrices to one-sided Jacobi for n <= 512
/// and to inverse iteration on the normal equations beyond that. Throws
/// std::runtime_error (with the residual attached) if the iterative path
/// fails to converge.
double smallest_singular(const linalg::Mat& a, cx mu, SigmaMethod method = SigmaMethod::Auto);

struct GridRect {
    double re0 = -2.0, re1 = 2.0;
    double im0 = -2.0, im1 = 2.0;
    std::size_t nx = 32, ny = 32;
};

/// Row-major sigma_min surface over the rectangle (pseudospectrum
/// surrogate). Deterministic: fixed evaluation order, fixed formatting.
struct PseudospectrumGrid {
    GridRect rect;
    std::vector<double> sigma; // ny rows of nx values, row-major

    std::string to_csv() const; // header: re,im,sigma_min
};

PseudospectrumGrid pseudospectrum_grid(const OperatorSpec& spec, std::size_t D,
                                       const GridRect& rect);

} // namespace rlab::spectra

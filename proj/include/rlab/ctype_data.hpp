#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rlab::ctype {

/// Parameter quadruple of a block-cyclic shift with feedback coupling.
/// The coordinate range [0, D) is split into consecutive blocks
/// [b_n, b_{n+1}); block n has length L_n = b_{n+1} - b_n. Each block feeds
/// back to an earlier block phi(n) < n with coupling amplitude v_n.
struct CTypeData {
    /// Block boundaries, b.front() == 0, strictly increasing; b.size() is the
    /// number of blocks plus one, and b.back() is the ambient dimension.
    std::vector<std::size_t> b;
    /// Feedback targets phi[n] for n >= 1; phi[0] is fixed to 0 and unused.
    std::vector<std::size_t> phi;
    /// Shift weights w[k] indexed by target coordinate k = 1..D-1; w[0] is
    /// unused (fixed to 1). Entries at block starts are never read by the
    /// operator rows below and are kept at 1.
    std::vector<double> w;
    /// Coupling amplitudes v[n] for n >= 1; v[0] unused (fixed to 0).
    std::vector<double> v;

    std::size_t blocks() const { return b.empty() ? 0 : b.size() - 1; }
    std::size_t dim() const { return b.empty() ? 0 : b.back(); }
    std::size_t block_len(std::size_t n) const { return b[n + 1] - b[n]; }

    /// Block index containing coordinate k.
    std::size_t block_of(std::size_t k) const;

    /// Interior weight product P_n over indices b_n+1 .. b_{n+1}-1 (empty
    /// product = 1). For the shipped power-of-two configs this is exact.
    double interior_product(std::size_t n) const;
    /// log2 of the interior product, summed in log space (overflow-safe).
    double log2_interior_product(std::size_t n) const;

    /// Structural checks; returns one human-readable line per violation
    /// (empty means admissible):
    ///   - b starts at 0 and strictly increases;
    ///   - phi(n) < n for every stored n >= 1;
    ///   - every attained feedback target is fed by at least one stored block
    ///     (finite-range surrogate for "each fiber is infinite");
    ///   - L_n is a multiple of 2 * L_{phi(n)} for n >= 1;
    ///   - weights are finite with 0 < min |w| <= max |w| < inf;
    ///   - |v_n| entries are finite and nonincreasing (summability witness).
    std::vector<std::string> validate() const;
};

/// phi(n) = n with the top binary bit cleared (0 for n = 0). Every value is
/// attained by infinitely many n and phi(n) < n for n >= 1.
std::size_t phi_clear_top_bit(std::size_t n);

/// Shipping default: block lengths L_n = 2^min(n,10) (doubling, capped so a
/// 13-block instance keeps every weight product finite in double precision),
/// phi = clear-top-bit, weight 2 on the first ceil((L_n-1)/2) interior
/// coordinates of each block and 1 on the rest, v_n = 2^-n. All quantities
/// are powers of two, so operator arithmetic on this config is exact.
CTypeData capped_doubling(std::size_t n_blocks);

/// Fast-growth variant: L_n = 2^n uncapped, every interior weight 2 (so
/// P_n = 2^(L_n - 1)), v_n = 2^-n. Exhibits rapid growth of the interior
/// products — the inverse-unboundedness witness fires within a few blocks.
CTypeData uncapped_doubling(std::size_t n_blocks);

} // namespace rlab::ctype

#include <cmath>
#include <memory>
#include <set>

#include <doctest.h>

#include "oracles.hpp"
#include "rlab/ctype_data.hpp"
#include "rlab/operators.hpp"
#include "rlab/rng.hpp"

using namespace rlab;
using namespace rlab::ops;
using seqspace::FieldMode;
using seqspace::NormMode;
using seqspace::TruncVec;

namespace {

// Two-block fixture, dim 6: blocks [0,2) and [2,6), weights chosen so the
// interior products are P_0 = 2 and P_1 = 4. Every hand value below follows
// directly from the row rules.
std::shared_ptr<const ctype::CTypeData> two_blocks() {
    auto ct = std::make_shared<ctype::CTypeData>();
    ct->b = {0, 2, 6};
    ct->phi = {0, 0};
    ct->w = {1.0, 2.0, 1.0, 2.0, 2.0, 1.0};
    ct->v = {0.0, 0.5};
    return ct;
}

TruncVec e(std::size_t dim, std::size_t k) {
    return seqspace::unit_vec(dim, k, FieldMode::Real, NormMode::lp(2.0));
}

double dist(const TruncVec& a, const TruncVec& b) {
    return seqspace::norm(seqspace::axpy(cx(-1.0, 0.0), a, b));
}

}  // namespace

TEST_CASE("block-cyclic shift rows match hand computation") {
    const auto spec = make_ctype_wb(two_blocks(), 0, FieldMode::Real, NormMode::lp(2.0));
    REQUIRE(spec.dim == 6);

    // Interior steps carry the target coordinate's weight.
    CHECK(dist(apply(spec, e(6, 0)), seqspace::axpy(cx(2.0, 0.0), e(6, 1),
                                                    seqspace::zero_vec(6, spec.field, spec.mode)))
          == 0.0);
    // Block-end coordinates wrap to the block start with factor -1/P_n.
    auto w1 = apply(spec, e(6, 1));
    CHECK(w1.c[0] == cx(-0.5, 0.0));
    auto w5 = apply(spec, e(6, 5));
    CHECK(w5.c[2] == cx(-0.25, 0.0));
    // One full traversal of block 0 is multiplication by -1.
    CHECK(dist(apply_power(spec, e(6, 0), 2),
               seqspace::axpy(cx(-2.0, 0.0), e(6, 0),
                              seqspace::axpy(cx(1.0, 0.0), e(6, 0),
                                             seqspace::zero_vec(6, spec.field, spec.mode))))
          == 0.0);
}

TEST_CASE("coupled operator = shift + coupling, exactly, on every basis vector") {
    const auto ct = two_blocks();
    const auto wb = make_ctype_wb(ct, 0, FieldMode::Real, NormMode::lp(2.0));
    const auto full = make_ctype_full(ct, 0, FieldMode::Real, NormMode::lp(2.0));
    const auto kk = make_compact_k(ct, 0, FieldMode::Real, NormMode::lp(2.0));
    for (std::size_t k = 0; k < 6; ++k) {
        const auto lhs = apply(full, e(6, k));
        auto rhs = apply(wb, e(6, k));
        rhs = seqspace::axpy(cx(1.0, 0.0), apply(kk, e(6, k)), rhs);
        CHECK(dist(lhs, rhs) == 0.0);
    }
    // The coupling's only nonzero columns are the block ends: 2/P_0 on the
    // first block, v_n on the later ones.
    CHECK(apply(kk, e(6, 1)).c[0] == cx(1.0, 0.0));   // 2 / P_0 = 1
    CHECK(apply(kk, e(6, 5)).c[0] == cx(0.5, 0.0));   // v_1
    CHECK(seqspace::norm(apply(kk, e(6, 0))) == 0.0);
    CHECK(seqspace::norm(apply(kk, e(6, 3))) == 0.0);
}

TEST_CASE("coupling column norms shrink down the block sequence") {
    const auto data = std::make_shared<ctype::CTypeData>(ctype::capped_doubling(8));
    const auto kk = make_compact_k(data, 0, FieldMode::Real, NormMode::lp(2.0));
    double prev = 1e300;
    for (std::size_t n = 1; n < data->blocks(); ++n) {
        const std::size_t end = data->b[n + 1] - 1;
        const double col = seqspace::norm(apply(kk, e(kk.dim, end)));
        CHECK(col == std::exp2(-static_cast<double>(n)));  // v_n exactly
        CHECK(col < prev);
        prev = col;
    }
}

TEST_CASE("apply is linear and powers compose") {
    const auto spec = make_ctype_wb(two_blocks(), 0, FieldMode::Real, NormMode::lp(2.0));
    rng::Rng gen(7);
    for (int trial = 0; trial < 10; ++trial) {
        const auto x = gen.unit_vector(6, spec.field, spec.mode);
        const auto y = gen.unit_vector(6, spec.field, spec.mode);
        const cx a(gen.uniform(-2.0, 2.0), 0.0);
        const auto lhs = apply(spec, seqspace::axpy(a, x, y));
        const auto rhs = seqspace::axpy(a, apply(spec, x), apply(spec, y));
        CHECK(dist(lhs, rhs) <= 1e-15);

        const auto once = apply_power(spec, apply_power(spec, x, 3), 5);
        const auto both = apply_power(spec, x, 8);
        CHECK(dist(once, both) <= 1e-15);
    }
}

TEST_CASE("powers agree with the dense oracle") {
    const auto spec = make_ctype_wb(two_blocks(), 0, FieldMode::Real, NormMode::lp(2.0));
    const auto dense = oracle::dense_from_apply(spec);
    rng::Rng gen(11);
    for (std::uint64_t k : {1u, 2u, 3u, 4u, 7u, 8u}) {
        const auto x = gen.unit_vector(6, spec.field, spec.mode);
        const auto fast = apply_power(spec, x, k);
        const auto slow = oracle::power_apply_dense(dense, x.c, k);
        double worst = 0.0;
        for (std::size_t i = 0; i < 6; ++i) worst = std::max(worst, std::abs(fast.c[i] - slow[i]));
        CHECK(worst <= 1e-14);
    }
}

TEST_CASE("shift periodicity: half-period negates, full period restores") {
    const auto spec = make_ctype_wb(two_blocks(), 0, FieldMode::Real, NormMode::lp(2.0));
    // Block 0 has period 4, block 1 period 8; vectors across both need 8.
    CHECK(dist(apply_power(spec, e(6, 0), 4), e(6, 0)) == 0.0);
    CHECK(dist(apply_power(spec, e(6, 3), 8), e(6, 3)) == 0.0);
    rng::Rng gen(3);
    const auto x = gen.unit_vector(6, spec.field, spec.mode);
    CHECK(dist(apply_power(spec, x, 8), x) <= 1e-15);
    // Half-period on a single-block vector is exact negation.
    const auto y = apply_power(spec, e(6, 2), 4);
    CHECK(y.c[2] == cx(-1.0, 0.0));
}

TEST_CASE("block invariance of the uncoupled shift") {
    const auto data = std::make_shared<ctype::CTypeData>(ctype::capped_doubling(5));
    const auto spec = make_ctype_wb(data, 0, FieldMode::Real, NormMode::lp(2.0));
    for (std::size_t k = 0; k < spec.dim; ++k) {
        const std::size_t block = data->block_of(k);
        const auto img = apply(spec, e(spec.dim, k));
        for (std::size_t i = 0; i < spec.dim; ++i) {
            if (std::abs(img.c[i]) > 0.0) CHECK(data->block_of(i) == block);
        }
    }
}

TEST_CASE("monomial power map and exact power norms") {
    const auto spec = make_ctype_wb(two_blocks(), 0, FieldMode::Real, NormMode::lp(2.0));
    REQUIRE(is_monomial(spec));
    const MonomialMap m = monomial_power(spec, 2);
    // T^2 e_0 = -e_0 (wrap after one interior step).
    CHECK(m.target[0] == 0);
    CHECK(m.scale[0] == cx(-1.0, 0.0));

    const auto dense = oracle::dense_from_apply(spec);
    for (std::uint64_t k : {1u, 2u, 3u, 5u, 8u}) {
        // Dense power matrix -> largest singular value (p = 2 operator norm).
        oracle::DenseMat pk(6, std::vector<cx>(6, cx(0.0, 0.0)));
        for (std::size_t j = 0; j < 6; ++j) {
            std::vector<cx> col(6, cx(0.0, 0.0));
            col[j] = cx(1.0, 0.0);
            col = oracle::power_apply_dense(dense, col, k);
            for (std::size_t i = 0; i < 6; ++i) pk[i][j] = col[i];
        }
        const double expected = oracle::singular_values_dense(pk).back();
        CHECK(power_norm_exact(spec, k) == doctest::Approx(expected).epsilon(1e-12));
    }

    const auto full = make_ctype_full(two_blocks(), 0, FieldMode::Real, NormMode::lp(2.0));
    CHECK_FALSE(is_monomial(full));
}

TEST_CASE("restricted norms: exact on disjoint orbits, refused on overlap") {
    const auto ct = two_blocks();
    const auto wb = make_ctype_wb(ct, 0, FieldMode::Real, NormMode::lp(2.0));
    // Orbits of the block-end coordinates stay in their own blocks.
    CHECK(restricted_norm_exact(wb, 2, {1, 5}) == doctest::Approx(1.0).epsilon(1e-15));
    // Under the coupled operator both block ends feed coordinate 0.
    const auto full = make_ctype_full(ct, 0, FieldMode::Real, NormMode::lp(2.0));
    CHECK_THROWS_AS((void)restricted_norm_exact(full, 1, {1, 5}), DisjointnessViolated);
}

TEST_CASE("norm estimates: uniform shifts and scalar multiples") {
    const auto shift =
        make_backward_shift_uniform(2.0, 128, FieldMode::Real, NormMode::lp(2.0));
    const NormEstimate est = operator_norm_estimate(shift, 40);
    CHECK(est.value == doctest::Approx(2.0).epsilon(1e-3));

    const auto sc = make_scalar_mul(cx(0.5, 0.0), 32, FieldMode::Real, NormMode::lp(2.0));
    CHECK(operator_norm_estimate(sc, 10).value == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("complexified operator is conjugate to the doubled one") {
    const auto inner = make_backward_shift_uniform(1.5, 16, FieldMode::Real, NormMode::lp(2.0));
    const auto tilde = complexify(inner);
    REQUIRE(tilde.dim == 32);
    rng::Rng gen(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = gen.unit_vector(16, FieldMode::Real, NormMode::lp(2.0));
        const auto y = gen.unit_vector(16, FieldMode::Real, NormMode::lp(2.0));
        std::vector<cx> c(32, cx(0.0, 0.0));
        for (std::size_t k = 0; k < 16; ++k) {
            c[k] = x.c[k];
            c[16 + k] = y.c[k];
        }
        const auto xy = seqspace::make_vec(c, FieldMode::Real, NormMode::lp(2.0));
        const auto lhs = apply(tilde, xy);
        const auto tx = apply(inner, x);
        const auto ty = apply(inner, y);
        for (std::size_t k = 0; k < 16; ++k) {
            CHECK(lhs.c[k] == tx.c[k]);
            CHECK(lhs.c[16 + k] == ty.c[k]);
        }
    }
}

TEST_CASE("direct sums act blockwise") {
    const auto left = make_identity(3, FieldMode::Real, NormMode::lp(2.0));
    const auto right = make_scalar_mul(cx(0.5, 0.0), 2, FieldMode::Real, NormMode::lp(2.0));
    const auto sum = make_direct_sum(left, right);
    REQUIRE(sum.dim == 5);
    const auto img = apply(sum, seqspace::make_real_vec({1, 2, 3, 4, 6}, NormMode::lp(2.0)));
    CHECK(img.c[0] == cx(1.0, 0.0));
    CHECK(img.c[2] == cx(3.0, 0.0));
    CHECK(img.c[3] == cx(2.0, 0.0));
    CHECK(img.c[4] == cx(3.0, 0.0));
}

TEST_CASE("operator descriptions round-trip through text") {
    const auto ct = two_blocks();
    const auto specs = {
        make_identity(8, FieldMode::Real, NormMode::lp(2.0)),
        make_scalar_mul(cx(0.5, -0.25), 8, FieldMode::Complex, NormMode::lp(3.0)),
        make_backward_shift_uniform(2.0, 16, FieldMode::Real, NormMode::sup_norm()),
        make_ctype_wb(ct, 0, FieldMode::Real, NormMode::lp(2.0)),
        make_direct_sum(make_backward_shift_uniform(2.0, 8, FieldMode::Real, NormMode::lp(2.0)),
                        make_scalar_mul(cx(0.5, 0.0), 8, FieldMode::Real, NormMode::lp(2.0))),
        complexify(make_backward_shift_uniform(1.0, 8, FieldMode::Real, NormMode::lp(2.0))),
    };
    for (const auto& spec : specs) {
        const std::string text = to_toml(spec);
        const auto back = from_toml_text(text);
        CHECK(to_toml(back) == text);
        CHECK(back.dim == spec.dim);
        CHECK(back.kind == spec.kind);
    }
}

TEST_CASE("preset expansion matches the constructed data") {
    const std::string text = R"([operator]
kind = "ctype-wb"
field = "real"
p = 2.0
preset = "capped-doubling"
blocks = 12
)";
    const auto spec = from_toml_text(text);
    const auto direct = ctype::capped_doubling(12);
    REQUIRE(spec.ct != nullptr);
    CHECK(spec.ct->b == direct.b);
    CHECK(spec.ct->phi == direct.phi);
    CHECK(spec.ct->w == direct.w);
    CHECK(spec.ct->v == direct.v);
    CHECK(spec.dim == direct.dim());
    CHECK(spec.dim == 3071);
}

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <doctest.h>

#include "rlab/ctype_data.hpp"
#include "rlab/dynamics.hpp"
#include "rlab/operators.hpp"
#include "rlab/subspace.hpp"

using namespace rlab;
using seqspace::FieldMode;
using seqspace::NormMode;
using seqspace::PairVec;
using seqspace::TruncVec;

namespace {

TruncVec e(std::size_t dim, std::size_t k, NormMode mode = NormMode::lp(2.0)) {
    return seqspace::unit_vec(dim, k, FieldMode::Real, mode);
}

ops::OperatorSpec wb12() {
    auto data = std::make_shared<ctype::CTypeData>(ctype::capped_doubling(12));
    return ops::make_ctype_wb(data, 0, FieldMode::Real, NormMode::lp(2.0));
}

double apply_functional(const std::vector<cx>& u, const TruncVec& v) {
    double acc = 0.0;
    for (std::size_t k = 0; k < v.dim(); ++k) acc += (std::conj(u[k]) * v.c[k]).real();
    return acc;
}

}  // namespace

TEST_CASE("dual bounds: disjoint coordinate generators give exactly 2 in every mode") {
    for (const NormMode mode :
         {NormMode::lp(1.5), NormMode::lp(2.0), NormMode::lp(4.0), NormMode::sup_norm()}) {
        const std::vector<TruncVec> gens = {e(6, 0, mode), e(6, 2, mode), e(6, 5, mode)};
        CHECK(subspace::dual_norm_bound(gens) == 2.0);
    }
}

TEST_CASE("dual bounds: overlapping generators inflate with the coefficient norm") {
    const double r = 1.0 / std::sqrt(2.0);
    const auto overlapped = [&](NormMode mode) {
        return std::vector<TruncVec>{
            e(4, 0, mode),
            seqspace::make_vec({cx(r, 0.0), cx(r, 0.0), cx(0.0, 0.0), cx(0.0, 0.0)},
                               FieldMode::Real, mode)};
    };
    // Coefficient-l2: exact value 1 + sqrt(2).
    CHECK(subspace::dual_norm_bound(overlapped(NormMode::lp(2.0)))
          == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
    // p <= 2 keeps the l2 value.
    CHECK(subspace::dual_norm_bound(overlapped(NormMode::lp(1.5)))
          == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-12));
    // p = 4 inflates the support-2 functional by 2^(1/2 - 1/4).
    CHECK(subspace::dual_norm_bound(overlapped(NormMode::lp(4.0)))
          == doctest::Approx(1.0 + std::sqrt(2.0) * std::pow(2.0, 0.25)).epsilon(1e-12));
    // sup mode inflates by sqrt(support).
    CHECK(subspace::dual_norm_bound(overlapped(NormMode::sup_norm()))
          == doctest::Approx(3.0).epsilon(1e-12));

    CHECK_THROWS_AS((void)subspace::dual_norm_bound({e(4, 0), e(4, 0)}), std::invalid_argument);
}

TEST_CASE("extraction from a tail chain returns the tail coordinates") {
    const std::vector<std::vector<std::size_t>> chain = {{1, 2, 3, 4}, {2, 3, 4}, {3, 4}, {4}};
    const auto res =
        subspace::mazur_extract_indices(chain, 4, 6, FieldMode::Real, NormMode::lp(2.0));
    REQUIRE(res.vectors.size() == 4);
    REQUIRE(res.stages.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(seqspace::norm(res.vectors[i]) == doctest::Approx(1.0).epsilon(1e-12));
        REQUIRE(res.stages[i].support.size() == 1);
        CHECK(res.stages[i].support[0] == i + 1);
    }
    // Orthonormal picks: prefix sums never exceed the total.
    CHECK(res.basis_constant == 1.0);
    // Biorthogonality of the final duals against the picked vectors.
    const auto& last = res.stages.back().functional;
    CHECK(apply_functional(last, res.vectors[3]) == doctest::Approx(1.0).epsilon(1e-10));
    for (std::size_t i = 0; i + 1 < 4; ++i) {
        CHECK(apply_functional(last, res.vectors[i]) == doctest::Approx(0.0).epsilon(1e-10));
    }
}

TEST_CASE("extraction from a constant chain picks disjointly supported vectors") {
    const std::vector<std::size_t> whole = {0, 1, 2, 3, 4, 5};
    const std::vector<std::vector<std::size_t>> chain = {whole, whole, whole, whole};
    const auto res =
        subspace::mazur_extract_indices(chain, 4, 6, FieldMode::Real, NormMode::lp(2.0));
    REQUIRE(res.vectors.size() == 4);
    std::vector<bool> seen(6, false);
    for (const auto& stage : res.stages) {
        REQUIRE(stage.support.size() == 1);
        CHECK_FALSE(seen[stage.support[0]]);
        seen[stage.support[0]] = true;
    }
}

TEST_CASE("extraction error paths state what ran out") {
    const std::vector<std::vector<std::size_t>> shallow = {{0, 1}};
    CHECK_THROWS_AS(
        (void)subspace::mazur_extract_indices(shallow, 2, 4, FieldMode::Real, NormMode::lp(2.0)),
        std::invalid_argument);
    try {
        (void)subspace::mazur_extract_indices(shallow, 2, 4, FieldMode::Real, NormMode::lp(2.0));
    } catch (const std::invalid_argument& ex) {
        CHECK(std::string(ex.what()).find("chain too shallow") != std::string::npos);
    }

    // One usable direction, two requests: the second null space is empty.
    const std::vector<std::vector<std::size_t>> thin = {{0}, {0}};
    CHECK_THROWS_AS(
        (void)subspace::mazur_extract_indices(thin, 2, 4, FieldMode::Real, NormMode::lp(2.0)),
        subspace::NotFoundWithinTruncation);

    CHECK_THROWS_AS(
        (void)subspace::mazur_extract_indices(shallow, 0, 4, FieldMode::Real, NormMode::lp(2.0)),
        std::invalid_argument);
}

TEST_CASE("block selection walks the stored blocks in log space") {
    const auto ct = ctype::capped_doubling(12);
    const auto sel = subspace::second_option_select(ct, {2, 4, 8, 16, 32, 64}, 2.0);
    CHECK(sel == std::vector<std::size_t>{1, 3, 4, 5, 6, 7});

    // Requirements beyond the stored structure are refused with a hint.
    const auto small = ctype::capped_doubling(3);
    try {
        (void)subspace::second_option_select(small, {1024}, 2.0);
        FAIL("selection should have run out of blocks");
    } catch (const subspace::NotFoundWithinTruncation& ex) {
        CHECK(std::string(ex.what()).find("grow the block structure") != std::string::npos);
    }

    // The weight cap must really dominate the weights.
    CHECK_THROWS_AS((void)subspace::second_option_select(ct, {2}, 1.5), std::invalid_argument);
}

TEST_CASE("block-generator certificate: powers, norms, and verification") {
    const auto spec = wb12();
    const auto cert = subspace::second_option_cert(spec, {2, 4, 8, 16, 32, 64}, 2.0);

    CHECK(cert.mode == "second-option");
    CHECK(cert.selected_blocks == std::vector<std::size_t>{1, 3, 4, 5, 6, 7});
    CHECK(cert.basis_e == std::vector<std::size_t>{2, 14, 30, 62, 126, 254});
    CHECK(cert.selection_powers == std::vector<std::uint64_t>{2, 4, 8, 16, 32, 64});
    // Return powers: cumulative lcms of the generator periods.
    CHECK(cert.powers == std::vector<std::uint64_t>{4, 16, 32, 64, 128, 256});
    CHECK(cert.K == 2.0);
    CHECK(cert.S == 0.0);
    // Exact power-of-two arithmetic: restricted norms land exactly.
    REQUIRE(cert.second_option_norms.size() == 6);
    CHECK(cert.second_option_norms[0] == 1.0);
    for (std::size_t n = 1; n < 6; ++n) CHECK(cert.second_option_norms[n] == 0.5);
    for (double gi : cert.ledger_i) CHECK(gi == 0.0);
    for (const auto& row : cert.ledger_iii)
        for (double v : row) CHECK(v == 0.0);

    const auto out = subspace::verify_recurrent_subspace(spec, cert, 20, 42, 1e-12);
    CHECK(out.pass);
    CHECK(out.max_residual == 0.0);
    CHECK(out.worst_margin <= 0.0);
    CHECK(out.samples == 20);
    CHECK(out.failures.empty());

    // Generators really are fixed by their cumulative return powers.
    for (std::size_t n = 0; n < cert.basis_e.size(); ++n) {
        const auto x = e(spec.dim, cert.basis_e[n]);
        const auto back = ops::apply_power(spec, x, cert.powers.back());
        CHECK(seqspace::norm(seqspace::axpy(cx(-1.0, 0.0), x, back)) == 0.0);
    }

    CHECK_THROWS_AS((void)subspace::second_option_cert(
                        ops::make_identity(8, FieldMode::Real, NormMode::lp(2.0)), {2}, 2.0),
                    std::invalid_argument);
}

TEST_CASE("certificates survive a serialization round trip") {
    const auto spec = wb12();
    const auto cert = subspace::second_option_cert(spec, {2, 4, 8, 16}, 2.0);
    const std::string text = cert.to_json();
    const auto back = subspace::SubspaceCert::from_json(text);
    CHECK(back.to_json() == text);
    CHECK(back.mode == cert.mode);
    CHECK(back.powers == cert.powers);
    CHECK(back.basis_e == cert.basis_e);
    CHECK(back.op_toml == cert.op_toml);

    // The round-tripped certificate still verifies.
    const auto out = subspace::verify_recurrent_subspace(spec, back, 5, 7, 1e-12);
    CHECK(out.pass);

    CHECK_THROWS_AS((void)subspace::SubspaceCert::from_json("{not json"), std::invalid_argument);
    CHECK_THROWS_AS((void)subspace::SubspaceCert::from_json("{\"schema\":\"other/9\"}"),
                    std::invalid_argument);
}

TEST_CASE("verification refuses an oversized perturbation sum and flags tampering") {
    const auto spec = wb12();
    const auto cert = subspace::second_option_cert(spec, {2, 4, 8, 16}, 2.0);

    auto fat = cert;
    fat.S = 0.6;
    CHECK_THROWS_AS((void)subspace::verify_recurrent_subspace(spec, fat, 3, 1), std::invalid_argument);

    auto moved = cert;  // generator far from its coordinate: recomputed S blows up
    moved.gen_f[0] = e(spec.dim, 0);
    CHECK_THROWS_AS((void)subspace::verify_recurrent_subspace(spec, moved, 3, 1),
                    std::invalid_argument);

    auto cooked = cert;  // ledger entry that does not match a recomputation
    cooked.ledger_iii[1][0] = 0.125;
    const auto out = subspace::verify_recurrent_subspace(spec, cooked, 3, 1);
    CHECK_FALSE(out.pass);
    CHECK_FALSE(out.failures.empty());

    auto shuffled = cert;  // non-increasing powers are structurally invalid
    shuffled.powers[1] = shuffled.powers[0];
    CHECK_THROWS_AS((void)subspace::verify_recurrent_subspace(spec, shuffled, 3, 1),
                    std::invalid_argument);

    auto renamed = cert;  // certificate must name the operator it was built for
    renamed.op_toml += "# trailing\n";
    const auto mism = subspace::verify_recurrent_subspace(spec, renamed, 3, 1);
    CHECK_FALSE(mism.pass);
}

TEST_CASE("recursive construction on the identity: passthrough targets, zero ledgers") {
    const auto id = ops::make_identity(8, FieldMode::Real, NormMode::lp(2.0));
    const auto cert = subspace::claim_construct(id, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, {0, 1, 2}, 3,
                                                subspace::passthrough_oracle(), 2.0);
    CHECK(cert.mode == "claim");
    CHECK(cert.powers == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(cert.S == 0.0);
    for (double v : cert.ledger_i) CHECK(v == 0.0);
    for (const auto& row : cert.ledger_ii)
        for (double v : row) CHECK(v == 0.0);
    for (const auto& row : cert.ledger_iii)
        for (double v : row) CHECK(v == 0.0);
    // f_n == e_n exactly.
    for (std::size_t n = 0; n < 3; ++n) {
        CHECK(seqspace::norm(seqspace::axpy(cx(-1.0, 0.0), e(8, n), cert.gen_f[n])) == 0.0);
    }
    const auto out = subspace::verify_recurrent_subspace(id, cert, 10, 3, 1e-12);
    CHECK(out.pass);
    CHECK(out.max_residual == 0.0);
}

TEST_CASE("recursive construction on the block shift skips half-period powers") {
    auto data = std::make_shared<ctype::CTypeData>(ctype::capped_doubling(5));
    const auto spec = ops::make_ctype_wb(data, 0, FieldMode::Real, NormMode::lp(2.0));
    const auto witness = dynamics::quasi_rigidity_witness(*data, 5);  // 2,4,8,16,32
    const auto sel = subspace::second_option_select(*data, {2, 4, 8}, 2.0);
    CHECK(sel == std::vector<std::size_t>{1, 3, 4});
    std::vector<std::size_t> basis;
    for (std::size_t l : sel) basis.push_back(data->b[l + 1] - 1);
    CHECK(basis == std::vector<std::size_t>{2, 14, 30});

    const auto cert = subspace::claim_construct(spec, witness, basis, 3,
                                                subspace::block_truncation_oracle(data), 2.0);
    // Half-periods negate (rejected); the construction lands on full periods.
    CHECK(cert.powers == std::vector<std::uint64_t>{4, 16, 32});
    CHECK(cert.S == 0.0);
    const auto out = subspace::verify_recurrent_subspace(spec, cert, 10, 5, 1e-12);
    CHECK(out.pass);
}

TEST_CASE("recursive construction survives a sloppy oracle by shrinking the radius") {
    auto data = std::make_shared<ctype::CTypeData>(ctype::capped_doubling(5));
    const auto spec = ops::make_ctype_wb(data, 0, FieldMode::Real, NormMode::lp(2.0));
    const auto block_oracle = subspace::block_truncation_oracle(data);
    // Meets ||f - target|| < delta but always smears onto coordinate 1
    // (same invariant block as coordinate 2, so returns stay exact).
    const subspace::ApproxOracle smeared = [&](const TruncVec& target, double delta) {
        auto f = block_oracle(target, delta / 2.0);
        f.c[1] += cx(delta / 2.0, 0.0);
        return f;
    };
    const auto cert = subspace::claim_construct(spec, {2, 4, 8, 16, 32}, {2, 14, 30}, 3,
                                                smeared, 2.0);
    CHECK(cert.powers == std::vector<std::uint64_t>{4, 16, 32});
    CHECK(cert.S > 0.0);
    CHECK(cert.S < 0.5);
    for (double v : cert.ledger_i) CHECK(v > 0.0);
    const auto out = subspace::verify_recurrent_subspace(spec, cert, 10, 11, 1e-9);
    CHECK(out.pass);

    // An oracle that ignores the radius exhausts the retries.
    const subspace::ApproxOracle stubborn = [&](const TruncVec& target, double) {
        auto f = target;
        f.c[1] += cx(0.3, 0.0);
        return f;
    };
    CHECK_THROWS_AS((void)subspace::claim_construct(spec, {2, 4, 8, 16, 32}, {2, 14, 30}, 3,
                                                    stubborn, 2.0),
                    subspace::NotFoundWithinTruncation);
}

TEST_CASE("recursive construction argument validation") {
    const auto id = ops::make_identity(4, FieldMode::Real, NormMode::lp(2.0));
    const auto pass = subspace::passthrough_oracle();
    CHECK_THROWS_AS((void)subspace::claim_construct(id, {1, 2}, {0, 1}, 0, pass),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)subspace::claim_construct(id, {1, 2}, {0}, 2, pass),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)subspace::claim_construct(id, {2, 2}, {0, 1}, 2, pass),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)subspace::claim_construct(id, {0, 1}, {0, 1}, 2, pass),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)subspace::claim_construct(id, {1, 2}, {0, 0}, 2, pass),
                    std::invalid_argument);
    // Powers must outlast the steps: {1} cannot serve two increasing picks.
    CHECK_THROWS_AS((void)subspace::claim_construct(id, {1}, {0, 1}, 2, pass),
                    subspace::NotFoundWithinTruncation);
}

TEST_CASE("pair projections: one-sided, swapped, and rotation-closed families") {
    const auto mk = [](std::size_t k) { return e(4, k); };
    const auto zero = seqspace::zero_vec(4, FieldMode::Real, NormMode::lp(2.0));

    const auto one_sided = subspace::project_pair_subspace(
        {PairVec{mk(0), zero}, PairVec{mk(1), zero}});
    CHECK(one_sided.rank_z == 2);
    CHECK(one_sided.rank_p == 2);
    CHECK(one_sided.rank_q == 0);
    CHECK(one_sided.dichotomy_equal);
    CHECK_FALSE(one_sided.rotation_invariant);
    CHECK(one_sided.p_basis.size() == 2);
    CHECK(one_sided.q_basis.empty());

    const auto swapped = subspace::project_pair_subspace(
        {PairVec{mk(0), mk(1)}, PairVec{mk(1), mk(0)}});
    CHECK(swapped.rank_z == 2);
    CHECK(swapped.rank_p == 2);
    CHECK(swapped.rank_q == 2);
    CHECK(swapped.dichotomy_equal);
    CHECK_FALSE(swapped.rotation_invariant);

    auto minus_e1 = seqspace::axpy(cx(-1.0, 0.0), mk(1), zero);
    const auto rotated = subspace::project_pair_subspace(
        {PairVec{mk(0), mk(1)}, PairVec{minus_e1, mk(0)}});
    CHECK(rotated.rank_z == 2);
    CHECK(rotated.rotation_invariant);
    CHECK(rotated.rank_p == rotated.rank_q);
    CHECK(rotated.rank_p == 2);
    CHECK(rotated.dichotomy_equal);

    CHECK_THROWS_AS(
        (void)subspace::project_pair_subspace({PairVec{mk(0), zero}, PairVec{mk(0), zero}}),
        std::invalid_argument);
}

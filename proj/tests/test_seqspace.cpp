#include <cmath>

#include <doctest.h>

#include "rlab/seqspace.hpp"

using namespace rlab;
using namespace rlab::seqspace;

TEST_CASE("lp and sup norms on a hand-computed vector") {
    const std::vector<double> v = {3.0, -4.0};
    CHECK(norm(make_real_vec(v, NormMode::lp(2.0))) == doctest::Approx(5.0).epsilon(1e-15));
    CHECK(norm(make_real_vec(v, NormMode::lp(1.0))) == doctest::Approx(7.0).epsilon(1e-15));
    CHECK(norm(make_real_vec(v, NormMode::sup_norm())) == doctest::Approx(4.0).epsilon(1e-15));
    // p = 3: (27 + 64)^(1/3)
    CHECK(norm(make_real_vec(v, NormMode::lp(3.0))) ==
          doctest::Approx(std::cbrt(91.0)).epsilon(1e-14));
}

TEST_CASE("unit vectors have norm one in every mode") {
    for (double p : {1.0, 2.0, 3.5, 7.0}) {
        CHECK(norm(unit_vec(16, 5, FieldMode::Real, NormMode::lp(p))) ==
              doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(norm(unit_vec(16, 0, FieldMode::Complex, NormMode::sup_norm())) ==
          doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("norm survives coefficients near the top of the double range") {
    const std::vector<double> v = {1e200, 1e200};
    const double n2 = norm(make_real_vec(v, NormMode::lp(2.0)));
    CHECK(std::isfinite(n2));
    CHECK(n2 == doctest::Approx(std::sqrt(2.0) * 1e200).epsilon(1e-14));
}

TEST_CASE("axpy combines and respects modes") {
    const auto e0 = unit_vec(4, 0, FieldMode::Real, NormMode::lp(2.0));
    const auto e1 = unit_vec(4, 1, FieldMode::Real, NormMode::lp(2.0));
    const auto y = axpy(cx(2.0, 0.0), e0, e1);  // 2 e0 + e1
    CHECK(y.c[0] == cx(2.0, 0.0));
    CHECK(y.c[1] == cx(1.0, 0.0));
    CHECK(norm(y) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
}

TEST_CASE("complexification norm: disjoint, equal, and degenerate pairs") {
    const NormMode m = NormMode::lp(2.0);
    const auto e0 = unit_vec(4, 0, FieldMode::Real, m);
    const auto e1 = unit_vec(4, 1, FieldMode::Real, m);
    const auto zero = zero_vec(4, FieldMode::Real, m);

    // cos(t) e0 - sin(t) e1 always has l2 norm 1.
    CHECK(complexification_norm(e0, e1) == doctest::Approx(1.0).epsilon(kComplexificationTol));
    // cos(t) - sin(t) peaks at sqrt(2).
    CHECK(complexification_norm(e0, e0) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(kComplexificationTol));
    // Zero imaginary part reduces to the plain norm.
    CHECK(complexification_norm(e0, zero) == doctest::Approx(1.0).epsilon(kComplexificationTol));

    const auto z = make_pair_vec(e0, e1);
    CHECK(pair_norm(z) == doctest::Approx(1.0).epsilon(kComplexificationTol));
}

TEST_CASE("complexification norm in sup mode") {
    const NormMode m = NormMode::sup_norm();
    const auto e0 = unit_vec(3, 0, FieldMode::Real, m);
    const auto e1 = unit_vec(3, 1, FieldMode::Real, m);
    // max(|cos t|, |sin t|) has maximum 1 over t.
    CHECK(complexification_norm(e0, e1) == doctest::Approx(1.0).epsilon(kComplexificationTol));
}

#include "doctest.h"

#include "kovtop/error.hpp"
#include "kovtop/painleve.hpp"
#include "kovtop/poly.hpp"

#include <random>

using namespace kovtop;

namespace {

const cd I(0.0, 1.0);

BodyParameters body(double A, double B, double C, double x, double y, double z)
{
    return BodyParameters{A, B, C, 1.0, x, y, z};
}

// Evaluate a monic-in-factors reference polynomial lead * prod (m - r).
cd factored(double lead, const std::vector<double>& rts, cd m)
{
    cd v = lead;
    for (double r : rts) v *= (m - r);
    return v;
}

void check_invariants(const BodyParameters& bp, const LeadingBalance& lb, bool lambda_relations)
{
    CHECK(balance_residual(bp, lb).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(lb.p0 * lb.p0 + lb.q0 * lb.q0 + lb.r0 * lb.r0 + 4.0) < 1e-10);
    const cd S1 = bp.A * lb.p0 * lb.p0 + bp.B * lb.q0 * lb.q0 + bp.C * lb.r0 * lb.r0;
    const cd S2 = bp.A * bp.A * lb.p0 * lb.p0 + bp.B * bp.B * lb.q0 * lb.q0 + bp.C * bp.C * lb.r0 * lb.r0;
    CHECK(std::abs(S2 + 0.25 * S1 * S1) < 1e-10 * std::max(1.0, std::abs(S2)));
    CHECK(std::abs(lb.lambda0 + 2.0) < 1e-10);
    if (lambda_relations) {
        CHECK(std::abs(lb.lambda1 + lb.lambda * lb.lambda / 2.0) < 1e-10 * std::max(1.0, std::abs(lb.lambda1)));
        const cd gsum = bp.x0 * lb.f0 + bp.y0 * lb.g0 + bp.z0 * lb.h0;
        CHECK(std::abs(gsum - 0.5 * S1) < 1e-10 * std::max(1.0, std::abs(S1)));
    }
}

}  // namespace

TEST_CASE("solve_lambda: residual and center reflection")
{
    const BodyParameters bp = body(3, 2, 1, 1, 1, 1);
    const BodyParameters neg = body(3, 2, 1, -1, -1, -1);
    const std::array<std::array<int, 3>, 4> octs{{{1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {-1, 1, 1}}};
    int total = 0;
    for (const auto& s : octs) {
        const auto lam = solve_lambda(bp, s);
        const auto lneg = solve_lambda(neg, s);
        total += int(lam.size());
        // reflecting the center changes the sign of the equation only
        REQUIRE(lam.size() == lneg.size());
        for (std::size_t i = 0; i < lam.size(); ++i) CHECK(std::abs(lam[i] - lneg[i]) < 1e-9);
        for (cd l : lam) {
            const cd a = double(s[0]) * std::sqrt((6.0 + l) / 1.0);
            const cd b = double(s[1]) * std::sqrt((4.0 + l) / -2.0);
            const cd c = double(s[2]) * std::sqrt((2.0 + l) / 1.0);
            const cd f = (3.0 + l) * b * c + (2.0 + l) * c * a - (1.0 + l) * a * b;
            CHECK(std::abs(f) < 1e-10 * std::max(1.0, std::abs((3.0 + l) * b * c)));
        }
    }
    CHECK(total > 0);
}

TEST_CASE("solve_lambda: error cases")
{
    CHECK_THROWS_WITH_AS(solve_lambda(body(3, 2, 1, 0, 0, 0), {1, 1, 1}), doctest::Contains("AllZeroCenter"), Error);
    CHECK_THROWS_WITH_AS(solve_lambda(body(2, 2, 1, 1, 0, 0), {1, 1, 1}), doctest::Contains("DegenerateInertia"), Error);
}

TEST_CASE("leading_coefficients: generic balances satisfy the leading-order system")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    std::normal_distribution<double> nd;
    int seen = 0;
    for (int t = 0; t < 20; ++t) {
        const BodyParameters bp = body(u(rng), u(rng), u(rng), nd(rng), nd(rng), nd(rng));
        for (const auto& s : std::array<std::array<int, 3>, 4>{{{1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {-1, 1, 1}}})
            for (cd lam : solve_lambda(bp, s)) {
                const LeadingBalance lb = leading_coefficients(bp, lam, s);
                check_invariants(bp, lb, true);
                // squared leading coefficients against the moment factors
                CHECK(std::abs(lb.p0 * lb.p0 * bp.B1() * bp.C1() - (2.0 * bp.B + lam) * (2.0 * bp.C + lam)) < 1e-12 * std::max(1.0, std::norm(lam)));
                CHECK(std::abs(lb.q0 * lb.q0 * bp.C1() * bp.A1() - (2.0 * bp.C + lam) * (2.0 * bp.A + lam)) < 1e-12 * std::max(1.0, std::norm(lam)));
                CHECK(std::abs(lb.r0 * lb.r0 * bp.A1() * bp.B1() - (2.0 * bp.A + lam) * (2.0 * bp.B + lam)) < 1e-12 * std::max(1.0, std::norm(lam)));
                ++seen;
            }
    }
    CHECK(seen > 20);
}

TEST_CASE("leading_coefficients: moment relation holds with the B-weighted z0 term only")
{
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    std::normal_distribution<double> nd;
    double b_form = 0.0, a_form = 0.0;
    for (int t = 0; t < 20; ++t) {
        const BodyParameters bp = body(u(rng), u(rng), u(rng), nd(rng), nd(rng), nd(rng));
        for (cd lam : solve_lambda(bp, {1, 1, 1})) {
            const LeadingBalance lb = leading_coefficients(bp, lam, {1, 1, 1});
            const cd lhs = bp.A * bp.A * lb.p0 * lb.p0 + bp.B * bp.B * lb.q0 * lb.q0 + bp.C * bp.C * lb.r0 * lb.r0;
            const cd common = bp.x0 * (bp.B * lb.q0 * lb.h0 - bp.C * lb.r0 * lb.g0) +
                              bp.y0 * (bp.C * lb.r0 * lb.f0 - bp.A * lb.p0 * lb.h0);
            const cd zb = bp.z0 * (bp.A * lb.p0 * lb.g0 - bp.B * lb.q0 * lb.f0);
            const cd za = bp.z0 * (bp.A * lb.p0 * lb.g0 - bp.A * lb.q0 * lb.f0);
            const double sc = std::max(1.0, std::abs(lhs));
            b_form = std::max(b_form, std::abs(lhs - common - zb) / sc);
            a_form = std::max(a_form, std::abs(lhs - common - za) / sc);
        }
    }
    CHECK(b_form < 1e-10);
    CHECK(a_form > 1e-3);
}

TEST_CASE("leading_coefficients: vanishing mu is reported")
{
    // the center along the first axis with p0 = 0 forces mu = 0
    const BodyParameters bp = body(3, 2, 1, 1, 0, 0);
    const cd lam = -2.0 * bp.B;  // b = 0 so p0 = bc = 0
    CHECK_THROWS_WITH_AS(leading_coefficients(bp, lam, {1, 1, 1}), doctest::Contains("MuZero"), Error);
}

TEST_CASE("degenerate_balances: Kovalevskaya normalization")
{
    const double c0 = 1.0;
    const BodyParameters bp = BodyParameters::kovalevskaya(c0);
    const auto bal = degenerate_balances(bp);
    REQUIRE(bal.size() == 4);
    const LeadingBalance* first = nullptr;
    for (const auto& lb : bal)
        if (lb.family == BalanceFamily::DegenerateI && lb.eps == 1) first = &lb;
    REQUIRE(first);
    Eigen::Matrix<cd, 6, 1> want;
    want << 0.0, 2.0 * I, 0.0, -4.0, 0.0, 4.0 * I;
    CHECK((first->vec() - want).cwiseAbs().maxCoeff() < 1e-14);
    for (const auto& lb : bal) {
        check_invariants(bp, lb, false);
        if (lb.family == BalanceFamily::DegenerateII) {
            CHECK(std::abs(lb.r0 - 2.0 * double(lb.eps) * I) < 1e-15);
            CHECK(std::abs(lb.q0 - double(lb.eps) * I * lb.p0) < 1e-15);
            CHECK(std::abs(lb.g0 - double(lb.eps) * I * lb.f0) < 1e-15);
            CHECK(std::abs(lb.g0 + lb.r0 / c0) < 1e-15);
            CHECK(lb.h0 == 0.0);
        }
    }
    // the two signs are complex conjugates of each other
    for (const auto& x : bal)
        for (const auto& y : bal)
            if (x.family == y.family && x.eps == -y.eps)
                CHECK((x.vec() - y.vec().conjugate()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("degenerate_balances: general symmetric bodies and rotated centers")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 50; ++t) {
        const double A = u(rng);
        const BodyParameters bp = body(A, A, u(rng), nd(rng), nd(rng), nd(rng));
        const auto bal = degenerate_balances(bp);
        CHECK(bal.size() == 4);
        for (const auto& lb : bal) check_invariants(bp, lb, false);
    }
    CHECK_THROWS_WITH_AS(degenerate_balances(body(3, 2, 1, 1, 0, 0)), doctest::Contains("NotDegenerate"), Error);
}

TEST_CASE("resonance_polynomial: Kovalevskaya families")
{
    const BodyParameters bp = BodyParameters::kovalevskaya(1.0);
    for (const auto& lb : degenerate_balances(bp)) {
        const ResonanceSpectrum rs = resonance_polynomial(bp, lb);
        CHECK(std::abs(rs.poly(6)) > 0.0);
        // interpolation against a direct determinant outside the nodes
        const cd direct = resonance_matrix(bp, lb, 7.0).determinant();
        CHECK(std::abs(poly::horner(rs.poly, cd(7.0)) - direct) < 1e-8 * std::abs(direct));
        if (lb.family == BalanceFamily::DegenerateI) {
            for (double m : {0.5, 1.5, 5.5, -2.0})
                CHECK(std::abs(poly::horner(rs.poly, cd(m)) - factored(4.0, {4, 3, 2, 2, -1, -1}, m)) < 1e-8);
            CHECK(rs.integer_roots == std::vector<int>{-1, 2, 3, 4});
        } else {
            for (double m : {0.5, 1.5, 5.5, -2.0})
                CHECK(std::abs(poly::horner(rs.poly, cd(m)) - factored(4.0, {0, 1, 2, 3, 4, -1}, m)) < 1e-8);
            CHECK(rs.integer_roots == std::vector<int>{-1, 0, 1, 2, 3, 4});
            CHECK(rs.free_constants == 5);
        }
    }
}

TEST_CASE("resonance_polynomial: conjugate balances give conjugate polynomials")
{
    const BodyParameters bp = body(3, 3, 1.3, 0.7, 0.0, 0.4);
    const auto bal = degenerate_balances(bp);
    for (const auto& x : bal)
        for (const auto& y : bal)
            if (x.family == y.family && x.eps == 1 && y.eps == -1) {
                const auto px = resonance_polynomial(bp, x).poly;
                const auto py = resonance_polynomial(bp, y).poly;
                CHECK((px - py.conjugate()).cwiseAbs().maxCoeff() < 1e-10);
            }
}

TEST_CASE("painleve_test: the three integrable cases")
{
    const PainleveVerdict k = painleve_test(body(2, 2, 1, 1, 0, 0));
    CHECK(k.kind == PainleveCase::Kovalevskaya);
    CHECK(k.passes);
    CHECK(k.integer_union == std::vector<int>{0, 1, 2, 3, 4});

    const PainleveVerdict l = painleve_test(body(3, 3, 1, 0, 0, 1));
    CHECK(l.kind == PainleveCase::Lagrange);
    CHECK(l.passes);

    const PainleveVerdict e = painleve_test(body(3, 2, 1, 0, 0, 0));
    CHECK(e.kind == PainleveCase::Euler);
    CHECK(e.passes);
    // the free top has a triple resonance at 2 with a three-dimensional kernel
    for (const auto& f : e.families) CHECK(f.spectrum.free_constants == 5);
}

TEST_CASE("painleve_test: relabeled and rotated Kovalevskaya bodies")
{
    // equal pair on the last two axes, center in their plane, rotated
    const PainleveVerdict k = painleve_test(body(1, 2, 2, 0, 0.6, 0.8));
    CHECK(k.kind == PainleveCase::Kovalevskaya);
    const PainleveVerdict l = painleve_test(body(1, 4, 4, 2, 0, 0));
    CHECK(l.kind == PainleveCase::Lagrange);
}

TEST_CASE("painleve_test: verdicts are stable under the integer tolerance")
{
    for (double tol : {1e-6 - 1e-8, 1e-6 + 1e-8}) {
        CHECK(painleve_test(body(2, 2, 1, 1, 0, 0), tol).kind == PainleveCase::Kovalevskaya);
        CHECK(painleve_test(body(3, 3, 1, 0, 0, 1), tol).kind == PainleveCase::Lagrange);
        CHECK(painleve_test(body(3, 2, 1, 0, 0, 0), tol).kind == PainleveCase::Euler);
    }
}

TEST_CASE("painleve_test: generic bodies fail")
{
    CHECK(painleve_test(body(3, 2, 1, 1, 1, 1)).kind == PainleveCase::Fails);
    CHECK(painleve_test(body(3, 3, 1, 1, 0, 0)).kind == PainleveCase::Fails);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    std::normal_distribution<double> nd;
    int fails = 0;
    for (int t = 0; t < 100; ++t) {
        const PainleveVerdict v = painleve_test(body(u(rng), u(rng), u(rng), nd(rng), nd(rng), nd(rng)));
        if (v.kind == PainleveCase::Fails) ++fails;
    }
    CHECK(fails == 100);
}

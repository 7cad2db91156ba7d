#include "doctest.h"

#include "kovtop/error.hpp"
#include "kovtop/poly.hpp"
#include "kovtop/reconstruction.hpp"
#include "reference_trajectory.hpp"

#include <random>

using namespace kovtop;
using namespace kovtop::testing;

namespace {

const RealCaseContext& ref_ctx()
{
    static const RealCaseContext ctx = context(ref_l1, ref_l, ref_c0, ref_k);
    return ctx;
}

struct WindowSampler {
    std::uniform_real_distribution<double> u1, u2;
    explicit WindowSampler(const RealCaseContext& c) : u1(c.a[0], c.a[3]), u2(c.a[2] - 6.0, c.a[2]) {}
    std::pair<double, double> operator()(std::mt19937_64& rng) { return {u1(rng), u2(rng)}; }
};

cd sqrt_r(const RealCaseContext& c, double s)
{
    cd pr = 1.0;
    for (double a : c.a) pr *= std::sqrt(cd(s - a));
    return cd(0.0, 2.0) * pr;
}

}  // namespace

TEST_CASE("context: reference constants")
{
    const RealCaseContext& c = ref_ctx();
    const double e1 = c.a[0], e2 = c.a[1], e3 = c.a[2];
    CHECK(e1 > e2);
    CHECK(e2 > e3);
    CHECK(e3 > -c.l1);
    CHECK(c.a[3] > e1);
    CHECK(e1 > c.a[4]);
    for (cd z : {c.L, c.M, c.N, c.L2, c.M2, c.N2}) CHECK(z.real() == 0.0);
    CHECK(c.E == doctest::Approx((e2 - e3) * (e3 - e1) * (e1 - e2)));
    // L1 L = i (e2-e3)^2 sqrt((l1+e1)(l1+e2)(l1+e3)) shares one radical across the family
    const cd h = std::sqrt((c.l1 + e1) * (c.l1 + e2) * (c.l1 + e3));
    CHECK(std::abs(c.L * c.L1 - cd(0, 1) * (e2 - e3) * (e2 - e3) * h) < 1e-12);
    CHECK(std::abs(c.M * c.M1 - cd(0, 1) * (e3 - e1) * (e3 - e1) * h) < 1e-12);
    CHECK(std::abs(c.N * c.N1 - cd(0, 1) * (e1 - e2) * (e1 - e2) * h) < 1e-12);
}

TEST_CASE("context: raising l breaks the reality window")
{
    const double l = 2.3;
    // independent check that e1 exceeds k1 for these constants
    const double g2 = ref_k * ref_k - ref_c0 * ref_c0 + 3.0 * ref_l1 * ref_l1;
    const double g3 = ref_l1 * (ref_k * ref_k - ref_c0 * ref_c0 - ref_l1 * ref_l1) + l * l * ref_c0 * ref_c0;
    Eigen::VectorXcd c(4);
    c << -g3, -g2, 0.0, 4.0;
    const Eigen::VectorXcd r = poly::roots(c);
    double e1 = -1e300;
    for (int i = 0; i < 3; ++i) e1 = std::max(e1, r[i].real());
    REQUIRE(e1 > (ref_l1 + ref_k) / 2.0);
    try {
        context(ref_l1, l, ref_c0, ref_k);
        FAIL("expected RealityWindowViolated");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::RealityWindowViolated);
    }
}

TEST_CASE("context: outside the four-real-root regime")
{
    try {
        context(2.0, 0.3, 1.5, 1.0);
        FAIL("expected NotFourRealRegime");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotFourRealRegime);
    }
}

TEST_CASE("p_values: vanishing, reality pattern and symmetry")
{
    const RealCaseContext& c = ref_ctx();
    const PValues at = p_values(c, c.a[0], c.a[2] - 1.0);
    CHECK(std::abs(at.p(1)) == 0.0);

    std::mt19937_64 rng(41);
    WindowSampler ws(c);
    for (int n = 0; n < 1000; ++n) {
        const auto [s1, s2] = ws(rng);
        const PValues pv = p_values(c, s1, s2);
        for (int i = 1; i <= 3; ++i) CHECK(std::abs(pv.p(i).real()) <= 1e-14 * std::abs(pv.p(i)));
        for (auto [i, j] : {std::pair{2, 3}, {1, 3}, {1, 2}})
            CHECK(std::abs(pv.pp(i, j).imag()) <= 1e-12 * std::max(1.0, std::abs(pv.pp(i, j))));
        for (int i = 1; i <= 5; ++i) {
            CHECK(std::abs(pv.p(i) * pv.p(i) - (s1 - c.a[i - 1]) * (s2 - c.a[i - 1])) <
                  1e-12 * std::max(1.0, std::abs(pv.p(i) * pv.p(i))));
            for (int j = 1; j <= 5; ++j)
                if (i != j) CHECK(pv.pp(i, j) == pv.pp(j, i));
        }
    }
}

TEST_CASE("p_values: P_ab against the divided-difference form of the radical")
{
    // P_ab = P_a P_b/(s1-s2) [√R(s1)/((s1-a)(s1-b)) - √R(s2)/((s2-a)(s2-b))]
    const RealCaseContext& c = ref_ctx();
    std::mt19937_64 rng(42);
    WindowSampler ws(c);
    double worst = 0.0;
    for (int n = 0; n < 500; ++n) {
        const auto [s1, s2] = ws(rng);
        const PValues pv = p_values(c, s1, s2);
        const cd w1 = sqrt_r(c, s1), w2 = sqrt_r(c, s2);
        for (int i = 0; i < 5; ++i)
            for (int j = i + 1; j < 5; ++j) {
                const double ai = c.a[i], aj = c.a[j];
                const cd ref = pv.P[i] * pv.P[j] / (s1 - s2) *
                               (w1 / ((s1 - ai) * (s1 - aj)) - w2 / ((s2 - ai) * (s2 - aj)));
                worst = std::max(worst, std::abs(ref - pv.Pab[i][j]) / std::max(1.0, std::abs(ref)));
            }
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("p_values: outside the windows")
{
    const RealCaseContext& c = ref_ctx();
    CHECK_THROWS_AS(p_values(c, c.a[0] - 0.1, c.a[2] - 1.0), Error);
    CHECK_THROWS_AS(p_values(c, c.a[3] + 0.1, c.a[2] - 1.0), Error);
    CHECK_THROWS_AS(p_values(c, c.a[0] + 0.01, c.a[2] + 0.1), Error);
    CHECK(in_window(c, c.a[3], c.a[2]));
}

TEST_CASE("the six P relations on random in-window pairs")
{
    const RealCaseContext& c = ref_ctx();
    std::mt19937_64 rng(43);
    WindowSampler ws(c);
    IdentityReport worst;
    for (int n = 0; n < 1000; ++n) {
        const auto [s1, s2] = ws(rng);
        const IdentityReport r = identity_suite(c, s1, s2);
        CHECK(r.evaluations == 60);
        for (int i = 0; i < 6; ++i) worst.max_residual[i] = std::max(worst.max_residual[i], r.max_residual[i]);
    }
    for (int i = 0; i < 6; ++i) CHECK(worst.max_residual[i] < 1e-9);
}

TEST_CASE("the P relations fail for an inconsistent sign pattern")
{
    const RealCaseContext& c = ref_ctx();
    PValues pv = p_values(c, c.a[0] + 0.03, c.a[2] - 0.7);
    pv.Pab[0][1] = pv.Pab[1][0] = -pv.Pab[0][1];
    const IdentityReport r = identity_suite(c, pv);
    CHECK(*std::max_element(r.max_residual.begin(), r.max_residual.end()) > 1e-3);
}

TEST_CASE("differentiation rules along u1 against central differences")
{
    const RealCaseContext& c = ref_ctx();
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u1(c.a[0] + 0.01, c.a[3] - 0.01), u2(c.a[2] - 4.0, c.a[2] - 0.05);
    double worst = 0.0;
    for (int n = 0; n < 100; ++n) {
        const double s1 = u1(rng), s2 = u2(rng);
        // ds1 = √R(s1)/(s1-s2) du1, ds2 = √R(s2)/(s2-s1) du1 at du2 = 0; both real in-window
        const double v1 = (sqrt_r(c, s1) / (s1 - s2)).real(), v2 = (sqrt_r(c, s2) / (s2 - s1)).real();
        const double h = 1e-6;
        const PValues pp = p_values(c, s1 + h * v1, s2 + h * v2);
        const PValues pm = p_values(c, s1 - h * v1, s2 - h * v2);
        const PValues d = p_derivative(c, p_values(c, s1, s2));
        for (int i = 0; i < 5; ++i) {
            const cd fd = (pp.P[i] - pm.P[i]) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - d.P[i]) / std::max(1.0, std::abs(d.P[i])));
            for (int j = i + 1; j < 5; ++j) {
                const cd fdp = (pp.Pab[i][j] - pm.Pab[i][j]) / (2.0 * h);
                worst = std::max(worst, std::abs(fdp - d.Pab[i][j]) / std::max(1.0, std::abs(d.Pab[i][j])));
            }
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("reconstruct: real output carrying the prescribed integrals")
{
    const RealCaseContext& c = ref_ctx();
    std::mt19937_64 rng(45);
    WindowSampler ws(c);
    for (int n = 0; n < 1000; ++n) {
        const auto [s1, s2] = ws(rng);
        const ReconstructedState rs = reconstruct(c, s1, s2);
        const double sc = std::max(1.0, rs.state.vec().cwiseAbs().maxCoeff());
        CHECK(rs.imag_residue < 1e-9 * sc);
        const IntegralSet is = first_integrals(c.c0, rs.state);
        const double sc2 = sc * sc;
        CHECK(std::abs(is.l1 - c.l1) < 1e-8 * sc2);
        CHECK(std::abs(is.l - c.l) < 1e-8 * sc2);
        CHECK(std::abs(is.norm - 1.0) < 1e-8 * sc2);
        CHECK(std::abs(is.k_sq - c.k * c.k) < 1e-8 * sc2 * sc2);
        const MotionState& s = rs.state;
        CHECK(std::abs(2.0 * (s.p * s.p + s.q * s.q) + s.r * s.r - 2.0 * c.c0 * s.gamma - 6.0 * c.l1) < 1e-8 * sc2);
    }
}

TEST_CASE("reconstruct: corrected closed form for gamma agrees with the energy route")
{
    const RealCaseContext& c = ref_ctx();
    std::mt19937_64 rng(46);
    WindowSampler ws(c);
    for (int n = 0; n < 200; ++n) {
        const auto [s1, s2] = ws(rng);
        const PValues pv = p_values(c, s1, s2);
        const ReconstructedState rs = reconstruct(c, pv);
        const cd cf = gamma_closed_form(c, pv);
        CHECK(std::abs(cf - 2.0 * c.c0 * rs.state.gamma) < 1e-9 * std::max(1.0, std::abs(cf)));
    }
}

TEST_CASE("reconstruct: continuity as s1 approaches e1")
{
    const RealCaseContext& c = ref_ctx();
    const double s2 = c.a[2] - 0.8;
    const PValues at = p_values(c, c.a[0], s2);
    const cd D = c.L * at.p(1) + c.M * at.p(2) + c.N * at.p(3);
    CHECK(std::abs(D) > 1e-3);
    const MotionState x0 = reconstruct(c, c.a[0], s2).state;
    const MotionState x1 = reconstruct(c, c.a[0] + 1e-8, s2).state;
    CHECK((x0.vec() - x1.vec()).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("formula status table lists the integral-based component")
{
    const auto t = reconstruction_formulas();
    REQUIRE(t.size() == 6);
    int fallback = 0;
    for (const auto& row : t)
        if (row.status == FormulaStatus::IntegralFallback) {
            ++fallback;
            CHECK(row.component == "gamma");
        }
    CHECK(fallback == 1);
}

TEST_CASE("match_signs recovers a trajectory sample")
{
    const Trajectory& tr = reference_trajectory();
    const RealCaseContext& c = ref_ctx();
    const MotionState& target = tr.states[1234];
    const QuarticData qd = quartic_data(c.c0, target);
    const SeparationVariables sv = s_from_x(qd, to_complex_coords(target, c.c0));
    FactorSigns fs;
    CHECK(match_signs(c, sv.s1.real(), sv.s2.real(), target, fs) < 1e-8);
}

TEST_CASE("round trip along the reference trajectory")
{
    const RoundTripReport rt = round_trip(ref_c0, reference_trajectory());
    CHECK(rt.n_used > 19000);
    CHECK(rt.fraction_ok() >= 0.99);
    CHECK(rt.imag_residue < 1e-9);
}

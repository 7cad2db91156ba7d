#include "doctest.h"

#include "kovtop/error.hpp"
#include "kovtop/euler_poisson.hpp"

#include <random>

using namespace kovtop;

namespace {

MotionState random_state(std::mt19937_64& rng)
{
    std::normal_distribution<double> nd;
    MotionState s{nd(rng), nd(rng), nd(rng), nd(rng), nd(rng), nd(rng)};
    const double n = s.vertical().norm();
    s.gamma /= n;
    s.gamma1 /= n;
    s.gamma2 /= n;
    return s;
}

}  // namespace

TEST_CASE("rhs_general: permanent rotation of a free body")
{
    BodyParameters bp{3.0, 2.0, 1.0, 1.0, 0.0, 0.0, 0.0};
    const MotionState s{0, 0, 2, 0, 0, 1};
    CHECK(rhs_general(bp, s).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rhs_general: body at rest with vertical third axis")
{
    const auto bp = BodyParameters::kovalevskaya(1.0);
    const MotionState s{0, 0, 0, 0, 0, 1};
    StateVec d = rhs_general(bp, s);
    CHECK(d(1) == doctest::Approx(-0.5));
    d(1) = 0.0;
    CHECK(d.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rhs_kovalevskaya: rest states")
{
    CHECK(rhs_kovalevskaya(1.3, MotionState{0, 0, 0, 1, 0, 0}).cwiseAbs().maxCoeff() == 0.0);
    const StateVec d = rhs_kovalevskaya(1.3, MotionState{0, 0, 0, 0, 1, 0});
    CHECK(d(2) == doctest::Approx(1.3));
    CHECK(std::abs(d(0)) + std::abs(d(1)) + d.tail<3>().cwiseAbs().sum() == 0.0);
}

TEST_CASE("rhs_general agrees with the reduced equations on Kovalevskaya parameters")
{
    std::mt19937_64 rng(11);
    const double c0 = 0.7;
    const auto bp = BodyParameters::kovalevskaya(c0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const MotionState s = random_state(rng);
        worst = std::max(worst, (rhs_general(bp, s) - rhs_kovalevskaya(c0, s)).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-14);
}

TEST_CASE("d|gamma|^2/dt vanishes from the right-hand side")
{
    std::mt19937_64 rng(12);
    BodyParameters bp{3.0, 2.5, 1.2, 1.0, 0.3, -0.4, 0.8};
    for (int i = 0; i < 1000; ++i) {
        const MotionState s = random_state(rng);
        const StateVec d = rhs_general(bp, s);
        CHECK(std::abs(s.vertical().dot(d.segment<3>(3))) < 1e-13);
    }
}

TEST_CASE("first_integrals: substitution values")
{
    const double c0 = 1.5;
    IntegralSet a = first_integrals(c0, MotionState{0, 0, 0, 1, 0, 0});
    CHECK(a.l1 == doctest::Approx(-c0 / 3.0));
    CHECK(a.l == 0.0);
    CHECK(a.k_sq == doctest::Approx(c0 * c0));
    CHECK(a.norm == 1.0);
    IntegralSet b = first_integrals(c0, MotionState{0, 0, 0, 0, 0, 1});
    CHECK(b.l1 == 0.0);
    CHECK(b.l == 0.0);
    CHECK(b.k_sq == 0.0);
    CHECK(b.norm == 1.0);
}

TEST_CASE("first_integrals: k^2 imaginary residue is negligible")
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        const IntegralSet is = first_integrals(0.9, random_state(rng));
        CHECK(is.k_sq_imag <= 1e-12 * std::max(1.0, std::abs(is.k_sq)));
    }
}

TEST_CASE("integrate: permanent rotation stays put")
{
    BodyParameters bp{3.0, 2.0, 1.0, 1.0, 0.0, 0.0, 0.0};
    const MotionState s{0, 0, 2, 0, 0, 1};
    IntegrateOptions opt;
    opt.tol = 1e-12;
    const Trajectory tr = integrate(bp, s, 10.0, opt);
    CHECK((tr.states.back().vec() - s.vec()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("integrate: forward then backward recovers the initial state")
{
    std::mt19937_64 rng(5);
    const double c0 = 1.0;
    const MotionState s0 = random_state(rng);
    IntegrateOptions opt;
    opt.tol = 1e-11;
    const Trajectory fw = integrate_kovalevskaya(c0, s0, 5.0, opt);
    const Trajectory bw = integrate_kovalevskaya(c0, fw.states.back(), -5.0, opt);
    CHECK(bw.t.back() == -5.0);
    CHECK((bw.states.back().vec() - s0.vec()).cwiseAbs().maxCoeff() < 10.0 * opt.tol * 100.0);
}

TEST_CASE("integrate: time reversal symmetry of the equations")
{
    std::mt19937_64 rng(6);
    BodyParameters bp{3.0, 2.5, 1.2, 1.0, 0.3, -0.4, 0.8};
    const MotionState s0 = random_state(rng);
    IntegrateOptions opt;
    opt.tol = 1e-12;
    MotionState s = integrate(bp, s0, 3.0, opt).states.back();
    s.p = -s.p;
    s.q = -s.q;
    s.r = -s.r;
    MotionState back = integrate(bp, s, 3.0, opt).states.back();
    back.p = -back.p;
    back.q = -back.q;
    back.r = -back.r;
    CHECK((back.vec() - s0.vec()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("integrate: sample times and central differences match the right-hand side")
{
    std::mt19937_64 rng(8);
    const double c0 = 1.0;
    const MotionState s0 = random_state(rng);
    IntegrateOptions opt;
    opt.tol = 1e-13;
    opt.sample_step = 1e-3;
    const Trajectory tr = integrate_kovalevskaya(c0, s0, 1.0, opt);
    REQUIRE(tr.size() == 1001);
    for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr.t[i] > tr.t[i - 1]);
    const double h = 1e-3;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < tr.size(); i += 50) {
        const StateVec fd = (tr.states[i + 1].vec() - tr.states[i - 1].vec()) / (2.0 * h);
        worst = std::max(worst, (fd - rhs_kovalevskaya(c0, tr.states[i])).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-4);  // O(h^2) with unit-size derivatives
}

TEST_CASE("integrate: rejects tolerances outside the supported range")
{
    IntegrateOptions opt;
    opt.tol = 1e-2;
    CHECK_THROWS_AS(integrate_kovalevskaya(1.0, MotionState{0, 0, 1, 1, 0, 0}, 1.0, opt), Error);
}

TEST_CASE("conservation over a long run and per-step drift")
{
    std::mt19937_64 rng(21);
    const MotionState s0 = random_state(rng);
    IntegrateOptions opt;
    opt.tol = 1e-12;
    opt.sample_step = 0.5;
    const Trajectory tr = integrate_kovalevskaya(1.0, s0, 100.0, opt);
    const Eigen::Vector4d drift = integral_drift(1.0, tr);
    CHECK(drift.maxCoeff() < 1e-8);
    // drift per unit time bounded by 100 tol
    CHECK(drift.maxCoeff() / 100.0 < 100.0 * opt.tol);
}

TEST_CASE("renormalization keeps |gamma| at one")
{
    std::mt19937_64 rng(22);
    IntegrateOptions opt;
    opt.tol = 1e-6;
    opt.renormalize = true;
    opt.exact_sampling = true;  // interpolated samples are not projected
    opt.sample_step = 1.0;
    const Trajectory tr = integrate_kovalevskaya(1.0, random_state(rng), 50.0, opt);
    for (const auto& s : tr.states) CHECK(std::abs(s.vertical().norm() - 1.0) < 1e-14);
}

TEST_CASE("orientation stays orthogonal with unit determinant")
{
    std::mt19937_64 rng(23);
    IntegrateOptions opt;
    opt.tol = 1e-12;
    opt.orientation = true;
    opt.sample_step = 1.0;
    const Trajectory tr = integrate_kovalevskaya(1.0, random_state(rng), 100.0, opt);
    REQUIRE(tr.orientation.size() == tr.size());
    for (const auto& m : tr.orientation) {
        CHECK((m * m.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-8);
        CHECK(std::abs(m.determinant() - 1.0) < 1e-8);
    }
}

TEST_CASE("cosine_rhs: pure spin about the third axis")
{
    const double w = 0.8;
    const MotionState s{0, 0, w, 0, 0, 1};
    const Eigen::Matrix3d d = cosine_rhs(s, Eigen::Matrix3d::Identity());
    // rows rotate in the first two components, the derivative of M M^T is zero
    CHECK(d(0, 1) == doctest::Approx(-w));
    CHECK(d(1, 0) == doctest::Approx(w));
    const Eigen::Matrix3d ortho = d + d.transpose();
    CHECK(ortho.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cosine_rhs: orthogonality derivative vanishes for random frames")
{
    std::mt19937_64 rng(24);
    for (int i = 0; i < 100; ++i) {
        const MotionState s = random_state(rng);
        const OrientationState m = orientation_from_vertical(s);
        const Eigen::Matrix3d d = cosine_rhs(s, m);
        CHECK((d * m.transpose() + m * d.transpose()).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("state_from_invariants: round trip")
{
    std::mt19937_64 rng(31);
    const double c0 = 0.8;
    for (int i = 0; i < 20; ++i) {
        const IntegralSet target = first_integrals(c0, random_state(rng));
        const MotionState s = state_from_invariants(c0, target, 7 + i);
        const IntegralSet got = first_integrals(c0, s);
        CHECK(std::abs(got.l1 - target.l1) < 1e-10);
        CHECK(std::abs(got.l - target.l) < 1e-10);
        CHECK(std::abs(got.k_sq - target.k_sq) < 1e-10);
        CHECK(std::abs(got.norm - 1.0) < 1e-10);
    }
}

TEST_CASE("state_from_invariants: equilibrium target and determinism")
{
    const double c0 = 1.0;
    IntegralSet t{-c0 / 3.0, 0.0, c0 * c0, 1.0};
    const MotionState a = state_from_invariants(c0, t, 1);
    const MotionState b = state_from_invariants(c0, t, 1);
    CHECK(a.vec() == b.vec());
    const IntegralSet got = first_integrals(c0, a);
    CHECK(std::abs(got.l1 - t.l1) < 1e-10);
    // the lowest energy level is the hanging equilibrium
    CHECK(std::abs(a.gamma - 1.0) < 1e-5);
}

TEST_CASE("state_from_invariants: negative k^2 is infeasible")
{
    IntegralSet t{0.5, 0.1, -1.0, 1.0};
    CHECK_THROWS_AS(state_from_invariants(1.0, t, 3, 50), Error);
}

TEST_CASE("Kovalevskaya predicate and weight constant")
{
    BodyParameters bp{4.0, 4.0, 2.0, 3.0, 0.5, 0.0, 0.0};
    CHECK(bp.is_kovalevskaya());
    CHECK(bp.c0() == doctest::Approx(0.75));
    bp.z0 = 0.1;
    CHECK_FALSE(bp.is_kovalevskaya());
    BodyParameters thin{1.0, 1.0, 5.0, 1.0, 0.0, 0.0, 0.0};
    CHECK_FALSE(thin.triangle_ok());
}

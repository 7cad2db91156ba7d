#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace kovtop {

struct BodyParameters {
    double A = 2.0;
    double B = 2.0;
    double C = 1.0;
    double Mg = 1.0;
    double x0 = 1.0;
    double y0 = 0.0;
    double z0 = 0.0;

    double A1() const { return B - C; }
    double B1() const { return C - A; }
    double C1() const { return A - B; }

    // Weight constant of the reduced equations: moments scaled so that C = 1 and the
    // center of gravity rotated onto the first axis.
    double c0() const;

    bool valid() const;
    bool triangle_ok() const;
    bool is_kovalevskaya(double rel_tol = 1e-12) const;

    static BodyParameters kovalevskaya(double c0);
};

template <typename Scalar>
struct MotionStateT {
    Scalar p{}, q{}, r{}, gamma{}, gamma1{}, gamma2{};

    Eigen::Matrix<Scalar, 6, 1> vec() const
    {
        Eigen::Matrix<Scalar, 6, 1> v;
        v << p, q, r, gamma, gamma1, gamma2;
        return v;
    }
    static MotionStateT from_vec(const Eigen::Matrix<Scalar, 6, 1>& v)
    {
        return {v(0), v(1), v(2), v(3), v(4), v(5)};
    }
    Eigen::Matrix<Scalar, 3, 1> omega() const { return {p, q, r}; }
    Eigen::Matrix<Scalar, 3, 1> vertical() const { return {gamma, gamma1, gamma2}; }
};

using MotionState = MotionStateT<double>;
using StateVec = Eigen::Matrix<double, 6, 1>;

template <typename Scalar>
struct IntegralSetT {
    Scalar l1{}, l{}, k_sq{}, norm{};
    double k_sq_imag = 0.0;  ///< |Im ξ1ξ2|, a health metric
};

using IntegralSet = IntegralSetT<double>;

/// Rows are the direction-cosine triples (α), (β), (γ).
using OrientationState = Eigen::Matrix3d;

struct Trajectory {
    std::vector<double> t;
    std::vector<MotionState> states;
    std::vector<OrientationState> orientation;  ///< empty unless requested
    long accepted = 0;
    long rejected = 0;
    double tol = 0.0;

    std::size_t size() const { return t.size(); }
};

template <typename Scalar>
Eigen::Matrix<Scalar, 6, 1> rhs_general(const BodyParameters& bp, const MotionStateT<Scalar>& s)
{
    const double A1 = bp.A1(), B1 = bp.B1(), C1 = bp.C1();
    const double gx = bp.Mg * bp.x0, gy = bp.Mg * bp.y0, gz = bp.Mg * bp.z0;
    Eigen::Matrix<Scalar, 6, 1> d;
    d(0) = (A1 * s.q * s.r + gy * s.gamma2 - gz * s.gamma1) / bp.A;
    d(1) = (B1 * s.r * s.p + gz * s.gamma - gx * s.gamma2) / bp.B;
    d(2) = (C1 * s.p * s.q + gx * s.gamma1 - gy * s.gamma) / bp.C;
    d(3) = s.r * s.gamma1 - s.q * s.gamma2;
    d(4) = s.p * s.gamma2 - s.r * s.gamma;
    d(5) = s.q * s.gamma - s.p * s.gamma1;
    return d;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 6, 1> rhs_kovalevskaya(double c0, const MotionStateT<Scalar>& s)
{
    Eigen::Matrix<Scalar, 6, 1> d;
    d(0) = s.q * s.r / 2.0;
    d(1) = (-s.p * s.r - c0 * s.gamma2) / 2.0;
    d(2) = c0 * s.gamma1;
    d(3) = s.r * s.gamma1 - s.q * s.gamma2;
    d(4) = s.p * s.gamma2 - s.r * s.gamma;
    d(5) = s.q * s.gamma - s.p * s.gamma1;
    return d;
}

template <typename Scalar>
IntegralSetT<Scalar> first_integrals(double c0, const MotionStateT<Scalar>& s)
{
    using std::complex;
    using C = complex<double>;
    IntegralSetT<Scalar> out;
    out.l1 = (2.0 * (s.p * s.p + s.q * s.q) + s.r * s.r - 2.0 * c0 * s.gamma) / 6.0;
    out.l = (2.0 * (s.p * s.gamma + s.q * s.gamma1) + s.r * s.gamma2) / 2.0;
    out.norm = s.gamma * s.gamma + s.gamma1 * s.gamma1 + s.gamma2 * s.gamma2;
    if constexpr (std::is_same_v<Scalar, double>) {
        const C x1(s.p, s.q), x2(s.p, -s.q);
        const C xi1 = x1 * x1 + c0 * C(s.gamma, s.gamma1);
        const C xi2 = x2 * x2 + c0 * C(s.gamma, -s.gamma1);
        const C k2 = xi1 * xi2;
        out.k_sq = k2.real();
        out.k_sq_imag = std::abs(k2.imag());
    } else {
        const Scalar i = Scalar(0.0, 1.0);
        const Scalar x1 = s.p + i * s.q, x2 = s.p - i * s.q;
        const Scalar xi1 = x1 * x1 + c0 * (s.gamma + i * s.gamma1);
        const Scalar xi2 = x2 * x2 + c0 * (s.gamma - i * s.gamma1);
        out.k_sq = xi1 * xi2;
    }
    return out;
}

/// Time derivative of the direction-cosine matrix: each row a obeys da/dt = a × ω.
Eigen::Matrix3d cosine_rhs(const MotionState& s, const OrientationState& m);

/// Completes the vertical row into a right-handed orthonormal frame.
OrientationState orientation_from_vertical(const MotionState& s);

struct IntegrateOptions {
    double tol = 1e-10;
    double sample_step = 0.0;  ///< 0 keeps only the end points
    bool exact_sampling = false;  ///< land steps on sample times instead of interpolating
    bool renormalize = false;
    bool orientation = false;
    OrientationState orient0 = OrientationState::Zero();  ///< zero means "complete from γ"
    long max_steps = 100000000;
};

/// DOPRI5(4) with PI step control. A negative t_end integrates backwards in time.
Trajectory integrate(const BodyParameters& bp, const MotionState& s0, double t_end,
                     const IntegrateOptions& opt = {});

/// Same integrator on the reduced equations with weight constant c0.
Trajectory integrate_kovalevskaya(double c0, const MotionState& s0, double t_end,
                                  const IntegrateOptions& opt = {});

/// Relative drift of each integral along a trajectory (l1, l, k², norm).
Eigen::Vector4d integral_drift(double c0, const Trajectory& tr);

/// Seeded damped Newton search for a real state with the given l1, l, k² and unit γ.
MotionState state_from_invariants(double c0, const IntegralSet& target, std::uint64_t seed,
                                  int restarts = 400);

}  // namespace kovtop

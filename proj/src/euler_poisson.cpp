#include "kovtop/euler_poisson.hpp"

#include "kovtop/dopri5.hpp"
#include "kovtop/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace kovtop {

namespace {

bool rel_eq(double a, double b, double tol)
{
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

std::vector<double> sample_times(double t_end, double step)
{
    std::vector<double> ts;
    const double dir = t_end >= 0.0 ? 1.0 : -1.0;
    if (step <= 0.0) {
        ts = {0.0, t_end};
        return ts;
    }
    const long n = std::lround(std::floor(std::abs(t_end) / step + 1e-9));
    ts.reserve(n + 2);
    for (long i = 0; i <= n; ++i) ts.push_back(dir * step * double(i));
    if (std::abs(ts.back() - t_end) > 1e-12 * std::max(1.0, std::abs(t_end))) ts.push_back(t_end);
    return ts;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& w)
{
    Eigen::Matrix3d m;
    m << 0.0, -w(2), w(1), w(2), 0.0, -w(0), -w(1), w(0), 0.0;
    return m;
}

template <typename Rhs>
Trajectory run(Rhs&& rhs6, const MotionState& s0, double t_end, const IntegrateOptions& opt)
{
    if (!(opt.tol >= 1e-14 && opt.tol <= 1e-3))
        throw Error(Errc::ValueError, "tol must lie in [1e-14, 1e-3]");

    const bool orient = opt.orientation;
    const Eigen::Index n = orient ? 12 : 6;
    Eigen::VectorXd y0(n);
    y0.head<6>() = s0.vec();
    if (orient) {
        const OrientationState m0 =
            opt.orient0.isZero() ? orientation_from_vertical(s0) : opt.orient0;
        y0.segment<3>(6) = m0.row(0).transpose();
        y0.segment<3>(9) = m0.row(1).transpose();
    }

    OdeRhs f = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const MotionState s = MotionState::from_vec(y.head<6>());
        dy.head<6>() = rhs6(s);
        if (orient) {
            const Eigen::Vector3d w = s.omega();
            dy.segment<3>(6) = y.segment<3>(6).cross(w);
            dy.segment<3>(9) = y.segment<3>(9).cross(w);
        }
    };
    StepHook hook;
    if (opt.renormalize)
        hook = [](Eigen::VectorXd& y) { y.segment<3>(3).normalize(); };

    Dopri5Options dopt;
    dopt.rtol = opt.tol;
    dopt.atol = opt.tol;
    dopt.exact_sampling = opt.exact_sampling;
    dopt.max_steps = opt.max_steps;
    const Dopri5Result r = dopri5(f, y0, 0.0, t_end, sample_times(t_end, opt.sample_step), dopt, hook);

    Trajectory tr;
    tr.t = r.t;
    tr.accepted = r.accepted;
    tr.rejected = r.rejected;
    tr.tol = opt.tol;
    tr.states.reserve(r.y.size());
    for (const auto& y : r.y) {
        tr.states.push_back(MotionState::from_vec(y.head<6>()));
        if (orient) {
            OrientationState m;
            m.row(0) = y.segment<3>(6).transpose();
            m.row(1) = y.segment<3>(9).transpose();
            m.row(2) = y.segment<3>(3).transpose();
            tr.orientation.push_back(m);
        }
    }
    return tr;
}

}  // namespace

double BodyParameters::c0() const
{
    return Mg * std::hypot(x0, y0) / C;
}

bool BodyParameters::valid() const
{
    return A > 0.0 && B > 0.0 && C > 0.0 && std::isfinite(A + B + C + Mg + x0 + y0 + z0);
}

bool BodyParameters::triangle_ok() const
{
    return A <= B + C && B <= C + A && C <= A + B;
}

bool BodyParameters::is_kovalevskaya(double rel_tol) const
{
    const double scale = std::max({std::abs(x0), std::abs(y0), std::abs(z0), 1e-300});
    return rel_eq(A, B, rel_tol) && rel_eq(A, 2.0 * C, rel_tol) && std::abs(z0) <= rel_tol * scale;
}

BodyParameters BodyParameters::kovalevskaya(double c0)
{
    BodyParameters bp;
    bp.A = 2.0;
    bp.B = 2.0;
    bp.C = 1.0;
    bp.Mg = 1.0;
    bp.x0 = c0;
    return bp;
}

Eigen::Matrix3d cosine_rhs(const MotionState& s, const OrientationState& m)
{
    Eigen::Matrix3d d = m * skew(s.omega());
    const StateVec g = rhs_kovalevskaya(1.0, s);  // the γ rows do not involve c0
    d.row(2) = g.segment<3>(3).transpose();
    return d;
}

OrientationState orientation_from_vertical(const MotionState& s)
{
    const Eigen::Vector3d g = s.vertical().normalized();
    Eigen::Vector3d h = std::abs(g(0)) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    const Eigen::Vector3d a = (h - h.dot(g) * g).normalized();
    const Eigen::Vector3d b = g.cross(a);
    OrientationState m;
    m.row(0) = a.transpose();
    m.row(1) = b.transpose();
    m.row(2) = s.vertical().transpose();
    return m;
}

Trajectory integrate(const BodyParameters& bp, const MotionState& s0, double t_end,
                     const IntegrateOptions& opt)
{
    if (!bp.valid()) throw Error(Errc::ValueError, "moments must be positive and finite");
    return run([&](const MotionState& s) { return rhs_general(bp, s); }, s0, t_end, opt);
}

Trajectory integrate_kovalevskaya(double c0, const MotionState& s0, double t_end,
                                  const IntegrateOptions& opt)
{
    return run([c0](const MotionState& s) { return rhs_kovalevskaya(c0, s); }, s0, t_end, opt);
}

Eigen::Vector4d integral_drift(double c0, const Trajectory& tr)
{
    Eigen::Vector4d drift = Eigen::Vector4d::Zero();
    if (tr.states.empty()) return drift;
    const IntegralSet i0 = first_integrals(c0, tr.states.front());
    const Eigen::Vector4d ref(i0.l1, i0.l, i0.k_sq, i0.norm);
    for (const auto& s : tr.states) {
        const IntegralSet is = first_integrals(c0, s);
        const Eigen::Vector4d v(is.l1, is.l, is.k_sq, is.norm);
        for (int j = 0; j < 4; ++j)
            drift(j) = std::max(drift(j), std::abs(v(j) - ref(j)) / std::max(std::abs(ref(j)), 1.0));
    }
    return drift;
}

MotionState state_from_invariants(double c0, const IntegralSet& target, std::uint64_t seed,
                                  int restarts)
{
    using Vec6 = Eigen::Matrix<double, 6, 1>;
    auto residual = [&](const Vec6& x) {
        const IntegralSet is = first_integrals(c0, MotionState::from_vec(x));
        return Eigen::Vector4d(is.l1 - target.l1, is.l - target.l, is.k_sq - target.k_sq,
                               is.norm - 1.0);
    };
    auto jacobian = [&](const Vec6& x) {
        const double p = x(0), q = x(1), r = x(2), g = x(3), g1 = x(4), g2 = x(5);
        const double X = p * p - q * q + c0 * g, Y = 2.0 * p * q + c0 * g1;
        Eigen::Matrix<double, 4, 6> J;
        J << 4.0 * p / 6.0, 4.0 * q / 6.0, 2.0 * r / 6.0, -2.0 * c0 / 6.0, 0.0, 0.0,
            g, g1, g2 / 2.0, p, q, r / 2.0,
            4.0 * (X * p + Y * q), 4.0 * (Y * p - X * q), 0.0, 2.0 * c0 * X, 2.0 * c0 * Y, 0.0,
            0.0, 0.0, 0.0, 2.0 * g, 2.0 * g1, 2.0 * g2;
        return J;
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const double scale = std::max({1.0, std::sqrt(std::abs(target.l1) * 3.0), std::abs(target.l)});
    for (int attempt = 0; attempt < restarts; ++attempt) {
        Vec6 x;
        for (int i = 0; i < 3; ++i) x(i) = scale * nd(rng);
        for (int i = 3; i < 6; ++i) x(i) = nd(rng);
        x.segment<3>(3).normalize();
        Eigen::Vector4d F = residual(x);
        for (int it = 0; it < 100; ++it) {
            const double fn = F.norm();
            if (F.cwiseAbs().maxCoeff() < 1e-13) break;
            const Eigen::Matrix<double, 4, 6> J = jacobian(x);
            // minimum-norm Newton step for the underdetermined system
            const Eigen::Matrix4d JJt = J * J.transpose();
            const Vec6 dx = -J.transpose() * JJt.completeOrthogonalDecomposition().solve(F);
            double lam = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 30; ++ls, lam *= 0.5) {
                const Vec6 xn = x + lam * dx;
                const Eigen::Vector4d Fn = residual(xn);
                if (Fn.norm() < (1.0 - 1e-4 * lam) * fn) {
                    x = xn;
                    F = Fn;
                    moved = true;
                    break;
                }
            }
            if (!moved) break;
        }
        if (F.cwiseAbs().maxCoeff() < 1e-12) return MotionState::from_vec(x);
    }
    throw Error(Errc::NotFound, "no real state realizes the requested invariants");
}

}  // namespace kovtop

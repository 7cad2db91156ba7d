#pragma once

#include "kovtop/euler_poisson.hpp"

#include <array>
#include <complex>
#include <optional>
#include <vector>

namespace kovtop {

using cd = std::complex<double>;

struct ComplexCoordinates {
    cd x1, x2;  ///< p ± qi
    cd y1, y2;  ///< γ ± γ'i
    cd xi1, xi2;  ///< x^2 + c0 y
};

ComplexCoordinates to_complex_coords(const MotionState& s, double c0);

/// Constants of the quartic R(x) = -x^4 + 6 l1 x^2 + 4 l c0 x + c0^2 - k^2.
struct QuarticData {
    double l1 = 0, l = 0, c0 = 0, k = 0;

    double k0() const { return c0 * c0 - k * k; }
    double l0() const { return c0 * l; }

    cd R(cd x) const;
    cd R12(cd x1, cd x2) const;  ///< R(x1 x2)
    cd R1(cd x1, cd x2) const;  ///< R1(x1 x2)
    cd frakA(cd x1, cd x2) const;
    cd frakB(cd x1, cd x2) const;
    cd frakC(cd x1, cd x2) const;
    double scale(cd x1, cd x2) const;  ///< magnitude used for relative residuals
};

/// Quartic constants from a state: l1 and l from the integrals, k = sqrt(k^2).
QuarticData quartic_data(double c0, const MotionState& s);

cd quartic_identity_residual(const QuarticData& qd, cd x1, cd x2);

enum class WRoute { Eq7, FourFactor, FromS };

cd w_squared(const QuarticData& qd, cd x1, cd x2, WRoute route);

struct SeparationVariables {
    cd s1, s2;
    cd sqrtR1, sqrtR2;  ///< branches of √R(x1), √R(x2) used
    int branch1 = 1, branch2 = 1;  ///< sign relative to the principal root
    double k1 = 0, k2 = 0;
};

/// Roots of (x1-x2)^2 σ^2 - R(x1x2) σ - R1/4 = 0 shifted by l1/2; s2 - s1 = √R(x1)√R(x2)/(x1-x2)^2.
SeparationVariables s_from_x(const QuarticData& qd, const ComplexCoordinates& cc,
                             const std::optional<SeparationVariables>& prev = std::nullopt);

/// ξ1, ξ2 rebuilt from (s1, s2); `cross` picks the sign of the mixed product.
std::array<cd, 2> xi_from_s(const QuarticData& qd, const ComplexCoordinates& cc,
                            const SeparationVariables& sv, int cross);

struct QuinticData {
    double g2 = 0, g3 = 0;
    std::array<cd, 3> e{};  ///< cubic roots, e1 > e2 > e3 when real
    bool real_roots = false;
    double k1 = 0, k2 = 0;
    bool degenerate = false;

    /// (e1, e2, e3, k1, k2) as real numbers; requires real_roots.
    std::array<double, 5> a() const;
    cd R1(cd s) const;  ///< -4 (s-e1)(s-e2)(s-e3)(s-k1)(s-k2)
    cd S(cd s) const;  ///< 4 s^3 - g2 s - g3
};

QuinticData quintic_from_constants(double l1, double l, double c0, double k,
                                   bool allow_degenerate = false);

/// √R1(s) continued along a trajectory through per-factor roots.
struct BranchTrack {
    std::vector<double> t;
    std::vector<double> s1, s2;
    std::vector<std::array<cd, 5>> A;  ///< √(s1 - a_k), continued
    std::vector<std::array<cd, 5>> Bd;  ///< √(s2 - a_k)·(x1 - x2), continued
    std::vector<cd> d;  ///< x1 - x2
    std::vector<bool> excluded;  ///< near a branch point
    double imag_residue = 0.0;  ///< largest |Im s| seen
    std::size_t jumps = 0;
};

BranchTrack track_branches(const QuarticData& qd, const QuinticData& qn, const Trajectory& tr);

struct QuadratureReport {
    std::vector<double> t;
    std::vector<double> res_a;  ///< ds1/W1 + ds2/W2
    std::vector<double> res_b;  ///< s1 ds1/W1 + s2 ds2/W2 - σ dt
    std::vector<bool> excluded;
    int sheet = 0;  ///< relative sign of √R1(s2) against √R1(s1), fixed at the first usable sample
    int sigma = 0;  ///< orientation of dt fixed at the first usable sample
    std::size_t n_used = 0;
    std::size_t n_excluded = 0;
    double imag_residue = 0.0;
};

/// Quadrature relations checked by five-point differences on a uniformly sampled trajectory.
QuadratureReport quadrature_residuals(const QuarticData& qd, const Trajectory& tr);

/// |−4 (dx1/dt)^2 − R(x1) − (x1−x2)^2 ξ1| relative, with dx1/dt from the equations of motion.
double velocity_relation_residual(const QuarticData& qd, const MotionState& s);

}  // namespace kovtop

#pragma once

#include <Eigen/Dense>
#include <complex>

namespace kovtop {

/// Quartic A x^4 + 4B x^3 + 6C x^2 + 4B' x + A' with its invariants.
struct QuarticInvariants {
    double A = 0, B = 0, C = 0, Bp = 0, Ap = 0;
    double g2 = 0, g3 = 0;
    double D = 0;  ///< B^2 - AC
    double E = 0;  ///< A^2 B' - 3ABC + 2B^3
    double G = 0;  ///< g2^3 - 27 g3^2
};

enum class RootClass { FourReal, FourImaginary, TwoRealTwoImaginary, Degenerate };

const char* to_string(RootClass c) noexcept;

struct ThresholdPair {
    std::complex<double> l0p_sq;
    std::complex<double> l0pp_sq;
};

/// Invariants of R(x) = -x^4 + 6 l1 x^2 + 4 l0 x + k0 (A=-1, B=0, C=l1, B'=l0, A'=k0).
QuarticInvariants quartic_invariants(double l1, double k0, double l0);

/// Residual of 4(D/A)^3 - g2 (D/A) - g3 - E^2/A^3, relative to the term sizes.
double quartic_relation_residual(const QuarticInvariants& qi);

RootClass classify(double l1, double k0, double l0, double margin = 1e-9);

ThresholdPair thresholds(double l1, double k0);

/// Companion-matrix roots of R, Newton polished.
Eigen::Vector4cd numeric_roots(double l1, double k0, double l0);

/// Number of roots whose imaginary part is negligible.
int real_root_count(const Eigen::Vector4cd& roots, double tol = 1e-7);

}  // namespace kovtop

#include "kovtop/quartic_class.hpp"

#include "kovtop/poly.hpp"

#include <algorithm>
#include <cmath>

namespace kovtop {

const char* to_string(RootClass c) noexcept
{
    switch (c) {
    case RootClass::FourReal: return "FourReal";
    case RootClass::FourImaginary: return "FourImaginary";
    case RootClass::TwoRealTwoImaginary: return "TwoRealTwoImaginary";
    case RootClass::Degenerate: return "Degenerate";
    }
    return "?";
}

QuarticInvariants quartic_invariants(double l1, double k0, double l0)
{
    QuarticInvariants q;
    q.A = -1.0;
    q.B = 0.0;
    q.C = l1;
    q.Bp = l0;
    q.Ap = k0;
    q.g2 = q.A * q.Ap - 4.0 * q.B * q.Bp + 3.0 * q.C * q.C;
    q.g3 = q.A * q.C * q.Ap + 2.0 * q.B * q.C * q.Bp - q.A * q.Bp * q.Bp - q.Ap * q.B * q.B -
           q.C * q.C * q.C;
    q.D = q.B * q.B - q.A * q.C;
    q.E = q.A * q.A * q.Bp - 3.0 * q.A * q.B * q.C + 2.0 * q.B * q.B * q.B;
    q.G = q.g2 * q.g2 * q.g2 - 27.0 * q.g3 * q.g3;
    return q;
}

double quartic_relation_residual(const QuarticInvariants& q)
{
    const double x = q.D / q.A;
    const double lhs = 4.0 * x * x * x - q.g2 * x - q.g3;
    const double rhs = q.E * q.E / (q.A * q.A * q.A);
    const double scale = std::max({1.0, std::abs(4.0 * x * x * x), std::abs(q.g2 * x), std::abs(q.g3),
                                   std::abs(rhs)});
    return std::abs(lhs - rhs) / scale;
}

RootClass classify(double l1, double k0, double l0, double margin)
{
    const QuarticInvariants q = quartic_invariants(l1, k0, l0);
    const double scale = std::max({1.0, std::abs(q.g2 * q.g2 * q.g2), 27.0 * q.g3 * q.g3});
    if (std::abs(q.G) < margin * scale) return RootClass::Degenerate;
    if (q.G < 0.0) return RootClass::TwoRealTwoImaginary;
    const double h = 12.0 * q.D * q.D - q.A * q.A * q.g2;
    if (q.D > 0.0 && h > 0.0) return RootClass::FourReal;
    return RootClass::FourImaginary;
}

ThresholdPair thresholds(double l1, double k0)
{
    using cd = std::complex<double>;
    const cd rad = std::pow(cd((-k0 + 3.0 * l1 * l1) / 3.0, 0.0), 1.5);
    const double base = l1 * (k0 + l1 * l1);
    return {base + rad, base - rad};
}

Eigen::Vector4cd numeric_roots(double l1, double k0, double l0)
{
    Eigen::VectorXcd c(5);
    c << k0, 4.0 * l0, 6.0 * l1, 0.0, -1.0;
    const Eigen::VectorXcd z = poly::roots(c, 1);
    return z;
}

int real_root_count(const Eigen::Vector4cd& roots, double tol)
{
    int n = 0;
    for (int i = 0; i < 4; ++i)
        if (std::abs(roots(i).imag()) <= tol * std::max(1.0, std::abs(roots(i)))) ++n;
    return n;
}

}  // namespace kovtop

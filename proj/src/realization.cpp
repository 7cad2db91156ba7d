#include "kovtop/realization.hpp"

#include "kovtop/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kovtop {

MountSpec design_mount(const InertiaTriple& t, double rel_tol)
{
    if (!(t.A1 > 0.0 && t.B1 > 0.0 && t.C1 > 0.0 && t.M > 0.0))
        throw Error(Errc::ValueError, "moments and mass must be positive");
    const double need = 2.0 * (t.B1 - t.C1);
    if (std::abs(t.A1 - need) > rel_tol * std::max(std::abs(t.A1), std::abs(need))) {
        std::ostringstream os;
        os << "A1 = " << t.A1 << " but 2(B1 - C1) = " << need;
        throw Error(Errc::ConditionViolated, os.str());
    }
    if (t.B1 <= 2.0 * t.C1) throw Error(Errc::NotRealizable, "B1 <= 2 C1 leaves no real offset");
    MountSpec s;
    s.a = std::sqrt((t.A1 - t.B1) / t.M);
    s.A = t.A1;
    s.B = t.B1 + t.M * s.a * s.a;
    s.C = t.C1 + t.M * s.a * s.a;
    return s;
}

MountReport verify_mount(const InertiaTriple& t, const MountSpec& s)
{
    MountReport r;
    const double M = t.M, a = s.a, b = s.b, c = s.c;
    const double A = t.A1 + M * (b * b + c * c);
    const double B = t.B1 + M * (a * a + c * c);
    const double C = t.C1 + M * (a * a + b * b);
    const double D = M * b * c, E = M * c * a, F = M * a * b;
    r.defect_B = t.B1 + M * a * a - t.A1;
    r.defect_C = t.C1 + M * a * a - t.A1 / 2.0;
    r.products_of_inertia = std::max({std::abs(D), std::abs(E), std::abs(F)});
    const double scale = std::max({A, B, C});
    const bool equal = std::abs(A - B) <= 1e-12 * scale && std::abs(A - 2.0 * C) <= 1e-12 * scale;
    const bool on_axis = b == 0.0 && c == 0.0;
    r.kovalevskaya = equal && on_axis && r.products_of_inertia == 0.0;
    if (r.products_of_inertia != 0.0)
        r.witnesses.push_back("two nonzero offset components give nonzero products of inertia");
    if (!on_axis && r.products_of_inertia == 0.0) {
        if (a == 0.0 && c == 0.0)
            r.witnesses.push_back("offset along the second axis needs A1 + M b^2 = B1 = 2 (C1 + M b^2)");
        else if (a == 0.0 && b == 0.0)
            r.witnesses.push_back("offset along the third axis puts the center of gravity on the axis "
                                  "of the unequal moment");
    }
    if (!equal) r.witnesses.push_back("moments at the mount are not in the ratio 2:2:1");
    return r;
}

}  // namespace kovtop

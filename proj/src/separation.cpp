#include "kovtop/separation.hpp"

#include "kovtop/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace kovtop {

namespace {

const cd I(0.0, 1.0);

double near_branch_scale(cd x) { return std::max(1.0, std::norm(x) * std::norm(x)); }

}  // namespace

ComplexCoordinates to_complex_coords(const MotionState& s, double c0)
{
    ComplexCoordinates cc;
    cc.x1 = cd(s.p, s.q);
    cc.x2 = cd(s.p, -s.q);
    cc.y1 = cd(s.gamma, s.gamma1);
    cc.y2 = cd(s.gamma, -s.gamma1);
    cc.xi1 = cc.x1 * cc.x1 + c0 * cc.y1;
    cc.xi2 = cc.x2 * cc.x2 + c0 * cc.y2;
    return cc;
}

cd QuarticData::R(cd x) const
{
    return -x * x * x * x + 6.0 * l1 * x * x + 4.0 * l * c0 * x + k0();
}

cd QuarticData::R12(cd x1, cd x2) const
{
    const cd m = x1 * x2;
    return -m * m + 6.0 * l1 * m + 2.0 * l * c0 * (x1 + x2) + k0();
}

cd QuarticData::R1(cd x1, cd x2) const
{
    const cd m = x1 * x2, s = x1 + x2;
    return -6.0 * l1 * m * m - k0() * s * s - 4.0 * l * c0 * s * m + 6.0 * l1 * k0() -
           4.0 * l * l * c0 * c0;
}

cd QuarticData::frakA(cd x1, cd x2) const { return 6.0 * l1 - (x1 + x2) * (x1 + x2); }
cd QuarticData::frakB(cd x1, cd x2) const { return 2.0 * l * c0 + x1 * x2 * (x1 + x2); }
cd QuarticData::frakC(cd x1, cd x2) const { return k0() - x1 * x1 * x2 * x2; }

double QuarticData::scale(cd x1, cd x2) const
{
    const double m = std::max({1.0, std::abs(x1), std::abs(x2)});
    const double c = std::max({1.0, std::abs(l1), std::abs(l * c0), std::abs(k0())});
    return std::pow(m, 8) * c * c;
}

QuarticData quartic_data(double c0, const MotionState& s)
{
    const IntegralSet is = first_integrals(c0, s);
    return QuarticData{is.l1, is.l, c0, std::sqrt(std::max(0.0, is.k_sq))};
}

cd quartic_identity_residual(const QuarticData& qd, cd x1, cd x2)
{
    const cd d = x1 - x2;
    const cd r12 = qd.R12(x1, x2);
    return qd.R(x1) * qd.R(x2) - r12 * r12 - d * d * qd.R1(x1, x2);
}

cd w_squared(const QuarticData& qd, cd x1, cd x2, WRoute route)
{
    const cd d2 = (x1 - x2) * (x1 - x2);
    const double k = qd.k;
    if (route == WRoute::Eq7) {
        const cd u = qd.R1(x1, x2) + k * k * d2;
        return u * u - 4.0 * k * k * qd.R(x1) * qd.R(x2);
    }
    if (d2 == 0.0) throw Error(Errc::CoincidentPoints, "x1 = x2");
    if (route == WRoute::FourFactor) {
        const cd rho = std::sqrt(qd.R(x1)) * std::sqrt(qd.R(x2));
        const cd r12 = qd.R12(x1, x2);
        // non-cancelling root directly, the other from sm sp = -R1/d2
        const cd big = std::abs(r12 + rho) >= std::abs(r12 - rho) ? r12 + rho : r12 - rho;
        const cd sp = big / d2;
        const cd sm = big == 0.0 ? cd(0.0) : -qd.R1(x1, x2) / d2 / sp;
        return d2 * d2 * (sm - k) * (sm + k) * (sp + k) * (sp - k);
    }
    const SeparationVariables sv = s_from_x(qd, ComplexCoordinates{x1, x2, {}, {}, {}, {}});
    return 16.0 * d2 * d2 * (sv.s1 - sv.k1) * (sv.s2 - sv.k1) * (sv.s1 - sv.k2) * (sv.s2 - sv.k2);
}

SeparationVariables s_from_x(const QuarticData& qd, const ComplexCoordinates& cc,
                             const std::optional<SeparationVariables>& prev)
{
    const cd d = cc.x1 - cc.x2;
    if (d == 0.0) throw Error(Errc::CoincidentPoints, "x1 = x2 (q = 0)");
    const cd d2 = d * d;
    SeparationVariables sv;
    sv.k1 = (qd.l1 + qd.k) / 2.0;
    sv.k2 = (qd.l1 - qd.k) / 2.0;
    const cd w1 = std::sqrt(qd.R(cc.x1)), w2 = std::sqrt(qd.R(cc.x2));
    sv.sqrtR1 = w1;
    sv.sqrtR2 = w2;
    if (prev) {
        sv.branch1 = std::abs(w1 - prev->sqrtR1) <= std::abs(-w1 - prev->sqrtR1) ? 1 : -1;
        sv.branch2 = std::abs(w2 - prev->sqrtR2) <= std::abs(-w2 - prev->sqrtR2) ? 1 : -1;
        sv.sqrtR1 = double(sv.branch1) * w1;
        sv.sqrtR2 = double(sv.branch2) * w2;
    }
    const cd rho = sv.sqrtR1 * sv.sqrtR2;
    const cd r12 = qd.R12(cc.x1, cc.x2);
    // evaluate the non-cancelling root directly, the other from the product of roots
    const cd prod = -qd.R1(cc.x1, cc.x2) / (4.0 * d2);
    cd lo, hi;  // lo pairs with -rho, hi with +rho
    if (std::abs(r12 + rho) >= std::abs(r12 - rho)) {
        hi = (r12 + rho) / (2.0 * d2);
        lo = hi == 0.0 ? cd(0.0) : prod / hi;
    } else {
        lo = (r12 - rho) / (2.0 * d2);
        hi = lo == 0.0 ? cd(0.0) : prod / lo;
    }
    sv.s1 = lo + qd.l1 / 2.0;
    sv.s2 = hi + qd.l1 / 2.0;
    return sv;
}

std::array<cd, 2> xi_from_s(const QuarticData& qd, const ComplexCoordinates& cc,
                            const SeparationVariables& sv, int cross)
{
    const cd d2 = (cc.x1 - cc.x2) * (cc.x1 - cc.x2);
    const cd u = std::sqrt((sv.s1 - sv.k1) * (sv.s2 - sv.k1));
    const cd v = double(cross) * std::sqrt((sv.s1 - sv.k2) * (sv.s2 - sv.k2));
    const double k2 = qd.k * qd.k;
    return {d2 / qd.R(cc.x2) * ((u + v) * (u + v) - k2), d2 / qd.R(cc.x1) * ((u - v) * (u - v) - k2)};
}

std::array<double, 5> QuinticData::a() const
{
    return {e[0].real(), e[1].real(), e[2].real(), k1, k2};
}

cd QuinticData::S(cd s) const { return 4.0 * s * s * s - g2 * s - g3; }

cd QuinticData::R1(cd s) const
{
    return -4.0 * (s - e[0]) * (s - e[1]) * (s - e[2]) * (s - k1) * (s - k2);
}

QuinticData quintic_from_constants(double l1, double l, double c0, double k, bool allow_degenerate)
{
    QuinticData q;
    q.g2 = k * k - c0 * c0 + 3.0 * l1 * l1;
    q.g3 = l1 * (k * k - c0 * c0 - l1 * l1) + l * l * c0 * c0;
    q.k1 = (l1 + k) / 2.0;
    q.k2 = (l1 - k) / 2.0;

    // 4s^3 - g2 s - g3 = 0, i.e. s^3 + p s + r = 0
    const double p = -q.g2 / 4.0, r = -q.g3 / 4.0;
    const double disc = q.g2 * q.g2 * q.g2 - 27.0 * q.g3 * q.g3;
    if (disc >= 0.0 && p < 0.0) {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        const double arg = std::clamp(3.0 * r / (p * m), -1.0, 1.0);
        const double th = std::acos(arg) / 3.0;
        for (int j = 0; j < 3; ++j) q.e[j] = m * std::cos(th - 2.0 * std::numbers::pi * j / 3.0);
        q.real_roots = true;
        std::sort(q.e.begin(), q.e.end(), [](cd x, cd y) { return x.real() > y.real(); });
    } else if (p == 0.0 && r == 0.0) {
        q.e = {0.0, 0.0, 0.0};
        q.real_roots = true;
    } else {
        // one real root by Cardano, the pair from the quadratic factor
        const double half = r / 2.0;
        const double D = half * half + p * p * p / 27.0;
        const double sd = std::sqrt(std::max(D, 0.0));
        const double u = std::cbrt(-half + sd), v = std::cbrt(-half - sd);
        const double t = u + v;
        const cd re(-t / 2.0, 0.0);
        const cd im = std::sqrt(cd(t * t / 4.0 - (p + t * t)));
        q.e = {t, re + im, re - im};
        q.real_roots = false;
    }

    const std::array<cd, 5> all{q.e[0], q.e[1], q.e[2], cd(q.k1), cd(q.k2)};
    double mag = 1.0;
    for (const auto& z : all) mag = std::max(mag, std::abs(z));
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j)
            if (std::abs(all[i] - all[j]) < 1e-10 * mag) q.degenerate = true;
    // near a double root the closed form loses half the digits; compare the discriminant too
    if (std::abs(disc) < 1e-12 * std::max(1.0, std::abs(q.g2 * q.g2 * q.g2))) q.degenerate = true;
    if (q.degenerate && !allow_degenerate)
        throw Error(Errc::DegenerateQuintic, "two roots of R1 coincide");
    return q;
}

BranchTrack track_branches(const QuarticData& qd, const QuinticData& qn, const Trajectory& tr)
{
    if (!qn.real_roots) throw Error(Errc::NotFourRealRegime, "cubic roots are not real");
    const auto a = qn.a();
    BranchTrack bt;
    const std::size_t n = tr.size();
    bt.t = tr.t;
    bt.s1.resize(n);
    bt.s2.resize(n);
    bt.A.resize(n);
    bt.Bd.resize(n);
    bt.d.resize(n);
    bt.excluded.assign(n, false);

    for (std::size_t i = 0; i < n; ++i) {
        const ComplexCoordinates cc = to_complex_coords(tr.states[i], qd.c0);
        const cd d = cc.x1 - cc.x2;
        bt.d[i] = d;
        const double sc = near_branch_scale(cc.x1);
        if (std::abs(d) < 1e-6 || std::abs(qd.R(cc.x1)) < 1e-12 * sc || std::abs(qd.R(cc.x2)) < 1e-12 * sc) {
            bt.excluded[i] = true;
            if (std::abs(d) == 0.0) continue;
        }
        const SeparationVariables sv = s_from_x(qd, cc);
        bt.imag_residue = std::max({bt.imag_residue, std::abs(sv.s1.imag()),
                                    std::abs(sv.s2.imag()) / std::max(1.0, std::abs(sv.s2))});
        bt.s1[i] = sv.s1.real();
        bt.s2[i] = sv.s2.real();
        for (int k = 0; k < 5; ++k) {
            bt.A[i][k] = std::sqrt(cd(bt.s1[i] - a[k]));
            bt.Bd[i][k] = std::sqrt(cd(bt.s2[i] - a[k])) * d;
        }
    }

    auto follow = [&](std::vector<std::array<cd, 5>>& v) {
        for (std::size_t i = 1; i < n; ++i) {
            for (int k = 0; k < 5; ++k) {
                const cd last = v[i - 1][k];
                const cd inc = i >= 2 ? v[i - 1][k] - v[i - 2][k] : cd(0.0);
                const cd pred = last + inc;
                cd& cur = v[i][k];
                if (std::abs(cur - pred) > std::abs(-cur - pred)) cur = -cur;
                const double sc = std::max({std::abs(cur), std::abs(pred), std::abs(inc), 1e-300});
                if (std::abs(cur - pred) / sc > 0.5 && !bt.excluded[i] && !bt.excluded[i - 1]) ++bt.jumps;
            }
        }
    };
    follow(bt.A);
    follow(bt.Bd);
    return bt;
}

QuadratureReport quadrature_residuals(const QuarticData& qd, const Trajectory& tr)
{
    const std::size_t n = tr.size();
    if (n < 5) throw Error(Errc::ValueError, "need at least five samples");
    const double h = tr.t[1] - tr.t[0];
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs((tr.t[i] - tr.t[i - 1]) - h) > 1e-9 * std::abs(h))
            throw Error(Errc::ValueError, "samples must be uniformly spaced");

    const QuinticData qn = quintic_from_constants(qd.l1, qd.l, qd.c0, qd.k);
    const BranchTrack bt = track_branches(qd, qn, tr);
    if (bt.jumps > 0) throw Error(Errc::BranchJump, "sampling too coarse for branch continuation");

    QuadratureReport rep;
    rep.imag_residue = bt.imag_residue;
    auto fd = [h](const auto& y, std::size_t i) {
        return (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
    };
    std::vector<double> inv(n);
    for (std::size_t i = 0; i < n; ++i) inv[i] = bt.s2[i] != 0.0 ? 1.0 / bt.s2[i] : 0.0;

    for (std::size_t i = 2; i + 2 < n; ++i) {
        bool skip = false;
        for (std::size_t j = i - 2; j <= i + 2; ++j) skip = skip || bt.excluded[j];
        rep.t.push_back(tr.t[i]);
        rep.excluded.push_back(skip);
        if (skip) {
            rep.res_a.push_back(0.0);
            rep.res_b.push_back(0.0);
            ++rep.n_excluded;
            continue;
        }
        const double ds1 = fd(bt.s1, i);
        bool recip = true;
        for (std::size_t j = i - 2; j <= i + 2; ++j)
            recip = recip && std::abs(bt.s2[j]) > 1.0 && (bt.s2[j] > 0.0) == (bt.s2[i] > 0.0);
        const double ds2 = recip ? -fd(inv, i) / (inv[i] * inv[i]) : fd(bt.s2, i);

        cd pa = 2.0 * I, pb = 2.0 * I;
        for (int k = 0; k < 5; ++k) {
            pa *= bt.A[i][k];
            pb *= bt.Bd[i][k];
        }
        const cd d5 = std::pow(bt.d[i], 5);
        const cd ta = ds1 / pa;
        cd tb = ds2 * d5 / pb;
        if (rep.sheet == 0) rep.sheet = (ta * std::conj(tb)).real() <= 0.0 ? 1 : -1;
        tb *= double(rep.sheet);
        const cd ra = ta + tb;
        const cd rb = bt.s1[i] * ta + bt.s2[i] * tb;
        if (rep.sigma == 0) rep.sigma = rb.real() >= 0.0 ? 1 : -1;
        rep.res_a.push_back(std::abs(ra));
        rep.res_b.push_back(std::abs(rb - double(rep.sigma)));
        ++rep.n_used;
    }
    if (rep.n_used == 0) throw Error(Errc::CoincidentPoints, "every sample lies at a branch point");
    return rep;
}

double velocity_relation_residual(const QuarticData& qd, const MotionState& s)
{
    const ComplexCoordinates cc = to_complex_coords(s, qd.c0);
    const cd dx1 = (s.r * cc.x1 + qd.c0 * s.gamma2) / (2.0 * I);
    const cd d = cc.x1 - cc.x2;
    const cd lhs = -4.0 * dx1 * dx1;
    const cd rhs = qd.R(cc.x1) + d * d * cc.xi1;
    return std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs), std::abs(qd.R(cc.x1))});
}

}  // namespace kovtop

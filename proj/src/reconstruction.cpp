#include "kovtop/reconstruction.hpp"

#include "kovtop/error.hpp"
#include "kovtop/quartic_class.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kovtop {

namespace {

const cd I(0.0, 1.0);
const cd r0(0.0, 2.0);  // √R0

int other_two(int a, int b, int c, int& d)
{
    int first = -1;
    for (int k = 0; k < 5; ++k) {
        if (k == a || k == b || k == c) continue;
        if (first < 0) first = k;
        else d = k;
    }
    return first;
}

double rel(std::initializer_list<cd> signed_terms)
{
    cd sum = 0.0;
    double mag = 0.0;
    for (const cd& z : signed_terms) {
        sum += z;
        mag += std::abs(z);
    }
    return mag > 0.0 ? std::abs(sum) / mag : 0.0;
}

double max_abs_diff(const MotionState& x, const MotionState& y)
{
    return (x.vec() - y.vec()).cwiseAbs().maxCoeff();
}

double search_signs(const RealCaseContext& ctx, const std::array<cd, 5>& A0, const std::array<cd, 5>& B0,
                    double s1, double s2, const MotionState& target, FactorSigns& out)
{
    double best = std::numeric_limits<double>::infinity();
    for (unsigned bits = 0; bits < 1024; ++bits) {
        FactorSigns fs;
        std::array<cd, 5> A = A0, B = B0;
        for (int k = 0; k < 5; ++k) {
            fs.a[k] = (bits >> k) & 1u ? -1 : 1;
            fs.b[k] = (bits >> (k + 5)) & 1u ? -1 : 1;
            A[k] *= double(fs.a[k]);
            B[k] *= double(fs.b[k]);
        }
        try {
            const double err = max_abs_diff(reconstruct(ctx, p_values_from_roots(A, B, s1, s2)).state, target);
            if (err < best) {
                best = err;
                out = fs;
            }
        } catch (const Error&) {
        }
    }
    return best;
}

}  // namespace

const char* to_string(FormulaStatus s) noexcept
{
    switch (s) {
    case FormulaStatus::ClosedForm: return "closed-form";
    case FormulaStatus::AdjustedClosedForm: return "adjusted-closed-form";
    case FormulaStatus::IntegralFallback: return "integral-fallback";
    }
    return "?";
}

std::vector<ComponentStatus> reconstruction_formulas()
{
    return {
        {"p", FormulaStatus::ClosedForm, "-i(L1 P1 + M1 P2 + N1 P3)/(L P1 + M P2 + N P3)"},
        {"q", FormulaStatus::ClosedForm, "E/(L P1 + M P2 + N P3)"},
        {"r", FormulaStatus::ClosedForm, "-i(L P23 + M P13 + N P12)/(L P1 + M P2 + N P3)"},
        {"gamma2", FormulaStatus::AdjustedClosedForm,
         "c0 gamma'' = (L1 P23 + M1 P13 + N1 P12)/(L P1 + M P2 + N P3); the denominator "
         "L P23 + M P13 + N P12 disagrees with the integrated motion"},
        {"gamma1", FormulaStatus::AdjustedClosedForm,
         "c0 gamma' = i/(2D^2) [sum of P_a4 P_a5 terms + R0 (e_b - e_c)^2 P_a]; without R0 it disagrees"},
        {"gamma", FormulaStatus::IntegralFallback,
         "from 2(p^2+q^2) + r^2 - 2 c0 gamma = 6 l1; the closed form agrees only with the L2 family scaled by 4"},
    };
}

RealCaseContext context(double l1, double l, double c0, double k)
{
    RealCaseContext ctx;
    ctx.quintic = quintic_from_constants(l1, l, c0, k);
    const double k0 = c0 * c0 - k * k, l0 = c0 * l;
    if (!ctx.quintic.real_roots || classify(l1, k0, l0) != RootClass::FourReal)
        throw Error(Errc::NotFourRealRegime, "the quartic does not have four real roots");
    ctx.l1 = l1;
    ctx.l = l;
    ctx.c0 = c0;
    ctx.k = k;
    ctx.a = ctx.quintic.a();
    const double e1 = ctx.a[0], e2 = ctx.a[1], e3 = ctx.a[2];
    if (e3 + l1 <= 0.0) throw Error(Errc::NotFourRealRegime, "l1 + e3 is not positive");
    if (!(ctx.quintic.k1 > e1 && e1 > ctx.quintic.k2))
        throw Error(Errc::RealityWindowViolated, "k1 > e1 > k2 does not hold");

    const double r1 = std::sqrt(l1 + e1), r2 = std::sqrt(l1 + e2), r3 = std::sqrt(l1 + e3);
    ctx.E = (e2 - e3) * (e3 - e1) * (e1 - e2);
    ctx.L = I * (e2 - e3) * r1;
    ctx.M = I * (e3 - e1) * r2;
    ctx.N = I * (e1 - e2) * r3;
    ctx.L1 = (e2 - e3) * r2 * r3;
    ctx.M1 = (e3 - e1) * r3 * r1;
    ctx.N1 = (e1 - e2) * r1 * r2;
    ctx.L2 = I * (e2 * e2 - e3 * e3) * r1;
    ctx.M2 = I * (e3 * e3 - e1 * e1) * r2;
    ctx.N2 = I * (e1 * e1 - e2 * e2) * r3;
    return ctx;
}

bool in_window(const RealCaseContext& ctx, double s1, double s2, double tol)
{
    // s2 must lie below both e3 and k2; e3 < k2 whenever the context exists
    const double e1 = ctx.a[0], e3 = ctx.a[2], k1 = ctx.a[3], k2 = ctx.a[4];
    const double sc = std::max({1.0, std::abs(e1), std::abs(k1), std::abs(k2)});
    return s1 >= e1 - tol * sc && s1 <= k1 + tol * sc && s2 <= std::min(e3, k2) + tol * sc;
}

PValues p_values_from_roots(const std::array<cd, 5>& A, const std::array<cd, 5>& B, double s1, double s2)
{
    PValues pv;
    for (int i = 0; i < 5; ++i) pv.P[i] = A[i] * B[i];
    for (int i = 0; i < 5; ++i) {
        for (int j = i + 1; j < 5; ++j) {
            cd ra = 1.0, rb = 1.0;
            for (int k = 0; k < 5; ++k) {
                if (k == i || k == j) continue;
                ra *= A[k];
                rb *= B[k];
            }
            const cd v = r0 * (ra * B[i] * B[j] - A[i] * A[j] * rb) / (s1 - s2);
            pv.Pab[i][j] = pv.Pab[j][i] = v;
        }
    }
    return pv;
}

PValues p_values(const RealCaseContext& ctx, double s1, double s2, const FactorSigns& signs)
{
    if (!in_window(ctx, s1, s2)) throw Error(Errc::OutsideWindow, "(s1, s2) outside the admissible windows");
    std::array<cd, 5> A, B;
    for (int k = 0; k < 5; ++k) {
        A[k] = double(signs.a[k]) * std::sqrt(cd(s1 - ctx.a[k]));
        B[k] = double(signs.b[k]) * std::sqrt(cd(s2 - ctx.a[k]));
    }
    return p_values_from_roots(A, B, s1, s2);
}

ReconstructedState reconstruct(const RealCaseContext& ctx, const PValues& pv)
{
    const cd P1 = pv.p(1), P2 = pv.p(2), P3 = pv.p(3);
    const cd D = ctx.L * P1 + ctx.M * P2 + ctx.N * P3;
    const double dscale = std::abs(ctx.L * P1) + std::abs(ctx.M * P2) + std::abs(ctx.N * P3);
    if (!(std::abs(D) > 1e-13 * std::max(dscale, 1e-300)) || std::abs(D) == 0.0)
        throw Error(Errc::DegenerateDenominator, "L P1 + M P2 + N P3 vanishes");

    const cd P23 = pv.pp(2, 3), P13 = pv.pp(1, 3), P12 = pv.pp(1, 2);
    const cd p = -I * (ctx.L1 * P1 + ctx.M1 * P2 + ctx.N1 * P3) / D;
    const cd q = ctx.E / D;
    const cd r = -I * (ctx.L * P23 + ctx.M * P13 + ctx.N * P12) / D;
    const cd g2 = (ctx.L1 * P23 + ctx.M1 * P13 + ctx.N1 * P12) / D / ctx.c0;

    const double e1 = ctx.a[0], e2 = ctx.a[1], e3 = ctx.a[2];
    const cd &L = ctx.L, &M = ctx.M, &N = ctx.N;
    auto P = [&](int i, int j) { return pv.pp(i, j); };
    const cd num = L * L * P(1, 4) * P(1, 5) + M * M * P(2, 4) * P(2, 5) + N * N * P(3, 4) * P(3, 5) +
                   M * N * (P(2, 4) * P(3, 5) + P(2, 5) * P(3, 4) + R0 * (e2 - e3) * (e2 - e3) * P1) +
                   N * L * (P(3, 4) * P(1, 5) + P(3, 5) * P(1, 4) + R0 * (e3 - e1) * (e3 - e1) * P2) +
                   L * M * (P(1, 4) * P(2, 5) + P(1, 5) * P(2, 4) + R0 * (e1 - e2) * (e1 - e2) * P3);
    const cd g1 = I / (2.0 * D * D) * num / ctx.c0;
    const cd g = (2.0 * (p * p + q * q) + r * r - 6.0 * ctx.l1) / (2.0 * ctx.c0);

    ReconstructedState out;
    const std::array<cd, 6> z{p, q, r, g, g1, g2};
    StateVec v;
    for (int i = 0; i < 6; ++i) {
        v[i] = z[i].real();
        out.imag_residue = std::max(out.imag_residue, std::abs(z[i].imag()));
    }
    out.state = MotionState::from_vec(v);
    return out;
}

ReconstructedState reconstruct(const RealCaseContext& ctx, double s1, double s2, const FactorSigns& signs)
{
    return reconstruct(ctx, p_values(ctx, s1, s2, signs));
}

cd gamma_closed_form(const RealCaseContext& ctx, const PValues& pv)
{
    const cd D = ctx.L * pv.p(1) + ctx.M * pv.p(2) + ctx.N * pv.p(3);
    const cd T = (ctx.L2 * pv.p(1) + ctx.M2 * pv.p(2) + ctx.N2 * pv.p(3)) / D;
    const cd U = (ctx.L * pv.pp(2, 3) + ctx.M * pv.pp(1, 3) + ctx.N * pv.pp(1, 2)) / D;
    return -4.0 * ctx.l1 + 4.0 * T - U * U;
}

IdentityReport identity_suite(const RealCaseContext& ctx, const PValues& pv)
{
    IdentityReport rep;
    const auto& a = ctx.a;
    auto P = [&](int i) { return pv.P[i]; };
    auto Q = [&](int i, int j) { return pv.Pab[i][j]; };
    for (int al = 0; al < 5; ++al) {
        for (int be = 0; be < 5; ++be) {
            if (be == al) continue;
            for (int ga = 0; ga < 5; ++ga) {
                if (ga == al || ga == be) continue;
                int ep = -1;
                const int de = other_two(al, be, ga, ep);
                const cd triple = R0 * P(al) * P(be) * P(ga);
                const double dbg = a[be] - a[ga], dga = a[ga] - a[al], dab = a[al] - a[be];
                const cd X = (P(ga) * Q(al, ga) - P(be) * Q(al, be)) / dbg;  // over (aβ - aγ)
                const cd Y = (P(al) * Q(al, be) - P(ga) * Q(be, ga)) / dga;  // over (aγ - aα)
                const cd Z = (P(be) * Q(be, ga) - P(al) * Q(al, ga)) / dab;  // over (aα - aβ)
                const std::array<double, 6> r{
                    rel({triple, -Q(be, ga) * X, -Q(al, de) * Q(al, ep)}),
                    rel({triple, -Q(al, ga) * Y, -Q(be, de) * Q(be, ep)}),
                    rel({triple, -Q(al, be) * Z, -Q(ga, de) * Q(ga, ep)}),
                    rel({R0 * (P(be) * P(be) + P(ga) * P(ga)) * P(al), -Q(al, ga) * Z, -Q(al, be) * Y,
                         -Q(be, de) * Q(ga, ep), -Q(be, ep) * Q(ga, de), -R0 * dbg * dbg * P(al)}),
                    rel({R0 * (P(ga) * P(ga) + P(al) * P(al)) * P(be), -Q(al, be) * X, -Q(be, ga) * Z,
                         -Q(ga, de) * Q(al, ep), -Q(al, de) * Q(ga, ep), -R0 * dga * dga * P(be)}),
                    rel({R0 * (P(al) * P(al) + P(be) * P(be)) * P(ga), -Q(be, ga) * Y, -Q(al, ga) * X,
                         -Q(al, de) * Q(be, ep), -Q(al, ep) * Q(be, de), -R0 * dab * dab * P(ga)}),
                };
                for (int i = 0; i < 6; ++i) rep.max_residual[i] = std::max(rep.max_residual[i], r[i]);
                ++rep.evaluations;
            }
        }
    }
    return rep;
}

IdentityReport identity_suite(const RealCaseContext& ctx, double s1, double s2, const FactorSigns& signs)
{
    return identity_suite(ctx, p_values(ctx, s1, s2, signs));
}

PValues p_derivative(const RealCaseContext& ctx, const PValues& pv)
{
    PValues d;
    for (int al = 0; al < 5; ++al) {
        int ga = -1;
        const int be = other_two(al, al, al, ga);  // first two indices other than α
        d.P[al] = (pv.P[ga] * pv.Pab[al][ga] - pv.P[be] * pv.Pab[al][be]) / (2.0 * (ctx.a[be] - ctx.a[ga]));
    }
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            if (i != j) d.Pab[i][j] = 0.5 * R0 * pv.P[i] * pv.P[j];
    return d;
}

double match_signs(const RealCaseContext& ctx, double s1, double s2, const MotionState& target, FactorSigns& out)
{
    std::array<cd, 5> A, B;
    for (int k = 0; k < 5; ++k) {
        A[k] = std::sqrt(cd(s1 - ctx.a[k]));
        B[k] = std::sqrt(cd(s2 - ctx.a[k]));
    }
    return search_signs(ctx, A, B, s1, s2, target, out);
}

RoundTripReport round_trip(double c0, const Trajectory& tr, double tol, double margin)
{
    if (tr.size() == 0) throw Error(Errc::ValueError, "empty trajectory");
    const QuarticData qd = quartic_data(c0, tr.states.front());
    const RealCaseContext ctx = context(qd.l1, qd.l, qd.c0, qd.k);
    const BranchTrack bt = track_branches(qd, ctx.quintic, tr);

    RoundTripReport rep;
    const std::size_t n = tr.size();
    rep.t = tr.t;
    rep.error.assign(n, std::numeric_limits<double>::quiet_NaN());
    rep.excluded.assign(n, false);
    rep.imag_residue = bt.imag_residue;

    bool fixed = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (bt.excluded[i] || std::abs(bt.d[i]) < margin) {
            rep.excluded[i] = true;
            continue;
        }
        std::array<cd, 5> A = bt.A[i], B;
        for (int k = 0; k < 5; ++k) B[k] = bt.Bd[i][k] / bt.d[i];
        if (!fixed) {
            search_signs(ctx, A, B, bt.s1[i], bt.s2[i], tr.states[i], rep.signs);
            fixed = true;
        }
        for (int k = 0; k < 5; ++k) {
            A[k] *= double(rep.signs.a[k]);
            B[k] *= double(rep.signs.b[k]);
        }
        ++rep.n_used;
        try {
            const ReconstructedState rs = reconstruct(ctx, p_values_from_roots(A, B, bt.s1[i], bt.s2[i]));
            const double e = max_abs_diff(rs.state, tr.states[i]);
            rep.error[i] = e;
            rep.max_error = std::max(rep.max_error, e);
            rep.imag_residue = std::max(rep.imag_residue, rs.imag_residue);
            if (e < tol) ++rep.n_ok;
        } catch (const Error&) {
            rep.max_error = std::numeric_limits<double>::infinity();
        }
    }
    return rep;
}

}  // namespace kovtop

#include "kovtop/painleve.hpp"

#include "kovtop/error.hpp"
#include "kovtop/poly.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace kovtop {

namespace {

const cd I(0.0, 1.0);

bool rel_eq(double a, double b, double tol)
{
    return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), 1e-300});
}

Eigen::Vector3d gravity(const BodyParameters& bp)
{
    return bp.Mg * Eigen::Vector3d(bp.x0, bp.y0, bp.z0);
}

void fill_derived(const BodyParameters& bp, LeadingBalance& lb)
{
    const Eigen::Vector3d g = gravity(bp);
    lb.mu = bp.A * g(0) * lb.p0 + bp.B * g(1) * lb.q0 + bp.C * g(2) * lb.r0;
    lb.lambda0 = (lb.p0 * lb.p0 + lb.q0 * lb.q0 + lb.r0 * lb.r0) / 2.0;
    lb.lambda1 = (bp.A * bp.A * lb.p0 * lb.p0 + bp.B * bp.B * lb.q0 * lb.q0 +
                  bp.C * bp.C * lb.r0 * lb.r0) / 2.0;
}

struct SignedLambda {
    cd value;
    double scale;
};

// x0(A+λ)bc + y0(B+λ)ca - z0(C+λ)ab with principal roots times the chosen signs
SignedLambda lambda_equation(const BodyParameters& bp, cd lam, const std::array<int, 3>& s)
{
    const Eigen::Vector3d g = gravity(bp);
    const cd a = double(s[0]) * std::sqrt((2.0 * bp.A + lam) / bp.A1());
    const cd b = double(s[1]) * std::sqrt((2.0 * bp.B + lam) / bp.B1());
    const cd c = double(s[2]) * std::sqrt((2.0 * bp.C + lam) / bp.C1());
    const cd t1 = g(0) * (bp.A + lam) * b * c;
    const cd t2 = g(1) * (bp.B + lam) * c * a;
    const cd t3 = g(2) * (bp.C + lam) * a * b;
    return {t1 + t2 - t3, std::max({std::abs(t1), std::abs(t2), std::abs(t3), 1.0})};
}

// Squared terms X^2, Y^2, Z^2 of the λ equation as polynomials in λ.
Eigen::VectorXcd squared_term(double w, double M, double P2, double Q2, double denom)
{
    Eigen::VectorXcd lin(2), f1(2), f2(2);
    lin << M, 1.0;
    f1 << 2.0 * P2, 1.0;
    f2 << 2.0 * Q2, 1.0;
    Eigen::VectorXcd out = poly::multiply(poly::multiply(lin, lin), poly::multiply(f1, f2));
    return out * (w * w / denom);
}

// Bring the equal pair of moments to (A, B) by a cyclic relabeling and rotate the
// center of gravity into the first coordinate plane. Returns the rotation angle.
struct Canonical {
    BodyParameters bp;
    bool equal_pair = false;
    double phi = 0.0;
};

Canonical canonical(const BodyParameters& in, double tol)
{
    Canonical c;
    c.bp = in;
    BodyParameters& b = c.bp;
    for (int k = 0; k < 3 && !rel_eq(b.A, b.B, tol); ++k) {
        b = BodyParameters{b.B, b.C, b.A, b.Mg, b.y0, b.z0, b.x0};
    }
    c.equal_pair = rel_eq(b.A, b.B, tol);
    if (!c.equal_pair) {
        c.bp = in;
        return c;
    }
    c.phi = std::atan2(b.y0, b.x0);
    b.x0 = std::hypot(b.x0, b.y0);
    b.y0 = 0.0;
    return c;
}

LeadingBalance rotate(const LeadingBalance& in, double phi)
{
    if (phi == 0.0) return in;
    LeadingBalance lb = in;
    const double cs = std::cos(phi), sn = std::sin(phi);
    lb.p0 = cs * in.p0 - sn * in.q0;
    lb.q0 = sn * in.p0 + cs * in.q0;
    lb.f0 = cs * in.f0 - sn * in.g0;
    lb.g0 = sn * in.f0 + cs * in.g0;
    return lb;
}

std::vector<LeadingBalance> degenerate_in_plane(const BodyParameters& bp)
{
    // here A = B and y0 = 0
    std::vector<LeadingBalance> out;
    const double A = bp.A, C = bp.C;
    const double gx = bp.Mg * bp.x0, gz = bp.Mg * bp.z0;
    for (int eps : {1, -1}) {
        const cd den = gx - I * double(eps) * gz;
        if (std::abs(den) > 0.0) {
            LeadingBalance lb;
            lb.family = BalanceFamily::DegenerateI;
            lb.eps = eps;
            lb.q0 = 2.0 * double(eps) * I;
            lb.f0 = -2.0 * A / den;
            lb.h0 = double(eps) * I * 2.0 * A / den;
            out.push_back(lb);
        }
    }
    if (gx != 0.0) {
        for (int eps : {1, -1}) {
            LeadingBalance lb;
            lb.family = BalanceFamily::DegenerateII;
            lb.eps = eps;
            lb.r0 = 2.0 * double(eps) * I;
            if (rel_eq(A, 2.0 * C, 1e-12)) {
                if (gz != 0.0) continue;  // no balance of this type
                lb.p0 = 1.0;  // free; any value gives the same determinant
            } else {
                lb.p0 = double(eps) * I * 2.0 * C / (A - 2.0 * C) * gz / gx;
            }
            lb.q0 = double(eps) * I * lb.p0;
            lb.f0 = -2.0 * C / gx;
            lb.g0 = -I * double(eps) * 2.0 * C / gx;
            out.push_back(lb);
        }
    }
    for (auto& lb : out) {
        fill_derived(bp, lb);
        lb.lambda = (bp.A * lb.p0 * lb.p0 + bp.B * lb.q0 * lb.q0 + bp.C * lb.r0 * lb.r0) / 2.0;
    }
    return out;
}

// Replace each cluster of nearby roots by its mean; the mean of a multiple root's
// perturbed copies is far more accurate than any single copy. Isolated roots are polished.
Eigen::VectorXcd merge_clusters(const Eigen::VectorXcd& c, const Eigen::VectorXcd& z, double radius)
{
    const Eigen::Index n = z.size();
    Eigen::VectorXcd out = z;
    std::vector<bool> done(n, false);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (done[i]) continue;
        std::vector<Eigen::Index> members{i};
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (!done[j] && std::abs(z(j) - z(i)) < radius) members.push_back(j);
        cd mean = 0.0;
        for (auto j : members) mean += z(j);
        mean /= double(members.size());
        if (members.size() == 1) mean = poly::newton_polish(c, mean, 3);
        for (auto j : members) {
            out(j) = mean;
            done[j] = true;
        }
    }
    return out;
}

}  // namespace

const char* to_string(BalanceFamily f) noexcept
{
    switch (f) {
    case BalanceFamily::Generic: return "Generic";
    case BalanceFamily::DegenerateI: return "DegenerateI";
    case BalanceFamily::DegenerateII: return "DegenerateII";
    case BalanceFamily::FreeTop: return "FreeTop";
    }
    return "?";
}

const char* to_string(PainleveCase c) noexcept
{
    switch (c) {
    case PainleveCase::Euler: return "Euler";
    case PainleveCase::Lagrange: return "Lagrange";
    case PainleveCase::Kovalevskaya: return "Kovalevskaya";
    case PainleveCase::Other: return "Other";
    case PainleveCase::Fails: return "Fails";
    }
    return "?";
}

Eigen::Matrix<cd, 6, 1> LeadingBalance::vec() const
{
    Eigen::Matrix<cd, 6, 1> v;
    v << p0, q0, r0, f0, g0, h0;
    return v;
}

Eigen::Matrix<cd, 6, 1> balance_residual(const BodyParameters& bp, const LeadingBalance& lb)
{
    const Eigen::Vector3d g = gravity(bp);
    const double A1 = bp.A1(), B1 = bp.B1(), C1 = bp.C1();
    Eigen::Matrix<cd, 6, 1> r;
    r(0) = bp.A * lb.p0 + A1 * lb.q0 * lb.r0 + g(1) * lb.h0 - g(2) * lb.g0;
    r(1) = bp.B * lb.q0 + B1 * lb.r0 * lb.p0 + g(2) * lb.f0 - g(0) * lb.h0;
    r(2) = bp.C * lb.r0 + C1 * lb.p0 * lb.q0 + g(0) * lb.g0 - g(1) * lb.f0;
    r(3) = 2.0 * lb.f0 + lb.r0 * lb.g0 - lb.q0 * lb.h0;
    r(4) = 2.0 * lb.g0 + lb.p0 * lb.h0 - lb.r0 * lb.f0;
    r(5) = 2.0 * lb.h0 + lb.q0 * lb.f0 - lb.p0 * lb.g0;
    return r;
}

std::vector<cd> solve_lambda(const BodyParameters& bp, const std::array<int, 3>& signs)
{
    const double A1 = bp.A1(), B1 = bp.B1(), C1 = bp.C1();
    if (A1 == 0.0 || B1 == 0.0 || C1 == 0.0)
        throw Error(Errc::DegenerateInertia, "two equal moments; use the degenerate balances");
    const Eigen::Vector3d g = gravity(bp);
    if (g.isZero()) throw Error(Errc::AllZeroCenter, "center of gravity at the fixed point");

    const Eigen::VectorXcd X2 = squared_term(g(0), bp.A, bp.B, bp.C, B1 * C1);
    const Eigen::VectorXcd Y2 = squared_term(g(1), bp.B, bp.C, bp.A, C1 * A1);
    const Eigen::VectorXcd Z2 = squared_term(g(2), bp.C, bp.A, bp.B, A1 * B1);
    const Eigen::VectorXcd S = X2 + Y2 - Z2;
    const Eigen::VectorXcd P = poly::multiply(S, S) - 4.0 * poly::multiply(X2, Y2);
    const Eigen::VectorXcd cand = poly::roots(P, 4);

    std::vector<cd> out;
    for (Eigen::Index i = 0; i < cand.size(); ++i) {
        cd lam = cand(i);
        // Newton on the signed equation, derivative by central differences
        for (int it = 0; it < 6; ++it) {
            const cd f = lambda_equation(bp, lam, signs).value;
            const double h = 1e-6 * std::max(1.0, std::abs(lam));
            const cd fp = (lambda_equation(bp, lam + h, signs).value -
                           lambda_equation(bp, lam - h, signs).value) / (2.0 * h);
            if (fp == 0.0) break;
            const cd next = lam - f / fp;
            if (std::abs(lambda_equation(bp, next, signs).value) >= std::abs(f)) break;
            lam = next;
        }
        const SignedLambda sl = lambda_equation(bp, lam, signs);
        if (std::abs(sl.value) >= 1e-10 * sl.scale) continue;
        const bool dup = std::any_of(out.begin(), out.end(), [&](cd v) {
            return std::abs(v - lam) <= 1e-9 * std::max(1.0, std::abs(lam));
        });
        if (!dup) out.push_back(lam);
    }
    std::sort(out.begin(), out.end(), [](cd x, cd y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    return out;
}

LeadingBalance leading_coefficients(const BodyParameters& bp, cd lambda,
                                    const std::array<int, 3>& signs)
{
    LeadingBalance lb;
    lb.family = BalanceFamily::Generic;
    lb.signs = signs;
    lb.lambda = lambda;
    lb.a = double(signs[0]) * std::sqrt((2.0 * bp.A + lambda) / bp.A1());
    lb.b = double(signs[1]) * std::sqrt((2.0 * bp.B + lambda) / bp.B1());
    lb.c = double(signs[2]) * std::sqrt((2.0 * bp.C + lambda) / bp.C1());
    lb.p0 = lb.b * lb.c;
    lb.q0 = lb.c * lb.a;
    lb.r0 = -lb.a * lb.b;
    fill_derived(bp, lb);
    const double scale = std::abs(bp.A * gravity(bp)(0) * lb.p0) + std::abs(bp.B * gravity(bp)(1) * lb.q0) +
                         std::abs(bp.C * gravity(bp)(2) * lb.r0);
    if (std::abs(lb.mu) <= 1e-13 * std::max(scale, 1e-300))
        throw Error(Errc::MuZero, "mu = A x0 p0 + B y0 q0 + C z0 r0 vanishes");
    lb.f0 = -bp.A1() * lb.q0 * lb.r0 * lambda / lb.mu;
    lb.g0 = -bp.B1() * lb.r0 * lb.p0 * lambda / lb.mu;
    lb.h0 = -bp.C1() * lb.p0 * lb.q0 * lambda / lb.mu;
    return lb;
}

std::vector<LeadingBalance> degenerate_balances(const BodyParameters& bp, double rel_tol)
{
    if (!rel_eq(bp.A, bp.B, rel_tol)) throw Error(Errc::NotDegenerate, "A differs from B");
    BodyParameters flat = bp;
    const double phi = std::atan2(bp.y0, bp.x0);
    flat.x0 = std::hypot(bp.x0, bp.y0);
    flat.y0 = 0.0;
    std::vector<LeadingBalance> out = degenerate_in_plane(flat);
    for (auto& lb : out) lb = rotate(lb, phi);
    return out;
}

std::vector<LeadingBalance> free_top_balances(const BodyParameters& bp)
{
    const double A1 = bp.A1(), B1 = bp.B1(), C1 = bp.C1();
    if (A1 == 0.0 || B1 == 0.0 || C1 == 0.0)
        throw Error(Errc::DegenerateInertia, "a symmetric free top has no movable poles");
    std::vector<LeadingBalance> out;
    const cd p = std::sqrt(cd(bp.B * bp.C / (B1 * C1)));
    const cd q = std::sqrt(cd(bp.C * bp.A / (C1 * A1)));
    for (int sp : {1, -1})
        for (int sq : {1, -1}) {
            LeadingBalance lb;
            lb.family = BalanceFamily::FreeTop;
            lb.signs = {sp, sq, 1};
            lb.p0 = double(sp) * p;
            lb.q0 = double(sq) * q;
            lb.r0 = -bp.A * lb.p0 / (A1 * lb.q0);
            fill_derived(bp, lb);
            out.push_back(lb);
        }
    return out;
}

Eigen::Matrix<cd, 6, 6> resonance_matrix(const BodyParameters& bp, const LeadingBalance& lb, cd m)
{
    const Eigen::Vector3d g = gravity(bp);
    const double A1 = bp.A1(), B1 = bp.B1(), C1 = bp.C1();
    const cd p0 = lb.p0, q0 = lb.q0, r0 = lb.r0, f0 = lb.f0, g0 = lb.g0, h0 = lb.h0;
    Eigen::Matrix<cd, 6, 6> M;
    M << (m - 1.0) * bp.A, -A1 * r0, -A1 * q0, 0.0, g(2), -g(1),
        -B1 * r0, (m - 1.0) * bp.B, -B1 * p0, -g(2), 0.0, g(0),
        -C1 * q0, -C1 * p0, (m - 1.0) * bp.C, g(1), -g(0), 0.0,
        0.0, h0, -g0, m - 2.0, -r0, q0,
        -h0, 0.0, f0, r0, m - 2.0, -p0,
        g0, -f0, 0.0, -q0, p0, m - 2.0;
    return M;
}

ResonanceSpectrum resonance_polynomial(const BodyParameters& bp, const LeadingBalance& lb,
                                       double int_tol)
{
    ResonanceSpectrum rs;
    Eigen::VectorXd xs(7);
    Eigen::VectorXcd ys(7);
    for (int k = 0; k <= 6; ++k) {
        xs(k) = k;
        ys(k) = resonance_matrix(bp, lb, double(k)).determinant();
    }
    rs.poly = poly::interpolate(xs, ys);
    const double lead = std::abs(rs.poly(6));
    if (lead <= 1e-12 * std::max(1.0, rs.poly.cwiseAbs().maxCoeff()))
        throw Error(Errc::SingularLeading, "degree-6 coefficient vanishes");
    rs.roots = merge_clusters(rs.poly, poly::roots(rs.poly, 0), 1e-3);

    std::set<int> ints;
    for (Eigen::Index i = 0; i < rs.roots.size(); ++i) {
        const double n = std::round(rs.roots(i).real());
        if (std::abs(rs.roots(i) - n) < int_tol) ints.insert(int(n));
    }
    rs.integer_roots.assign(ints.begin(), ints.end());
    for (int k : rs.integer_roots) {
        if (k < 0) continue;
        Eigen::JacobiSVD<Eigen::Matrix<cd, 6, 6>> svd(resonance_matrix(bp, lb, double(k)));
        const auto& sv = svd.singularValues();
        int dim = 0;
        for (Eigen::Index j = 0; j < sv.size(); ++j)
            if (sv(j) < 1e-8 * sv(0)) ++dim;
        rs.kernel_dims.push_back(dim);
        rs.free_constants += dim;
    }
    return rs;
}

PainleveVerdict painleve_test(const BodyParameters& bp_in, double int_tol)
{
    PainleveVerdict v;
    const Canonical cn = canonical(bp_in, 1e-12);
    const BodyParameters& bp = cn.bp;
    const Eigen::Vector3d g = gravity(bp);
    const bool no_gravity = g.isZero();

    std::vector<LeadingBalance> balances;
    if (no_gravity) {
        if (cn.equal_pair) {
            v.kind = PainleveCase::Euler;
            v.passes = true;
            v.note = "symmetric free top: solutions are entire, no movable poles";
            return v;
        }
        balances = free_top_balances(bp);
    } else if (cn.equal_pair) {
        balances = degenerate_in_plane(bp);
    } else {
        const std::array<std::array<int, 3>, 4> octants{{{1, 1, 1}, {1, 1, -1}, {1, -1, 1}, {-1, 1, 1}}};
        for (const auto& s : octants) {
            for (cd lam : solve_lambda(bp, s)) {
                try {
                    balances.push_back(leading_coefficients(bp, lam, s));
                } catch (const Error&) {
                    v.note += "mu vanishes for one lambda; ";
                }
            }
        }
    }

    std::set<int> uni;
    int best = 0;
    for (const auto& lb : balances) {
        FamilyReport fr;
        fr.balance = lb;
        try {
            fr.spectrum = resonance_polynomial(bp, lb, int_tol);
        } catch (const Error& e) {
            v.note += std::string(e.what()) + "; ";
            continue;
        }
        for (int k : fr.spectrum.integer_roots)
            if (k >= 0) uni.insert(k);
        best = std::max(best, fr.spectrum.free_constants);
        v.families.push_back(fr);
    }
    v.integer_union.assign(uni.begin(), uni.end());
    v.passes = best >= 5;

    if (!v.passes) {
        v.kind = PainleveCase::Fails;
        v.note += balances.empty() ? "no leading balance found"
                                   : "no balance family yields five integer resonance constants";
        return v;
    }
    const double scale = std::max({std::abs(g(0)), std::abs(g(2)), 1e-300});
    if (no_gravity)
        v.kind = PainleveCase::Euler;
    else if (cn.equal_pair && std::abs(g(0)) <= 1e-12 * scale)
        v.kind = PainleveCase::Lagrange;
    else if (cn.equal_pair && rel_eq(bp.A, 2.0 * bp.C, 1e-12) && std::abs(g(2)) <= 1e-12 * scale)
        v.kind = PainleveCase::Kovalevskaya;
    else
        v.kind = PainleveCase::Other;
    return v;
}

}  // namespace kovtop

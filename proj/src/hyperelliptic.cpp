#include "kovtop/hyperelliptic.hpp"

#include "kovtop/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>

namespace kovtop {

namespace {

using Eigen::Vector2cd;
using Eigen::Vector2d;

const cd I(0.0, 1.0);
constexpr double pi = std::numbers::pi;

struct Rule {
    std::vector<double> x, w;
};

const Rule& cached_rule(int n)
{
    static std::mutex mu;
    static std::map<int, Rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) {
        Rule r;
        gauss_legendre(n, r.x, r.w);
        it = cache.emplace(n, std::move(r)).first;
    }
    return it->second;
}

Vector2cd quad_fixed(const std::function<Vector2cd(double)>& f, int n)
{
    const Rule& r = cached_rule(n);
    Vector2cd s = Vector2cd::Zero();
    for (int i = 0; i < n; ++i) s += r.w[i] * f(r.x[i]);
    return s;
}

Vector2cd basis(double x) { return Vector2cd(x, 1.0); }

struct ThetaSum {
    cd value;
    double magnitude = 0.0;  ///< Σ |terms|
};

ThetaSum theta_sum(const PeriodData& pd, const Vector2cd& v, const Characteristic& ch)
{
    const Eigen::Matrix2d im = pd.tau.imag();
    const Vector2d centre = -im.ldlt().solve(v.imag());
    const int N = theta_order(pd, v);
    const Vector2d m(ch.c[0] / 2.0, ch.c[1] / 2.0);
    const Vector2d n(ch.c[2] / 2.0, ch.c[3] / 2.0);
    const int c1 = int(std::lround(centre[0])), c2 = int(std::lround(centre[1]));
    ThetaSum out;
    for (int i = c1 - N; i <= c1 + N; ++i) {
        for (int j = c2 - N; j <= c2 + N; ++j) {
            const Vector2d nu = Vector2d(i, j) + n;
            const Vector2cd nc = nu.cast<cd>();
            const cd q = (nc.transpose() * pd.tau * nc)(0, 0);
            const cd lin = 2.0 * ((nc.transpose() * v)(0, 0) + nu.dot(m));
            const cd term = std::exp(I * pi * (q + lin));
            out.value += term;
            out.magnitude += std::abs(term);
        }
    }
    return out;
}

Eigen::Vector4i normalize_pair(const std::array<int, 4>& x, const std::array<int, 4>& y)
{
    Eigen::Vector4i r;
    for (int i = 0; i < 4; ++i) {
        const bool odd = ((x[i] + y[i]) % 2) != 0;
        r[i] = odd ? (i < 2 ? -1 : 1) : 0;
    }
    return r;
}

struct Assignment {
    const char* quantity;
    const char* theta;
    const char* prefactor;
    int i, j;  // 1-based P indices, j = 0 for P_a
};

const Assignment kTable[15] = {
    {"P1", "3", "-i C/sqrt(a3-a1) c0 c2 c4/(c01 c12 c14)", 1, 0},
    {"P2", "2", "-i C/sqrt(a3-a1) c5 c2/(c12 c23)", 2, 0},
    {"P3", "0", "C/sqrt(a3-a1) c5 c0/(c01 c03)", 3, 0},
    {"P4", "4", "-C/sqrt(a3-a1) c5 c4/(c14 c34)", 4, 0},
    {"P5", "1", "C/sqrt(a3-a1) c0 c2 c4/(c03 c23 c34)", 5, 0},
    {"P12", "23", "i C c5/c12", 1, 2},
    {"P13", "03", "-C c5/c01", 1, 3},
    {"P14", "34", "-C c5/c14", 1, 4},
    {"P15", "13", "-C", 1, 5},
    {"P23", "02", "C c5/c4", 2, 3},
    {"P24", "24", "-C c5/c0", 2, 4},
    {"P25", "12", "C c5/c23", 2, 5},
    {"P34", "04", "-i C c5/c2", 3, 4},
    {"P35", "01", "-i C c5/c03", 3, 5},
    {"P45", "14", "-i C c5/c34", 4, 5},
};

}  // namespace

HyperellipticCurve HyperellipticCurve::from_constants(double l1, double l, double c0, double k)
{
    const QuinticData q = quintic_from_constants(l1, l, c0, k);
    if (!q.real_roots) throw Error(Errc::RegimeViolated, "cubic roots are not real");
    HyperellipticCurve c;
    c.a = {q.e[2].real(), q.k2, q.e[1].real(), q.e[0].real(), q.k1};
    const double mag = std::max({1.0, std::abs(c.a[0]), std::abs(c.a[4])});
    for (int i = 0; i < 4; ++i)
        if (!(c.a[i + 1] - c.a[i] > 1e-10 * mag))
            throw Error(Errc::RegimeViolated, "branch points are not strictly increasing as e3 < k2 < e2 < e1 < k1");
    return c;
}

cd HyperellipticCurve::sqrt_r(double x) const { return A0 * A0 * A0 * partial(x, {}); }

cd HyperellipticCurve::partial(double x, std::initializer_list<int> skip) const
{
    cd r = 1.0;
    for (int i = 0; i < 5; ++i) {
        if (std::find(skip.begin(), skip.end(), i) != skip.end()) continue;
        r *= std::sqrt(cd((x - a[i]) / A0));
    }
    return r;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w)
{
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const unsigned un = unsigned(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            const double p = std::legendre(un, z), pm = std::legendre(un - 1, z);
            dp = n * (z * p - pm) / (z * z - 1.0);
            const double dz = p / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        const double p = std::legendre(un, z), pm = std::legendre(un - 1, z);
        dp = n * (z * p - pm) / (z * z - 1.0);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

Vector2cd integrate_doubling(const std::function<Vector2cd(double)>& f, const QuadratureOptions& opt,
                             int* nodes_used, double* last_change)
{
    int n = opt.min_nodes;
    Vector2cd prev = quad_fixed(f, n);
    double change = 0.0;
    while (n < opt.max_nodes) {
        n *= 2;
        const Vector2cd cur = quad_fixed(f, n);
        change = 0.0;
        for (int i = 0; i < 2; ++i) change = std::max(change, std::abs(cur[i] - prev[i]) / std::max(1.0, std::abs(cur[i])));
        prev = cur;
        if (change < opt.tol) break;
    }
    if (change > 1e-10 && opt.max_nodes > opt.min_nodes)
        throw Error(Errc::QuadratureNonConvergent, "node doubling stalled at relative change " + std::to_string(change));
    if (nodes_used) *nodes_used = n;
    if (last_change) *last_change = change;
    return prev;
}

PeriodData periods(const HyperellipticCurve& cv, const QuadratureOptions& opt)
{
    PeriodData pd;
    for (int j = 0; j < 4; ++j) {
        const double m = (cv.a[j] + cv.a[j + 1]) / 2.0, h = (cv.a[j + 1] - cv.a[j]) / 2.0;
        // x = m + h sin θ removes both endpoint singularities; the endpoint factors give i h cos θ/4
        auto f = [&](double t) -> Vector2cd {
            const double x = m + h * std::sin(t * pi / 2.0);
            const cd den = cv.A0 * cv.A0 * cv.A0 * (I / 4.0) * cv.partial(x, {j, j + 1});
            return basis(x) * (pi / 2.0) / den;
        };
        int nodes = 0;
        double ch = 0.0;
        pd.segment[j] = integrate_doubling(f, opt, &nodes, &ch);
        pd.nodes = std::max(pd.nodes, nodes);
        pd.refinement_change = std::max(pd.refinement_change, ch);
    }
    {
        // x = a4 + y^2 on y in [0, 1] and y = 1/z beyond
        const double a4 = cv.a[4];
        auto f = [&](double t) -> Vector2cd {
            const double y = (t + 1.0) / 2.0;
            const double x1 = a4 + y * y;
            const cd d1 = cv.A0 * cv.A0 * cv.A0 * (I / 2.0) * cv.partial(x1, {4});
            const double z = y, yy = 1.0 / z, x2 = a4 + yy * yy;
            const cd d2 = cv.A0 * cv.A0 * cv.A0 * (I / 2.0) * cv.partial(x2, {4});
            return 0.5 * (basis(x1) * 2.0 / d1 + basis(x2) * 2.0 / (d2 * z * z));
        };
        int nodes = 0;
        double ch = 0.0;
        pd.infinity_leg = integrate_doubling(f, opt, &nodes, &ch);
        pd.nodes = std::max(pd.nodes, nodes);
        pd.refinement_change = std::max(pd.refinement_change, ch);
    }
    for (int al = 0; al < 2; ++al) {
        pd.K(al, 0) = pd.segment[1][al].real();
        pd.K(al, 1) = pd.segment[3][al].real();
        pd.Kbar(al, 0) = (pd.segment[0][al] / I).real();
        pd.Kbar(al, 1) = (pd.segment[2][al] / I).real();
    }
    pd.Kp.col(0) = pd.Kbar.col(0);
    pd.Kp.col(1) = pd.Kbar.col(0) + pd.Kbar.col(1);
    pd.G = (2.0 * pd.K).inverse();
    pd.tau = 2.0 * I * (pd.G * pd.Kp).cast<cd>();
    return pd;
}

int theta_order(const PeriodData& pd, const Vector2cd& /*v*/)
{
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * (pd.tau.imag() + pd.tau.imag().transpose()));
    const double lmin = es.eigenvalues().minCoeff();
    if (!(lmin > 0.0)) throw Error(Errc::NotConvergent, "imaginary part of tau is not positive definite");
    // the series is centred on its largest term, so the tail bound depends on Im tau only
    const double reach = std::sqrt(std::log(1e14) / (pi * lmin));
    return std::max(8, int(std::ceil(reach)) + 2);
}

cd theta(const PeriodData& pd, const Vector2cd& v, const Characteristic& ch) { return theta_sum(pd, v, ch).value; }

CharacteristicReport characteristics(const PeriodData& pd)
{
    CharacteristicReport rep;
    Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
    M.block<2, 2>(0, 0) = pd.K;
    M.block<2, 2>(2, 2) = pd.Kp;
    const Eigen::FullPivLU<Eigen::Matrix4d> lu(M);
    std::array<std::array<int, 4>, 5> ints{};
    for (int lam = 0; lam < 5; ++lam) {
        // ∫_∞^{a_λ} = -(∫_{a_λ}^{a_4} + ∫_{a_4}^∞) = K m + i K' n
        Vector2cd integral = pd.infinity_leg;
        for (int j = lam; j < 4; ++j) integral += pd.segment[j];
        integral = -integral;
        Eigen::Vector4d rhs;
        rhs << integral.real(), integral.imag();
        const Eigen::Vector4d sol = lu.solve(rhs);
        rep.raw[lam] = sol;
        for (int i = 0; i < 4; ++i) {
            ints[lam][i] = int(std::lround(sol[i]));
            rep.max_roundoff = std::max(rep.max_roundoff, std::abs(sol[i] - ints[lam][i]));
        }
    }
    if (rep.max_roundoff > 1e-6)
        throw Error(Errc::NonIntegralCharacteristic,
                    "lattice coordinates miss integers by " + std::to_string(rep.max_roundoff));
    for (int lam = 0; lam < 5; ++lam) rep.all.push_back({std::to_string(lam), ints[lam]});
    rep.all.push_back({"5", {0, 0, 0, 0}});
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j) {
            const Eigen::Vector4i p = normalize_pair(ints[i], ints[j]);
            rep.all.push_back({std::to_string(i) + std::to_string(j), {p[0], p[1], p[2], p[3]}});
        }
    return rep;
}

const Characteristic& ThetaContext::ch(const std::string& label) const
{
    for (const auto& c : chars.all)
        if (c.label == label) return c;
    throw Error(Errc::ValueError, "unknown characteristic " + label);
}

cd ThetaContext::c(const std::string& label) const
{
    for (std::size_t i = 0; i < chars.all.size(); ++i)
        if (chars.all[i].label == label) return constants[i];
    throw Error(Errc::ValueError, "unknown characteristic " + label);
}

ThetaContext make_theta_context(double l1, double l, double c0, double k, const QuadratureOptions& opt)
{
    if (!(l1 > k && k > c0 && c0 > 0.0 && l * l < (3.0 * l1 - k) / 2.0))
        throw Error(Errc::RegimeViolated, "requires l1 > k > c0 > 0 and l^2 < (3 l1 - k)/2");
    ThetaContext ctx;
    ctx.l1 = l1;
    ctx.l = l;
    ctx.c0 = c0;
    ctx.k = k;
    ctx.quad = opt;
    ctx.curve = HyperellipticCurve::from_constants(l1, l, c0, k);
    ctx.e = {ctx.curve.a[3], ctx.curve.a[2], ctx.curve.a[0]};
    ctx.pd = periods(ctx.curve, opt);
    ctx.chars = characteristics(ctx.pd);
    for (const auto& ch : ctx.chars.all) ctx.constants.push_back(theta(ctx.pd, Vector2cd::Zero(), ch));
    auto c = [&](const char* s) { return ctx.c(s); };
    const double a31 = ctx.curve.a[3] - ctx.curve.a[1];
    ctx.C = std::pow(a31, 1.5) * c("01") * c("03") * c("12") * c("23") * c("14") * c("34") /
            (c("0") * c("0") * c("2") * c("2") * c("4") * c("4"));
    return ctx;
}

std::vector<ConstantIdentity> theta_constant_identities(const ThetaContext& ctx)
{
    auto c2 = [&](const char* s) {
        const cd z = ctx.c(s);
        return z * z;
    };
    const double e1 = ctx.e[0], e2 = ctx.e[1], e3 = ctx.e[2], k = ctx.k, l1 = ctx.l1;
    const cd den = c2("4") * c2("01") * c2("12");
    std::vector<ConstantIdentity> out = {
        {"(e1-e2)/k", (e1 - e2) / k, c2("2") * c2("03") * c2("34") / den, 0.0},
        {"(e1-e3)/k", (e1 - e3) / k, c2("0") * c2("23") * c2("34") / den, 0.0},
        {"(e2-e3)/k", (e2 - e3) / k, c2("5") * c2("14") * c2("34") / den, 0.0},
        {"(l1+e1)/k", (l1 + e1) / k,
         c2("5") * c2("23") / (c2("4") * c2("01")) - c2("2") * c2("14") / (c2("4") * c2("12")), 0.0},
        {"(l1+e2)/k", (l1 + e2) / k,
         c2("5") * c2("23") / (c2("4") * c2("01")) - c2("0") * c2("2") / (c2("01") * c2("12")), 0.0},
        {"(l1+e3)/k", (l1 + e3) / k,
         c2("5") * c2("03") / (c2("4") * c2("12")) - c2("0") * c2("2") / (c2("01") * c2("12")), 0.0},
    };
    for (auto& id : out) id.residual = std::abs(id.rhs - id.lhs) / std::max(1.0, std::abs(id.lhs));
    return out;
}

Vector2cd abel_map(const ThetaContext& ctx, double s1, double s2, int sg1, int sg2)
{
    const auto& a = ctx.curve.a;
    const HyperellipticCurve& cv = ctx.curve;
    const double sc = std::max(1.0, std::abs(a[4]));
    if (!(s1 >= a[3] - 1e-12 * sc && s1 <= a[4] + 1e-12 * sc && s2 <= a[1] + 1e-12 * sc))
        throw Error(Errc::OutsideWindow, "abel_map needs a3 <= s1 <= a4 and s2 <= a1");
    const double A3 = cv.A0 * cv.A0 * cv.A0;

    // ∫ from a_j to y inside [a_j, a_{j+1}] with x = a_j + H sin^2 φ
    auto leg_up = [&](int j, double y) -> Vector2cd {
        const double lo = a[j], H = a[j + 1] - a[j];
        const double ph1 = std::asin(std::sqrt(std::clamp((y - lo) / H, 0.0, 1.0)));
        if (ph1 == 0.0) return Vector2cd::Zero();
        auto f = [&](double t) -> Vector2cd {
            const double ph = (t + 1.0) / 2.0 * ph1;
            const double s = std::sin(ph);
            const double x = lo + H * s * s;
            return basis(x) * (ph1 / 2.0) * 8.0 / (A3 * I * cv.partial(x, {j, j + 1}));
        };
        return integrate_doubling(f, ctx.quad);
    };
    // ∫ from a0 down to y < a0 with x = a0 - t^2
    auto leg_below = [&](double y) -> Vector2cd {
        const double T = std::sqrt(a[0] - y);
        auto f = [&](double t) -> Vector2cd {
            const double tt = (t + 1.0) / 2.0 * T;
            const double x = a[0] - tt * tt;
            return basis(x) * (T / 2.0) * (-4.0) / (A3 * cv.partial(x, {0}));
        };
        return integrate_doubling(f, ctx.quad);
    };

    const Vector2cd u1 = leg_up(3, s1);
    const Vector2cd u2 = s2 >= a[0] ? Vector2cd(-ctx.pd.segment[0] + leg_up(0, s2))
                                    : Vector2cd(-ctx.pd.segment[0] + leg_below(s2));
    const Vector2cd u = double(sg1) * u1 + double(sg2) * u2;
    return ctx.pd.G.cast<cd>() * u;
}

PValues p_via_theta(const ThetaContext& ctx, const Vector2cd& v)
{
    const ThetaSum t5 = theta_sum(ctx.pd, v, ctx.ch("5"));
    if (std::abs(t5.value) < 1e-12 * t5.magnitude)
        throw Error(Errc::ThetaZeroDenominator, "theta_5 vanishes at v");
    auto c = [&](const char* s) { return ctx.c(s); };
    const cd C = ctx.C;
    const double sq = std::sqrt(ctx.curve.a[3] - ctx.curve.a[1]);
    const std::array<cd, 15> pref = {
        -I * C / sq * c("0") * c("2") * c("4") / (c("01") * c("12") * c("14")),
        -I * C / sq * c("5") * c("2") / (c("12") * c("23")),
        C / sq * c("5") * c("0") / (c("01") * c("03")),
        -C / sq * c("5") * c("4") / (c("14") * c("34")),
        C / sq * c("0") * c("2") * c("4") / (c("03") * c("23") * c("34")),
        I * C * c("5") / c("12"),
        -C * c("5") / c("01"),
        -C * c("5") / c("14"),
        -C,
        C * c("5") / c("4"),
        -C * c("5") / c("0"),
        C * c("5") / c("23"),
        -I * C * c("5") / c("2"),
        -I * C * c("5") / c("03"),
        -I * C * c("5") / c("34"),
    };
    const cd root_r0(0.0, 2.0);
    PValues pv;
    for (int q = 0; q < 15; ++q) {
        const Assignment& as = kTable[q];
        const cd val = pref[q] * theta(ctx.pd, v, ctx.ch(as.theta)) / t5.value;
        if (as.j == 0) {
            pv.P[as.i - 1] = val;
        } else {
            pv.Pab[as.i - 1][as.j - 1] = pv.Pab[as.j - 1][as.i - 1] = root_r0 * val;
        }
    }
    return pv;
}

const std::vector<ThetaAssignment>& theta_assignments()
{
    static const std::vector<ThetaAssignment> t = [] {
        std::vector<ThetaAssignment> out;
        for (const auto& as : kTable) out.push_back({as.quantity, as.theta, as.prefactor});
        return out;
    }();
    return t;
}

FunctionalDefects theta_functional_defects(const ThetaContext& ctx, std::uint64_t seed, int samples)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FunctionalDefects out;
    for (int n = 0; n < samples; ++n) {
        const Vector2cd v(cd(u(rng), 0.3 * u(rng)), cd(u(rng), 0.3 * u(rng)));
        for (const auto& ch : ctx.chars.all) {
            const cd t0 = theta(ctx.pd, v, ch);
            const double sc = std::max(1e-3, std::abs(t0));
            for (int al = 0; al < 2; ++al) {
                Vector2cd e = Vector2cd::Zero();
                e[al] = 1.0;
                const cd sgn_n = ch.c[2 + al] % 2 ? -1.0 : 1.0;
                out.integer_shift = std::max(out.integer_shift, std::abs(theta(ctx.pd, v + e, ch) - sgn_n * t0) / sc);
                const cd sgn_m = ch.c[al] % 2 ? -1.0 : 1.0;
                const cd f = sgn_m * std::exp(-I * pi * (2.0 * v[al] + ctx.pd.tau(al, al)));
                const cd shifted = theta(ctx.pd, v + ctx.pd.tau.col(al), ch);
                out.tau_shift = std::max(out.tau_shift, std::abs(shifted - f * t0) / (sc * std::abs(f)));
            }
        }
    }
    return out;
}

ThetaAgreement compare_p_via_theta(const ThetaContext& ctx, std::uint64_t seed, int samples)
{
    const RealCaseContext rc = context(ctx.l1, ctx.l, ctx.c0, ctx.k);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u1(rc.a[0], rc.a[3]), u2(rc.a[2] - 6.0, rc.a[2]);
    ThetaAgreement out;
    for (int n = 0; n < samples; ++n) {
        const double s1 = u1(rng), s2 = u2(rng);
        const PValues th = p_via_theta(ctx, abel_map(ctx, s1, s2));
        const PValues dv = p_values(rc, s1, s2);
        int q = 0;
        auto compare = [&](cd x, cd y) {
            const double sc = std::max(1.0, std::abs(y));
            out.square_error = std::max(out.square_error, std::abs(x * x - y * y) / (sc * sc));
            if (n == 0) out.signs[q] = (y / x).real() > 0 ? 1 : -1;
            out.signed_error = std::max(out.signed_error, std::abs(double(out.signs[q]) * x - y) / sc);
            ++q;
        };
        for (int i = 0; i < 5; ++i) compare(th.P[i], dv.P[i]);
        for (int i = 0; i < 5; ++i)
            for (int j = i + 1; j < 5; ++j) compare(th.Pab[i][j], dv.Pab[i][j]);
        ++out.samples;
    }
    return out;
}

AbelTrack abel_track(const ThetaContext& ctx, const Trajectory& tr, std::size_t stride)
{
    if (stride == 0) throw Error(Errc::ValueError, "stride must be positive");
    const QuarticData qd = quartic_data(ctx.c0, tr.states.front());
    const QuinticData qn = quintic_from_constants(qd.l1, qd.l, qd.c0, qd.k);
    const BranchTrack bt = track_branches(qd, qn, tr);
    const QuadratureReport qr = quadrature_residuals(qd, tr);
    const Eigen::Matrix2d im = ctx.pd.tau.imag(), re = ctx.pd.tau.real();

    AbelTrack out;
    for (std::size_t i = 0; i < tr.size(); i += stride) {
        if (bt.excluded[i]) continue;
        cd w1(0.0, 2.0), w2(0.0, 2.0);
        for (int k = 0; k < 5; ++k) {
            w1 *= bt.A[i][k];
            w2 *= bt.Bd[i][k];
        }
        w2 *= double(qr.sheet) / std::pow(bt.d[i], 5);
        const double sig = double(qr.sigma);
        const int sg1 = (sig * w1 / ctx.curve.sqrt_r(bt.s1[i])).real() >= 0.0 ? 1 : -1;
        const int sg2 = (sig * w2 / ctx.curve.sqrt_r(bt.s2[i])).real() >= 0.0 ? 1 : -1;
        Vector2cd v = abel_map(ctx, bt.s1[i], bt.s2[i], sg1, sg2);
        if (!out.v.empty()) {
            const std::size_t n = out.v.size();
            Vector2cd pred = out.v[n - 1];
            if (n >= 2) {
                const double dt0 = out.t[n - 1] - out.t[n - 2];
                pred += (out.v[n - 1] - out.v[n - 2]) * ((tr.t[i] - out.t[n - 1]) / dt0);
            }
            const Vector2cd D = v - pred;
            const Vector2d y = im.ldlt().solve(D.imag()).array().round().matrix();
            const Vector2d x = (D.real() - re * y).array().round().matrix();
            v -= x.cast<cd>() + ctx.pd.tau * y.cast<cd>();
        }
        out.t.push_back(tr.t[i]);
        out.v.push_back(v);
    }
    const std::size_t n = out.t.size();
    if (n < 3) throw Error(Errc::ValueError, "too few usable samples for a linear fit");
    Eigen::MatrixXd X(n, 2);
    Eigen::MatrixXd Y(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
        X(i, 0) = out.t[i];
        X(i, 1) = 1.0;
        Y(i, 0) = out.v[i][0].real();
        Y(i, 1) = out.v[i][0].imag();
        Y(i, 2) = out.v[i][1].real();
        Y(i, 3) = out.v[i][1].imag();
    }
    const Eigen::MatrixXd B = X.colPivHouseholderQr().solve(Y);
    out.fit = B.transpose();
    out.fit_residual = (X * B - Y).cwiseAbs().maxCoeff();
    out.expected_slope = ctx.pd.G.col(0).cast<cd>();
    out.slope_error = std::max({std::abs(out.fit(0, 0) - out.expected_slope[0].real()), std::abs(out.fit(1, 0)),
                                std::abs(out.fit(2, 0) - out.expected_slope[1].real()), std::abs(out.fit(3, 0))});
    return out;
}

}  // namespace kovtop

#include "kovtop/dopri5.hpp"

#include "kovtop/error.hpp"

#include <algorithm>
#include <cmath>

namespace kovtop {

namespace {

constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double beta = 0.04;
constexpr double safe = 0.9;
constexpr double facc1 = 1.0 / 0.2;  // 1/facmin
constexpr double facc2 = 1.0 / 10.0;  // 1/facmax

double err_norm(const Eigen::VectorXd& e, const Eigen::VectorXd& y, const Eigen::VectorXd& yn,
                double atol, double rtol)
{
    const Eigen::ArrayXd sk = atol + rtol * y.cwiseAbs().cwiseMax(yn.cwiseAbs()).array();
    return std::sqrt((e.array() / sk).square().mean());
}

double initial_step(const OdeRhs& f, double t0, const Eigen::VectorXd& y0,
                    const Eigen::VectorXd& k0, double dir, double hmax, double atol, double rtol)
{
    const Eigen::ArrayXd sk = atol + rtol * y0.cwiseAbs().array();
    const double dnf = std::sqrt((k0.array() / sk).square().mean());
    const double dny = std::sqrt((y0.array() / sk).square().mean());
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
    h = std::min(h, hmax);
    Eigen::VectorXd y1 = y0 + dir * h * k0, k1(y0.size());
    f(t0 + dir * h, y1, k1);
    const double der2 = std::sqrt(((k1 - k0).array() / sk).square().mean()) / h;
    const double der12 = std::max(der2, dnf);
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    return std::min({100.0 * h, h1, hmax});
}

}  // namespace

Dopri5Result dopri5(const OdeRhs& f, const Eigen::VectorXd& y0, double t0, double t1,
                    const std::vector<double>& samples, const Dopri5Options& opt,
                    const StepHook& hook)
{
    Dopri5Result res;
    const Eigen::Index n = y0.size();
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    const double hmin = 1e-14 * std::max(std::abs(t1), span);

    Eigen::VectorXd y = y0, yn(n), ytmp(n);
    Eigen::VectorXd k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
    f(t0, y, k1);

    std::size_t next = 0;
    auto emit = [&](double t, const Eigen::VectorXd& v) {
        res.t.push_back(t);
        res.y.push_back(v);
    };
    while (next < samples.size() && dir * (samples[next] - t0) <= 0.0) emit(samples[next++], y);
    if (span == 0.0) return res;

    double t = t0;
    double h = initial_step(f, t0, y, k1, dir, span, opt.atol, opt.rtol);
    double facold = 1e-4;
    bool last_rejected = false;
    long steps = 0;

    while (dir * (t1 - t) > 0.0) {
        if (++steps > opt.max_steps) throw Error(Errc::StepSizeUnderflow, "step budget exhausted");
        double target = t1;
        if (opt.exact_sampling && next < samples.size()) target = samples[next];
        bool land = false;
        const double hprop = h;
        if (h >= std::abs(target - t) * (1.0 - 1e-12)) {
            h = std::abs(target - t);
            land = true;
        }
        if (h < hmin) throw Error(Errc::StepSizeUnderflow, "step below 1e-14*t_end");
        const double hs = dir * h;

        ytmp = y + hs * a21 * k1;
        f(t + c2 * hs, ytmp, k2);
        ytmp = y + hs * (a31 * k1 + a32 * k2);
        f(t + c3 * hs, ytmp, k3);
        ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
        f(t + c4 * hs, ytmp, k4);
        ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        f(t + c5 * hs, ytmp, k5);
        ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        const double tn = land ? target : t + hs;
        f(tn, ytmp, k6);
        yn = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        f(tn, yn, k7);

        const Eigen::VectorXd ev = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double err = err_norm(ev, y, yn, opt.atol, opt.rtol);

        const double expo1 = 0.2 - beta * 0.75;
        const double fac11 = std::pow(std::max(err, 1e-300), expo1);
        if (err <= 1.0) {
            double fac = fac11 / std::pow(facold, beta);
            fac = std::max(facc2, std::min(facc1, fac / safe));
            facold = std::max(err, 1e-4);
            ++res.accepted;

            if (!opt.exact_sampling) {
                // dense output on [t, tn]
                const Eigen::VectorXd ydiff = yn - y;
                const Eigen::VectorXd bspl = hs * k1 - ydiff;
                const Eigen::VectorXd r4 = ydiff - hs * k7 - bspl;
                const Eigen::VectorXd r5 =
                    hs * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
                while (next < samples.size() && dir * (samples[next] - tn) <= 0.0) {
                    const double th = (samples[next] - t) / hs;
                    const double th1 = 1.0 - th;
                    emit(samples[next],
                         y + th * (ydiff + th1 * (bspl + th * (r4 + th1 * r5))));
                    ++next;
                }
            }

            y = yn;
            t = tn;
            if (hook) hook(y);
            f(t, y, k1);
            if (opt.exact_sampling)
                while (next < samples.size() && dir * (samples[next] - t) <= 0.0) emit(samples[next++], y);

            double hnew = h / fac;
            if (last_rejected) hnew = std::min(hnew, h);
            last_rejected = false;
            // a step shortened only to land on a target should not shrink the next one
            h = land ? std::max(hnew, hprop) : hnew;
            h = std::min(h, span);
        } else {
            h = h / std::min(facc1, fac11 / safe);
            last_rejected = true;
            ++res.rejected;
        }
    }
    while (next < samples.size()) emit(samples[next++], y);
    return res;
}

}  // namespace kovtop

#include "kovtop/cli_io.hpp"

#include "kovtop/hyperelliptic.hpp"
#include "kovtop/painleve.hpp"
#include "kovtop/quartic_class.hpp"
#include "kovtop/reconstruction.hpp"
#include "kovtop/separation.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#ifndef KOVTOP_VERSION
#define KOVTOP_VERSION "0.0.0"
#endif

namespace kovtop {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void schema(const std::string& msg) { throw Error(Errc::SchemaError, msg); }
[[noreturn]] void value(const std::string& msg) { throw Error(Errc::ValueError, msg); }

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

/// Reads keys of one JSON object and rejects whatever was not read.
class Section {
public:
    Section(const ojson& obj, std::string path) : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) schema("'" + (path_.empty() ? std::string("<root>") : path_) + "' must be an object");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    const ojson* raw(const std::string& key)
    {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    double number(const std::string& key, double fallback) { return number_opt(key).value_or(fallback); }

    double number_req(const std::string& key)
    {
        auto v = number_opt(key);
        if (!v) schema("missing key '" + join(path_, key) + "'");
        return *v;
    }

    std::optional<double> number_opt(const std::string& key)
    {
        const ojson* j = raw(key);
        if (!j) return std::nullopt;
        const std::string where = join(path_, key);
        if (j->is_string()) {
            const std::string s = j->get<std::string>();
            for (const char* nf : {"nan", "NaN", "inf", "-inf", "Infinity", "-Infinity"})
                if (s == nf) value("'" + where + "' is not finite");
            schema("'" + where + "' must be a number");
        }
        if (!j->is_number()) schema("'" + where + "' must be a number");
        const double d = j->get<double>();
        if (!std::isfinite(d)) value("'" + where + "' is not finite");
        return d;
    }

    int integer(const std::string& key, int fallback, int lo, int hi)
    {
        const ojson* j = raw(key);
        if (!j) return fallback;
        const std::string where = join(path_, key);
        if (!j->is_number_integer()) schema("'" + where + "' must be an integer");
        const auto v = j->get<long long>();
        if (v < lo || v > hi)
            value("'" + where + "' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return int(v);
    }

    bool boolean(const std::string& key, bool fallback)
    {
        const ojson* j = raw(key);
        if (!j) return fallback;
        if (!j->is_boolean()) schema("'" + join(path_, key) + "' must be true or false");
        return j->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback)
    {
        const ojson* j = raw(key);
        if (!j) return fallback;
        if (!j->is_string()) schema("'" + join(path_, key) + "' must be a string");
        return j->get<std::string>();
    }

    std::optional<Section> child(const std::string& key)
    {
        const ojson* j = raw(key);
        if (!j) return std::nullopt;
        return Section(*j, join(path_, key));
    }

    void finish() const
    {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key())) schema("unknown key '" + join(path_, it.key()) + "'");
    }

private:
    const ojson& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

void positive(double v, const char* name)
{
    if (!(v > 0.0)) value(std::string("'") + name + "' must be positive");
}

ojson cplx(cd z) { return ojson::array({z.real(), z.imag()}); }

ojson matrix(const Eigen::MatrixXd& m)
{
    ojson rows = ojson::array();
    for (int i = 0; i < m.rows(); ++i) {
        ojson r = ojson::array();
        for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

ojson state_json(const MotionState& s)
{
    return {{"p", s.p}, {"q", s.q}, {"r", s.r}, {"gamma", s.gamma}, {"gamma1", s.gamma1}, {"gamma2", s.gamma2}};
}

MotionState random_state(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    MotionState s{nd(rng), nd(rng), nd(rng), nd(rng), nd(rng), nd(rng)};
    const double n = s.vertical().norm();
    s.gamma /= n;
    s.gamma1 /= n;
    s.gamma2 /= n;
    return s;
}

MotionState initial_state(const RunConfig& c)
{
    if (c.state) return *c.state;
    if (c.target) return state_from_invariants(c.c0, IntegralSet{c.target->l1, c.target->l, c.target->k * c.target->k, 1.0}, c.seed);
    return random_state(c.seed);
}

Trajectory simulate(const RunConfig& c, const MotionState& s0)
{
    IntegrateOptions opt;
    opt.tol = c.tol;
    opt.sample_step = c.sample_step;
    opt.exact_sampling = c.exact_sampling;
    opt.orientation = c.orientation;
    opt.renormalize = c.renormalize;
    return c.reduced ? integrate_kovalevskaya(c.c0, s0, c.t_end, opt) : integrate(c.body, s0, c.t_end, opt);
}

void require_reduced(const RunConfig& c)
{
    if (!c.reduced) schema("command '" + c.command + "' needs a body given by 'c0'");
}

/// Energy, area and |γ|^2 of the general equations, relative drift over the samples.
Eigen::Vector3d general_drift(const BodyParameters& bp, const Trajectory& tr)
{
    auto ints = [&](const MotionState& s) {
        const double h = 0.5 * (bp.A * s.p * s.p + bp.B * s.q * s.q + bp.C * s.r * s.r) -
                         bp.Mg * (bp.x0 * s.gamma + bp.y0 * s.gamma1 + bp.z0 * s.gamma2);
        const double a = bp.A * s.p * s.gamma + bp.B * s.q * s.gamma1 + bp.C * s.r * s.gamma2;
        return Eigen::Vector3d(h, a, s.vertical().squaredNorm());
    };
    const Eigen::Vector3d i0 = ints(tr.states.front());
    Eigen::Vector3d d = Eigen::Vector3d::Zero();
    for (const auto& s : tr.states) d = d.cwiseMax((ints(s) - i0).cwiseAbs().cwiseQuotient(i0.cwiseAbs().cwiseMax(1.0)));
    return d;
}

class CsvWriter {
public:
    explicit CsvWriter(const fs::path& p) : out_(p, std::ios::binary)
    {
        if (!out_) throw Error(Errc::ValueError, "cannot write " + p.string());
    }
    void header(std::initializer_list<const char*> cols)
    {
        bool first = true;
        for (const char* c : cols) {
            out_ << (first ? "" : ",") << c;
            first = false;
        }
        out_ << '\n';
    }
    void row(const std::vector<double>& vals)
    {
        for (std::size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << format_number(vals[i]);
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

void write_plot(const fs::path& path, const std::string& csv, const std::string& title,
                const std::vector<std::pair<int, std::string>>& series, bool logy = false)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::ValueError, "cannot write " + path.string());
    out << "# gnuplot script\n";
    out << "set datafile separator ','\n";
    out << "set key autotitle columnhead\n";
    out << "set title '" << title << "'\n";
    out << "set xlabel 't'\n";
    if (logy) out << "set logscale y\n";
    out << "set terminal pngcairo size 1200,800\n";
    out << "set output '" << fs::path(csv).replace_extension(".png").string() << "'\n";
    out << "plot ";
    for (std::size_t i = 0; i < series.size(); ++i)
        out << (i ? ", \\\n     " : "") << "'" << csv << "' using 1:" << series[i].first << " with lines title '"
            << series[i].second << "'";
    out << '\n';
}

struct Outcome {
    ojson results;
    bool passed = true;
};

Outcome cmd_simulate(const RunConfig& c, const fs::path& dir, std::vector<fs::path>& art)
{
    const MotionState s0 = initial_state(c);
    const Trajectory tr = simulate(c, s0);
    Outcome o;
    o.results["initial_state"] = state_json(s0);
    o.results["samples"] = tr.size();
    o.results["accepted_steps"] = tr.accepted;
    o.results["rejected_steps"] = tr.rejected;
    double worst = 0.0;
    if (c.reduced) {
        const IntegralSet is = first_integrals(c.c0, s0);
        o.results["integrals"] = {{"l1", is.l1}, {"l", is.l}, {"k_sq", is.k_sq}, {"norm", is.norm}};
        const Eigen::Vector4d d = integral_drift(c.c0, tr);
        o.results["drift"] = {{"l1", d[0]}, {"l", d[1]}, {"k_sq", d[2]}, {"norm", d[3]}};
        worst = d.maxCoeff();
    } else {
        const Eigen::Vector3d d = general_drift(c.body, tr);
        o.results["drift"] = {{"energy", d[0]}, {"area", d[1]}, {"norm", d[2]}};
        worst = d.maxCoeff();
    }
    o.passed = worst < c.checks.drift;
    if (!tr.orientation.empty()) {
        double orth = 0.0, det = 0.0;
        for (const auto& m : tr.orientation) {
            orth = std::max(orth, (m * m.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff());
            det = std::max(det, std::abs(m.determinant() - 1.0));
        }
        o.results["orientation"] = {{"orthogonality_defect", orth}, {"determinant_defect", det}};
        o.passed = o.passed && orth < c.checks.drift && det < c.checks.drift;
    }

    const fs::path csv = dir / c.csv;
    CsvWriter w(csv);
    if (c.reduced) {
        w.header({"t", "p", "q", "r", "gamma", "gamma1", "gamma2", "s1", "s2"});
        const QuarticData qd = quartic_data(c.c0, s0);
        std::optional<SeparationVariables> prev;
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const MotionState& s = tr.states[i];
            double s1 = std::nan(""), s2 = std::nan("");
            try {
                const SeparationVariables sv = s_from_x(qd, to_complex_coords(s, c.c0), prev);
                s1 = sv.s1.real();
                s2 = sv.s2.real();
                prev = sv;
            } catch (const Error&) {
                prev.reset();
            }
            w.row({tr.t[i], s.p, s.q, s.r, s.gamma, s.gamma1, s.gamma2, s1, s2});
        }
    } else {
        w.header({"t", "p", "q", "r", "gamma", "gamma1", "gamma2"});
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const MotionState& s = tr.states[i];
            w.row({tr.t[i], s.p, s.q, s.r, s.gamma, s.gamma1, s.gamma2});
        }
    }
    art.push_back(csv);
    write_plot(dir / c.plot, c.csv, "trajectory", {{2, "p"}, {3, "q"}, {4, "r"}, {5, "gamma"}, {6, "gamma1"}, {7, "gamma2"}});
    art.push_back(dir / c.plot);
    return o;
}

ojson verdict_json(const PainleveVerdict& v)
{
    ojson j;
    j["verdict"] = to_string(v.kind);
    j["passes"] = v.passes;
    j["integer_roots"] = v.integer_union;
    j["note"] = v.note;
    ojson fam = ojson::array();
    for (const auto& f : v.families) {
        ojson roots = ojson::array();
        for (int i = 0; i < f.spectrum.roots.size(); ++i) roots.push_back(cplx(f.spectrum.roots[i]));
        fam.push_back({{"family", to_string(f.balance.family)},
                       {"lambda", cplx(f.balance.lambda)},
                       {"signs", f.balance.signs},
                       {"eps", f.balance.eps},
                       {"roots", roots},
                       {"integer_roots", f.spectrum.integer_roots},
                       {"kernel_dims", f.spectrum.kernel_dims},
                       {"free_constants", f.spectrum.free_constants}});
    }
    j["families"] = fam;
    return j;
}

Outcome cmd_painleve(const RunConfig& c)
{
    const BodyParameters bp = c.reduced ? BodyParameters::kovalevskaya(c.c0) : c.body;
    Outcome o;
    o.results = verdict_json(painleve_test(bp, c.int_tol));
    if (c.generic_samples > 0) {
        std::mt19937_64 rng(c.seed);
        std::uniform_real_distribution<double> u(0.5, 3.0);
        std::normal_distribution<double> nd;
        std::vector<BodyParameters> bodies(std::size_t(c.generic_samples));
        for (auto& b : bodies) {
            const double A = u(rng), B = u(rng), C = u(rng);
            const double x0 = nd(rng), y0 = nd(rng), z0 = nd(rng);
            b = BodyParameters{A, B, C, 1.0, x0, y0, z0};
        }
        std::vector<std::string> kinds(bodies.size());
        parallel_for(bodies.size(), [&](std::size_t i) {
            try {
                kinds[i] = to_string(painleve_test(bodies[i], c.int_tol).kind);
            } catch (const Error& e) {
                kinds[i] = to_string(e.code());
            }
        });
        const auto failed = std::count(kinds.begin(), kinds.end(), std::string(to_string(PainleveCase::Fails)));
        o.results["generic"] = {{"samples", bodies.size()}, {"failed", failed}, {"verdicts", kinds}};
        o.passed = failed == long(bodies.size());
    }
    return o;
}

Outcome cmd_classify(const RunConfig& c)
{
    if (!c.quartic) schema("missing key 'quartic'");
    const QuarticSpec& q = *c.quartic;
    const QuarticInvariants qi = quartic_invariants(q.l1, q.k0, q.l0);
    const RootClass rc = classify(q.l1, q.k0, q.l0);
    const Eigen::Vector4cd roots = numeric_roots(q.l1, q.k0, q.l0);
    const int n = real_root_count(roots);
    const ThresholdPair th = thresholds(q.l1, q.k0);
    Outcome o;
    o.results["class"] = to_string(rc);
    o.results["invariants"] = {{"g2", qi.g2}, {"g3", qi.g3}, {"D", qi.D}, {"E", qi.E}, {"G", qi.G}};
    o.results["thresholds"] = {{"l0p_sq", cplx(th.l0p_sq)}, {"l0pp_sq", cplx(th.l0pp_sq)}};
    ojson r = ojson::array();
    for (int i = 0; i < 4; ++i) r.push_back(cplx(roots[i]));
    o.results["roots"] = r;
    o.results["real_root_count"] = n;
    if (rc != RootClass::Degenerate) {
        const int expect = rc == RootClass::FourReal ? 4 : rc == RootClass::TwoRealTwoImaginary ? 2 : 0;
        o.results["oracle_agrees"] = n == expect;
        o.passed = n == expect;
    }
    return o;
}

Outcome cmd_separate(const RunConfig& c, const fs::path& dir, std::vector<fs::path>& art)
{
    require_reduced(c);
    const MotionState s0 = initial_state(c);
    const QuarticData qd = quartic_data(c.c0, s0);
    const Trajectory tr = simulate(c, s0);
    const QuadratureReport rep = quadrature_residuals(qd, tr);
    std::size_t ok = 0;
    double worst_used = 0.0;
    for (std::size_t i = 0; i < rep.t.size(); ++i) {
        if (rep.excluded[i]) continue;
        const double r = std::max(rep.res_a[i], rep.res_b[i]);
        worst_used = std::max(worst_used, r);
        if (r < c.checks.quadrature) ++ok;
    }
    const double frac = rep.n_used ? double(ok) / double(rep.n_used) : 0.0;

    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> nd;
    double eq6 = 0.0, w2 = 0.0, vel = 0.0;
    const double ksc = std::max(1.0, qd.k * qd.k);
    for (int i = 0; i < c.identity_samples; ++i) {
        const cd x1(nd(rng), nd(rng)), x2(nd(rng), nd(rng));
        const double sc = qd.scale(x1, x2);
        eq6 = std::max(eq6, std::abs(quartic_identity_residual(qd, x1, x2)) / sc);
        const cd a = w_squared(qd, x1, x2, WRoute::Eq7);
        const cd b = w_squared(qd, x1, x2, WRoute::FourFactor);
        const cd d = w_squared(qd, x1, x2, WRoute::FromS);
        w2 = std::max({w2, std::abs(a - b) / (sc * ksc * ksc), std::abs(a - d) / (sc * ksc * ksc)});
        const MotionState rs = random_state(rng());
        vel = std::max(vel, velocity_relation_residual(quartic_data(c.c0, rs), rs));
    }

    Outcome o;
    o.results["constants"] = {{"l1", qd.l1}, {"l", qd.l}, {"c0", qd.c0}, {"k", qd.k}};
    o.results["quadrature"] = {{"samples_used", rep.n_used}, {"samples_excluded", rep.n_excluded},
                               {"within_tolerance", ok}, {"fraction", frac}, {"max_residual", worst_used},
                               {"sigma", rep.sigma}, {"sheet", rep.sheet}, {"imag_residue", rep.imag_residue}};
    o.results["identities"] = {{"samples", c.identity_samples}, {"quartic_product", eq6},
                               {"w_squared_routes", w2}, {"velocity_relation", vel}};
    o.passed = frac >= c.checks.fraction && eq6 < c.checks.identity && w2 < c.checks.identity && vel < c.checks.identity;

    const fs::path csv = dir / c.csv;
    CsvWriter w(csv);
    w.header({"t", "res_a", "res_b", "excluded"});
    for (std::size_t i = 0; i < rep.t.size(); ++i) w.row({rep.t[i], rep.res_a[i], rep.res_b[i], rep.excluded[i] ? 1.0 : 0.0});
    art.push_back(csv);
    write_plot(dir / c.plot, c.csv, "quadrature residuals", {{2, "res_a"}, {3, "res_b"}}, true);
    art.push_back(dir / c.plot);
    return o;
}

Outcome cmd_reconstruct(const RunConfig& c, const fs::path& dir, std::vector<fs::path>& art)
{
    require_reduced(c);
    const MotionState s0 = initial_state(c);
    const QuarticData qd = quartic_data(c.c0, s0);
    const RealCaseContext ctx = context(qd.l1, qd.l, qd.c0, qd.k);
    const Trajectory tr = simulate(c, s0);
    const RoundTripReport rt = round_trip(c.c0, tr, c.checks.round_trip, c.checks.margin);

    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> u1(ctx.a[0], ctx.a[3]), u2(ctx.a[2] - 6.0, ctx.a[2]);
    std::array<double, 6> id{};
    for (int n = 0; n < c.identity_samples; ++n) {
        const double s1 = u1(rng), s2 = u2(rng);
        const IdentityReport r = identity_suite(ctx, s1, s2);
        for (int i = 0; i < 6; ++i) id[i] = std::max(id[i], r.max_residual[i]);
    }

    Outcome o;
    o.results["constants"] = {{"l1", qd.l1}, {"l", qd.l}, {"c0", qd.c0}, {"k", qd.k}};
    o.results["branch_points"] = {{"e1", ctx.a[0]}, {"e2", ctx.a[1]}, {"e3", ctx.a[2]}, {"k1", ctx.a[3]}, {"k2", ctx.a[4]}};
    o.results["round_trip"] = {{"samples_used", rt.n_used}, {"within_tolerance", rt.n_ok}, {"fraction", rt.fraction_ok()},
                               {"max_error", rt.max_error}, {"imag_residue", rt.imag_residue},
                               {"signs_a", rt.signs.a}, {"signs_b", rt.signs.b}};
    o.results["identities"] = {{"samples", c.identity_samples}, {"max_residual", id}};
    ojson formulas = ojson::array(), fallback = ojson::array();
    for (const auto& f : reconstruction_formulas()) {
        formulas.push_back({{"component", f.component}, {"status", to_string(f.status)}, {"detail", f.detail}});
        if (f.status == FormulaStatus::IntegralFallback) fallback.push_back(f.component);
    }
    o.results["formulas"] = formulas;
    o.results["fallback_formulas"] = fallback;
    o.passed = rt.fraction_ok() >= c.checks.fraction && *std::max_element(id.begin(), id.end()) < c.checks.identity;

    const fs::path csv = dir / c.csv;
    CsvWriter w(csv);
    w.header({"t", "error", "excluded"});
    for (std::size_t i = 0; i < rt.t.size(); ++i) w.row({rt.t[i], rt.error[i], rt.excluded[i] ? 1.0 : 0.0});
    art.push_back(csv);
    write_plot(dir / c.plot, c.csv, "round-trip error", {{2, "error"}}, true);
    art.push_back(dir / c.plot);
    return o;
}

Outcome cmd_theta(const RunConfig& c, const fs::path& dir, std::vector<fs::path>& art)
{
    require_reduced(c);
    const MotionState s0 = initial_state(c);
    const QuarticData qd = quartic_data(c.c0, s0);
    const ThetaContext ctx = make_theta_context(qd.l1, qd.l, qd.c0, qd.k, QuadratureOptions{c.quad_tol, c.quad_min_nodes, c.quad_max_nodes});
    const Eigen::Matrix2cd& tau = ctx.pd.tau;
    const double sym = std::abs(tau(0, 1) - tau(1, 0));
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(tau.imag()).eigenvalues().minCoeff();
    const FunctionalDefects fd = theta_functional_defects(ctx, c.seed, 100);
    const auto ids = theta_constant_identities(ctx);
    const ThetaAgreement ag = compare_p_via_theta(ctx, c.seed, c.theta_samples);
    const Trajectory tr = simulate(c, s0);
    const AbelTrack at = abel_track(ctx, tr, std::size_t(c.abel_stride));

    Outcome o;
    o.results["constants"] = {{"l1", qd.l1}, {"l", qd.l}, {"c0", qd.c0}, {"k", qd.k}};
    o.results["branch_points"] = ctx.curve.a;
    o.results["quadrature_nodes"] = ctx.pd.nodes;
    o.results["refinement_change"] = ctx.pd.refinement_change;
    o.results["K"] = matrix(ctx.pd.K);
    o.results["K_prime"] = matrix(ctx.pd.Kp);
    o.results["G"] = matrix(ctx.pd.G);
    o.results["tau_real"] = matrix(tau.real());
    o.results["tau_imag"] = matrix(tau.imag());
    o.results["tau_symmetry_defect"] = sym;
    o.results["tau_imag_min_eigenvalue"] = lmin;
    o.results["functional_equations"] = {{"integer_shift", fd.integer_shift}, {"tau_shift", fd.tau_shift}};
    ojson chars = ojson::array();
    for (const auto& ch : ctx.chars.all) chars.push_back({{"label", ch.label}, {"c", ch.c}, {"odd", ch.odd()}});
    o.results["characteristics"] = chars;
    o.results["characteristic_roundoff"] = ctx.chars.max_roundoff;
    ojson idj = ojson::array();
    double id_worst = 0.0;
    for (const auto& id : ids) {
        idj.push_back({{"name", id.name}, {"lhs", id.lhs}, {"rhs", cplx(id.rhs)}, {"residual", id.residual}});
        id_worst = std::max(id_worst, id.residual);
    }
    o.results["constant_identities"] = idj;
    ojson table = ojson::array();
    const auto& asg = theta_assignments();
    for (std::size_t i = 0; i < asg.size(); ++i)
        table.push_back({{"quantity", asg[i].quantity}, {"theta", asg[i].theta}, {"prefactor", asg[i].prefactor},
                         {"sign", ag.signs[i]}});
    o.results["theta_assignments"] = table;
    o.results["p_via_theta"] = {{"samples", ag.samples}, {"square_error", ag.square_error}, {"signed_error", ag.signed_error}};
    o.results["abel_fit"] = {{"points", at.t.size()}, {"residual", at.fit_residual}, {"slope_error", at.slope_error},
                             {"slope", {cplx(at.expected_slope[0]), cplx(at.expected_slope[1])}}};
    bool integral = ctx.chars.max_roundoff < 1e-6;
    for (const auto& ch : ctx.chars.all)
        for (int i = 0; i < 4; ++i) integral = integral && (i < 2 ? (ch.c[i] == 0 || ch.c[i] == -1) : (ch.c[i] == 0 || ch.c[i] == 1));
    o.passed = sym < 1e-10 && lmin > 0.0 && fd.integer_shift < 1e-12 && fd.tau_shift < 1e-12 && integral &&
               id_worst < c.checks.theta_identity && ag.signed_error < c.checks.theta_p && at.fit_residual < c.checks.abel_fit;

    const fs::path csv = dir / c.csv;
    CsvWriter w(csv);
    w.header({"t", "re_v1", "im_v1", "re_v2", "im_v2"});
    for (std::size_t i = 0; i < at.t.size(); ++i)
        w.row({at.t[i], at.v[i][0].real(), at.v[i][0].imag(), at.v[i][1].real(), at.v[i][1].imag()});
    art.push_back(csv);
    write_plot(dir / c.plot, c.csv, "abel map", {{2, "re v1"}, {3, "im v1"}, {4, "re v2"}, {5, "im v2"}});
    art.push_back(dir / c.plot);
    return o;
}

Outcome cmd_design(const RunConfig& c)
{
    if (!c.mount) schema("missing key 'mount'");
    const MountSpec s = design_mount(*c.mount);
    const MountReport r = verify_mount(*c.mount, s);
    Outcome o;
    o.results["mount"] = {{"a", s.a}, {"b", s.b}, {"c", s.c}, {"A", s.A}, {"B", s.B}, {"C", s.C}};
    o.results["verification"] = {{"defect_B", r.defect_B}, {"defect_C", r.defect_C},
                                 {"products_of_inertia", r.products_of_inertia}, {"kovalevskaya", r.kovalevskaya},
                                 {"witnesses", r.witnesses}};
    o.passed = r.kovalevskaya && std::abs(r.defect_B) < 1e-14 * c.mount->A1 * 10 && std::abs(r.defect_C) < 1e-14 * c.mount->A1 * 10;
    return o;
}

std::string default_stem(const std::string& command)
{
    if (command == "simulate") return "trajectory";
    if (command == "separate-check") return "quadrature";
    if (command == "reconstruct-check") return "roundtrip";
    if (command == "theta-check") return "abel";
    return command;
}

}  // namespace

const std::vector<std::string>& commands()
{
    static const std::vector<std::string> c{"simulate", "painleve-test", "classify", "separate-check",
                                            "reconstruct-check", "theta-check", "design-model"};
    return c;
}

std::string tool_version() { return KOVTOP_VERSION; }

std::string format_number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

unsigned worker_count()
{
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("KOVTOP_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) n = std::min<unsigned>(n, unsigned(v));
    }
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body)
{
    const unsigned workers = std::min<std::size_t>(worker_count(), std::max<std::size_t>(n, 1));
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    auto work = [&] {
        for (std::size_t i; (i = next++) < n;) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

int exit_code(Errc code) noexcept
{
    switch (code) {
    case Errc::SchemaError:
    case Errc::ValueError:
        return 2;
    case Errc::NotFourRealRegime:
    case Errc::RealityWindowViolated:
    case Errc::RegimeViolated:
    case Errc::ConditionViolated:
    case Errc::NotRealizable:
    case Errc::DegenerateInertia:
    case Errc::DegenerateQuintic:
    case Errc::NotFound:
        return 4;
    default:
        return 3;
    }
}

RunConfig parse_config(const std::string& text, const std::string& command, std::optional<std::uint64_t> seed)
{
    ojson root;
    try {
        root = ojson::parse(text);
    } catch (const nlohmann::json::out_of_range& e) {
        value(std::string("config: ") + e.what());
    } catch (const nlohmann::json::exception& e) {
        schema(std::string("config: ") + e.what());
    }
    RunConfig c;
    Section top(root, "");
    c.command = top.string("command", command);
    if (c.command.empty()) c.command = command;
    if (!command.empty() && c.command != command)
        schema("config names command '" + c.command + "' but '" + command + "' was requested");
    if (std::find(commands().begin(), commands().end(), c.command) == commands().end())
        schema("unknown command '" + c.command + "'");

    if (auto b = top.child("body")) {
        const bool general = b->has("A") || b->has("B") || b->has("C") || b->has("Mg") || b->has("x0") ||
                             b->has("y0") || b->has("z0");
        if (general && b->has("c0")) schema("'body' mixes 'c0' with general parameters");
        if (general) {
            c.reduced = false;
            BodyParameters bp;
            bp.A = b->number_req("A");
            bp.B = b->number_req("B");
            bp.C = b->number_req("C");
            bp.Mg = b->number("Mg", 1.0);
            bp.x0 = b->number("x0", 0.0);
            bp.y0 = b->number("y0", 0.0);
            bp.z0 = b->number("z0", 0.0);
            if (!bp.valid()) value("'body' moments must be positive");
            c.body = bp;
        } else {
            c.c0 = b->number("c0", 1.0);
            positive(c.c0, "body.c0");
            c.body = BodyParameters::kovalevskaya(c.c0);
        }
        b->finish();
    }
    if (auto s = top.child("state")) {
        MotionState st{s->number_req("p"), s->number_req("q"), s->number_req("r"),
                       s->number_req("gamma"), s->number_req("gamma1"), s->number_req("gamma2")};
        if (st.vertical().norm() == 0.0) value("'state' needs a nonzero vertical");
        c.state = st;
        s->finish();
    }
    if (auto t = top.child("target")) {
        if (c.state) schema("give either 'state' or 'target', not both");
        if (!c.reduced) schema("'target' needs a body given by 'c0'");
        c.target = Targets{t->number_req("l1"), t->number_req("l"), t->number_req("k")};
        t->finish();
    }
    c.t_end = top.number("t_end", c.t_end);
    c.tol = top.number("tol", c.tol);
    positive(c.tol, "tol");
    c.sample_step = top.number("sample_step", c.sample_step);
    if (c.sample_step < 0.0) value("'sample_step' must not be negative");
    c.exact_sampling = top.boolean("exact_sampling", c.exact_sampling);
    c.orientation = top.boolean("orientation", c.orientation);
    c.renormalize = top.boolean("renormalize", c.renormalize);
    if (const ojson* j = top.raw("seed")) {
        if (!j->is_number_unsigned()) schema("'seed' must be a nonnegative integer");
        c.seed = j->get<std::uint64_t>();
    }
    if (seed) c.seed = *seed;

    if (auto q = top.child("quartic")) {
        c.quartic = QuarticSpec{q->number_req("l1"), q->number_req("k0"), q->number_req("l0")};
        q->finish();
    }
    if (auto m = top.child("mount")) {
        c.mount = InertiaTriple{m->number_req("A1"), m->number_req("B1"), m->number_req("C1"), m->number("M", 1.0)};
        positive(c.mount->M, "mount.M");
        m->finish();
    }
    if (auto p = top.child("painleve")) {
        c.int_tol = p->number("int_tol", c.int_tol);
        positive(c.int_tol, "painleve.int_tol");
        c.generic_samples = p->integer("generic_samples", c.generic_samples, 0, 1000000);
        p->finish();
    }
    if (auto th = top.child("theta")) {
        c.theta_samples = th->integer("samples", c.theta_samples, 1, 1000000);
        c.abel_stride = th->integer("abel_stride", c.abel_stride, 1, 1000000);
        c.quad_tol = th->number("quad_tol", c.quad_tol);
        if (c.quad_tol < 0.0) value("'theta.quad_tol' must not be negative");
        c.quad_min_nodes = th->integer("min_nodes", c.quad_min_nodes, 2, 1 << 16);
        c.quad_max_nodes = th->integer("max_nodes", c.quad_max_nodes, c.quad_min_nodes, 1 << 16);
        th->finish();
    }
    c.identity_samples = top.integer("identity_samples", c.identity_samples, 0, 100000000);
    if (auto ch = top.child("checks")) {
        CheckTolerances& t = c.checks;
        t.identity = ch->number("identity", t.identity);
        t.quadrature = ch->number("quadrature", t.quadrature);
        t.round_trip = ch->number("round_trip", t.round_trip);
        t.margin = ch->number("margin", t.margin);
        t.theta_identity = ch->number("theta_identity", t.theta_identity);
        t.theta_p = ch->number("theta_p", t.theta_p);
        t.abel_fit = ch->number("abel_fit", t.abel_fit);
        t.fraction = ch->number("fraction", t.fraction);
        t.drift = ch->number("drift", t.drift);
        for (double v : {t.identity, t.quadrature, t.round_trip, t.theta_identity, t.theta_p, t.abel_fit, t.drift})
            positive(v, "checks");
        if (t.margin < 0.0 || t.fraction < 0.0 || t.fraction > 1.0) value("'checks.margin' or 'checks.fraction' out of range");
        ch->finish();
    }
    const std::string stem = default_stem(c.command);
    c.csv = stem + ".csv";
    c.report = c.command + ".json";
    c.plot = stem + ".gp";
    if (auto o = top.child("outputs")) {
        c.csv = o->string("csv", c.csv);
        c.report = o->string("report", c.report);
        c.plot = o->string("plot", c.plot);
        for (const auto* n : {&c.csv, &c.report, &c.plot})
            if (n->empty() || fs::path(*n).has_parent_path()) value("'outputs' entries must be plain file names");
        o->finish();
    }
    c.report_wall_time = top.boolean("report_wall_time", c.report_wall_time);
    top.finish();
    return c;
}

ojson echo(const RunConfig& c)
{
    ojson j;
    j["command"] = c.command;
    if (c.reduced)
        j["body"] = {{"c0", c.c0}};
    else
        j["body"] = {{"A", c.body.A}, {"B", c.body.B}, {"C", c.body.C}, {"Mg", c.body.Mg},
                     {"x0", c.body.x0}, {"y0", c.body.y0}, {"z0", c.body.z0}};
    if (c.state) j["state"] = state_json(*c.state);
    if (c.target) j["target"] = {{"l1", c.target->l1}, {"l", c.target->l}, {"k", c.target->k}};
    j["t_end"] = c.t_end;
    j["tol"] = c.tol;
    j["sample_step"] = c.sample_step;
    j["exact_sampling"] = c.exact_sampling;
    j["orientation"] = c.orientation;
    j["renormalize"] = c.renormalize;
    j["seed"] = c.seed;
    if (c.quartic) j["quartic"] = {{"l1", c.quartic->l1}, {"k0", c.quartic->k0}, {"l0", c.quartic->l0}};
    if (c.mount) j["mount"] = {{"A1", c.mount->A1}, {"B1", c.mount->B1}, {"C1", c.mount->C1}, {"M", c.mount->M}};
    j["painleve"] = {{"int_tol", c.int_tol}, {"generic_samples", c.generic_samples}};
    j["theta"] = {{"samples", c.theta_samples}, {"abel_stride", c.abel_stride}, {"quad_tol", c.quad_tol},
                  {"min_nodes", c.quad_min_nodes}, {"max_nodes", c.quad_max_nodes}};
    j["identity_samples"] = c.identity_samples;
    j["checks"] = {{"identity", c.checks.identity}, {"quadrature", c.checks.quadrature},
                   {"round_trip", c.checks.round_trip}, {"margin", c.checks.margin},
                   {"theta_identity", c.checks.theta_identity}, {"theta_p", c.checks.theta_p},
                   {"abel_fit", c.checks.abel_fit}, {"fraction", c.checks.fraction}, {"drift", c.checks.drift}};
    j["outputs"] = {{"csv", c.csv}, {"report", c.report}, {"plot", c.plot}};
    j["report_wall_time"] = c.report_wall_time;
    return j;
}

RunReport run(const RunConfig& cfg, const fs::path& out_dir)
{
    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);
    RunReport rr;
    ojson& rep = rr.report;
    rep["tool"] = {{"name", "kovtop"}, {"version", tool_version()}};
    rep["command"] = cfg.command;
    rep["config"] = echo(cfg);
    rep["tolerances"] = {{"integrator", cfg.tol}, {"quadrature", cfg.quad_tol}, {"integer", cfg.int_tol},
                         {"checks", rep["config"]["checks"]}};
    try {
        Outcome o;
        if (cfg.command == "simulate") o = cmd_simulate(cfg, out_dir, rr.artifacts);
        else if (cfg.command == "painleve-test") o = cmd_painleve(cfg);
        else if (cfg.command == "classify") o = cmd_classify(cfg);
        else if (cfg.command == "separate-check") o = cmd_separate(cfg, out_dir, rr.artifacts);
        else if (cfg.command == "reconstruct-check") o = cmd_reconstruct(cfg, out_dir, rr.artifacts);
        else if (cfg.command == "theta-check") o = cmd_theta(cfg, out_dir, rr.artifacts);
        else o = cmd_design(cfg);
        rep["results"] = std::move(o.results);
        rep["passed"] = o.passed;
        rr.exit_code = o.passed ? 0 : 3;
    } catch (const Error& e) {
        rep["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
        rep["passed"] = false;
        rr.exit_code = exit_code(e.code());
    }
    rep["exit_code"] = rr.exit_code;
    ojson files = ojson::array();
    for (const auto& a : rr.artifacts) files.push_back(a.filename().string());
    rep["artifacts"] = files;
    if (cfg.report_wall_time)
        rep["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const fs::path rp = out_dir / cfg.report;
    std::ofstream out(rp, std::ios::binary);
    if (!out) throw Error(Errc::ValueError, "cannot write " + rp.string());
    out << rep.dump(2) << '\n';
    rr.artifacts.push_back(rp);
    return rr;
}

}  // namespace kovtop

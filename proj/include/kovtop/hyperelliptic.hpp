#pragma once

#include "kovtop/reconstruction.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace kovtop {

/// w^2 = A0 (x-a0)...(x-a4) with real, increasing branch points.
struct HyperellipticCurve {
    double A0 = -4.0;
    std::array<double, 5> a{};

    /// a = (e3, k2, e2, e1, k1) for the constants of motion.
    static HyperellipticCurve from_constants(double l1, double l, double c0, double k);

    /// A0^3 ∏ ((x - a_i)/A0)^{1/2} with principal roots.
    cd sqrt_r(double x) const;
    /// ∏ ((x - a_i)/A0)^{1/2} over the factors not in `skip`, without the A0^3.
    cd partial(double x, std::initializer_list<int> skip) const;
};

struct QuadratureOptions {
    double tol = 1e-12;
    int min_nodes = 16;
    int max_nodes = 1024;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

/// ∫_{-1}^{1} of a smooth vector integrand with node doubling until successive results agree.
Eigen::Vector2cd integrate_doubling(const std::function<Eigen::Vector2cd(double)>& f,
                                    const QuadratureOptions& opt, int* nodes_used = nullptr,
                                    double* last_change = nullptr);

struct PeriodData {
    std::array<Eigen::Vector2cd, 4> segment;  ///< ∫ over [a_j, a_{j+1}] of (x, 1)/√R
    Eigen::Vector2cd infinity_leg;  ///< ∫ over [a4, ∞)
    Eigen::Matrix2d K, Kbar, Kp;  ///< K[α][β]
    Eigen::Matrix2d G;  ///< (2K)^{-1}
    Eigen::Matrix2cd tau;  ///< 2i G K'
    int nodes = 0;
    double refinement_change = 0.0;  ///< largest change of an entry at the final doubling
};

PeriodData periods(const HyperellipticCurve& curve, const QuadratureOptions& opt = {});

/// Integer characteristic (m1, m2, n1, n2); the theta shifts are half of these.
struct Characteristic {
    std::string label;
    std::array<int, 4> c{};

    bool odd() const { return ((c[0] * c[2] + c[1] * c[3]) % 2) != 0; }
};

/// Truncation order for ϑ at v.
int theta_order(const PeriodData& pd, const Eigen::Vector2cd& v);

cd theta(const PeriodData& pd, const Eigen::Vector2cd& v, const Characteristic& ch);

struct CharacteristicReport {
    std::vector<Characteristic> all;  ///< "0".."4", "5" (zero), then the ten pairs
    std::array<Eigen::Vector4d, 5> raw{};  ///< unrounded lattice coordinates per branch point
    double max_roundoff = 0.0;
};

/// Characteristics of the branch points, read off the lattice coordinates of ∫_∞^{a_λ}, and their pairs.
CharacteristicReport characteristics(const PeriodData& pd);

struct ThetaContext {
    double l1 = 0, l = 0, c0 = 0, k = 0;
    std::array<double, 3> e{};
    HyperellipticCurve curve;
    PeriodData pd;
    CharacteristicReport chars;
    std::vector<cd> constants;  ///< c_λ in the order of chars.all
    cd C;
    QuadratureOptions quad;

    const Characteristic& ch(const std::string& label) const;
    cd c(const std::string& label) const;
};

/// Requires l1 > k > c0 > 0 and l^2 < (3 l1 - k)/2.
ThetaContext make_theta_context(double l1, double l, double c0, double k, const QuadratureOptions& opt = {});

struct ConstantIdentity {
    std::string name;
    double lhs = 0.0;
    cd rhs;
    double residual = 0.0;
};

std::vector<ConstantIdentity> theta_constant_identities(const ThetaContext& ctx);

/// v = G u with u taken from a3 (s1-leg) and a1 (s2-leg); sg picks the sheet of each leg.
Eigen::Vector2cd abel_map(const ThetaContext& ctx, double s1, double s2, int sg1 = 1, int sg2 = 1);

/// The fifteen P quantities as theta quotients, P_{αβ} scaled by √R0 to match p_values.
PValues p_via_theta(const ThetaContext& ctx, const Eigen::Vector2cd& v);

struct ThetaAssignment {
    std::string quantity;  ///< "P1" ... "P45"
    std::string theta;  ///< characteristic label in the numerator
    std::string prefactor;
};

const std::vector<ThetaAssignment>& theta_assignments();

struct FunctionalDefects {
    double integer_shift = 0.0;  ///< ϑ(v + e_α) against ±ϑ(v)
    double tau_shift = 0.0;  ///< ϑ(v + τ e_α) against its exponential factor times ϑ(v)
};

/// Largest relative defects of both quasi-periodicity laws over seeded random v and all characteristics.
FunctionalDefects theta_functional_defects(const ThetaContext& ctx, std::uint64_t seed, int samples = 100);

struct ThetaAgreement {
    double square_error = 0.0;  ///< max |x^2 - y^2| / max(1, |y|)^2
    double signed_error = 0.0;  ///< after fixing signs at the first sample
    std::array<int, 15> signs{};  ///< P1..P5, then P12, P13, ..., P45
    int samples = 0;
};

/// p_via_theta ∘ abel_map against the radicals on seeded random in-window pairs.
ThetaAgreement compare_p_via_theta(const ThetaContext& ctx, std::uint64_t seed, int samples = 100);

struct AbelTrack {
    std::vector<double> t;
    std::vector<Eigen::Vector2cd> v;  ///< lattice-unwrapped images
    Eigen::Matrix<double, 4, 2> fit;  ///< (slope, intercept) for Re v1, Im v1, Re v2, Im v2
    double fit_residual = 0.0;
    Eigen::Vector2cd expected_slope;  ///< G (1, 0)
    double slope_error = 0.0;  ///< |fit slope - expected|
};

/// Abel-map images of every `stride`-th sample with the sheet continued along the trajectory.
AbelTrack abel_track(const ThetaContext& ctx, const Trajectory& tr, std::size_t stride = 50);

}  // namespace kovtop

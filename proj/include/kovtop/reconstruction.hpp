#pragma once

#include "kovtop/euler_poisson.hpp"
#include "kovtop/separation.hpp"

#include <array>
#include <complex>
#include <string>
#include <vector>

namespace kovtop {

struct RealCaseContext {
    QuinticData quintic;
    double l1 = 0, l = 0, c0 = 0, k = 0;
    std::array<double, 5> a{};  ///< (e1, e2, e3, k1, k2)
    double E = 0;  ///< (e2-e3)(e3-e1)(e1-e2)
    cd L, M, N;  ///< imaginary
    double L1 = 0, M1 = 0, N1 = 0;  ///< real
    cd L2, M2, N2;  ///< imaginary
};

/// Sign of each square-root factor relative to the principal root.
struct FactorSigns {
    std::array<int, 5> a{1, 1, 1, 1, 1};
    std::array<int, 5> b{1, 1, 1, 1, 1};
};

struct PValues {
    std::array<cd, 5> P{};
    std::array<std::array<cd, 5>, 5> Pab{};  ///< symmetric, diagonal unused

    cd p(int i) const { return P[i - 1]; }  ///< 1-based
    cd pp(int i, int j) const { return Pab[i - 1][j - 1]; }  ///< 1-based
};

enum class FormulaStatus { ClosedForm, AdjustedClosedForm, IntegralFallback };

struct ComponentStatus {
    std::string component;
    FormulaStatus status;
    std::string detail;
};

const char* to_string(FormulaStatus s) noexcept;

/// How each reconstructed component is obtained.
std::vector<ComponentStatus> reconstruction_formulas();

constexpr double R0 = -4.0;

RealCaseContext context(double l1, double l, double c0, double k);

/// In-window check with a small tolerance so turning points are admitted.
bool in_window(const RealCaseContext& ctx, double s1, double s2, double tol = 1e-9);

PValues p_values(const RealCaseContext& ctx, double s1, double s2, const FactorSigns& signs = {});

/// P values from explicit roots A_k = √(s1-a_k), B_k = √(s2-a_k).
PValues p_values_from_roots(const std::array<cd, 5>& A, const std::array<cd, 5>& B, double s1, double s2);

struct ReconstructedState {
    MotionState state;
    double imag_residue = 0.0;  ///< largest |Im| over the six components
};

ReconstructedState reconstruct(const RealCaseContext& ctx, const PValues& pv);

ReconstructedState reconstruct(const RealCaseContext& ctx, double s1, double s2,
                               const FactorSigns& signs = {});

/// 2c0γ from the closed form with the L2 family scaled by four.
cd gamma_closed_form(const RealCaseContext& ctx, const PValues& pv);

struct IdentityReport {
    std::array<double, 6> max_residual{};  ///< per identity, relative to the term sizes
    std::size_t evaluations = 0;
};

IdentityReport identity_suite(const RealCaseContext& ctx, double s1, double s2,
                              const FactorSigns& signs = {});

IdentityReport identity_suite(const RealCaseContext& ctx, const PValues& pv);

/// Rate of change of P_a and P_{αβ} along u1 from the differentiation rules.
PValues p_derivative(const RealCaseContext& ctx, const PValues& pv);

/// Finds the sign pattern that reproduces `target` from (s1, s2); returns the error reached.
double match_signs(const RealCaseContext& ctx, double s1, double s2, const MotionState& target,
                   FactorSigns& out);

struct RoundTripReport {
    std::vector<double> t;
    std::vector<double> error;  ///< max-abs difference to the integrated state
    std::vector<bool> excluded;  ///< |x1 - x2| below the margin
    FactorSigns signs;  ///< relative to the continued roots, fixed at the first usable sample
    std::size_t n_used = 0, n_ok = 0;
    double imag_residue = 0.0;
    double max_error = 0.0;
    double fraction_ok() const { return n_used ? double(n_ok) / double(n_used) : 0.0; }
};

/// Rebuilds every sample of `tr` from its separation variables with branches continued in t.
RoundTripReport round_trip(double c0, const Trajectory& tr, double tol = 1e-6, double margin = 1e-3);

}  // namespace kovtop

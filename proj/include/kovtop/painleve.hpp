#pragma once

#include "kovtop/euler_poisson.hpp"

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <string>
#include <vector>

namespace kovtop {

using cd = std::complex<double>;

enum class BalanceFamily { Generic, DegenerateI, DegenerateII, FreeTop };

const char* to_string(BalanceFamily f) noexcept;

/// Leading coefficients of the pole ansatz p = p0/t + ..., γ = f0/t^2 + ...
struct LeadingBalance {
    cd lambda{};
    cd a{}, b{}, c{};
    cd p0{}, q0{}, r0{}, f0{}, g0{}, h0{};
    cd mu{};
    cd lambda0{};  ///< (p0^2+q0^2+r0^2)/2, equals -2
    cd lambda1{};  ///< (A^2p0^2+B^2q0^2+C^2r0^2)/2, equals -λ^2/2
    BalanceFamily family = BalanceFamily::Generic;
    int eps = 1;
    std::array<int, 3> signs{1, 1, 1};

    Eigen::Matrix<cd, 6, 1> vec() const;
};

struct ResonanceSpectrum {
    Eigen::Matrix<cd, 7, 1> poly;  ///< ascending powers of m
    Eigen::VectorXcd roots;
    std::vector<int> integer_roots;  ///< distinct integers among the roots
    std::vector<int> kernel_dims;  ///< dim ker M(k) for each nonnegative integer root k
    int free_constants = 0;  ///< sum of kernel_dims
};

enum class PainleveCase { Euler, Lagrange, Kovalevskaya, Other, Fails };

const char* to_string(PainleveCase c) noexcept;

struct FamilyReport {
    LeadingBalance balance;
    ResonanceSpectrum spectrum;
};

struct PainleveVerdict {
    PainleveCase kind = PainleveCase::Fails;
    bool passes = false;
    std::vector<int> integer_union;  ///< distinct nonnegative integer roots over all families
    std::vector<FamilyReport> families;
    std::string note;
};

/// Residuals of the six leading-order equations.
Eigen::Matrix<cd, 6, 1> balance_residual(const BodyParameters& bp, const LeadingBalance& lb);

std::vector<cd> solve_lambda(const BodyParameters& bp, const std::array<int, 3>& signs);

LeadingBalance leading_coefficients(const BodyParameters& bp, cd lambda,
                                    const std::array<int, 3>& signs);

/// Balances for a body with A = B; both signs ε of both systems where defined.
std::vector<LeadingBalance> degenerate_balances(const BodyParameters& bp, double rel_tol = 1e-12);

/// Balances of the free top (no gravity, distinct moments).
std::vector<LeadingBalance> free_top_balances(const BodyParameters& bp);

/// Linear system for the Laurent coefficients of order m.
Eigen::Matrix<cd, 6, 6> resonance_matrix(const BodyParameters& bp, const LeadingBalance& lb, cd m);

ResonanceSpectrum resonance_polynomial(const BodyParameters& bp, const LeadingBalance& lb,
                                       double int_tol = 1e-6);

PainleveVerdict painleve_test(const BodyParameters& bp, double int_tol = 1e-6);

}  // namespace kovtop

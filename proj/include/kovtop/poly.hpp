#pragma once

#include <Eigen/Dense>
#include <complex>

// Dense polynomial helpers. Coefficient vectors are in ascending powers.
namespace kovtop::poly {

using cd = std::complex<double>;

template <typename Derived, typename T>
auto horner(const Eigen::MatrixBase<Derived>& c, const T& x)
{
    using S = decltype(typename Derived::Scalar() * x);
    S acc = S(0);
    for (Eigen::Index i = c.size() - 1; i >= 0; --i) acc = acc * x + c(i);
    return acc;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>
derivative(const Eigen::MatrixBase<Derived>& c)
{
    using V = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;
    if (c.size() <= 1) return V::Zero(1);
    V d(c.size() - 1);
    for (Eigen::Index i = 1; i < c.size(); ++i) d(i - 1) = c(i) * typename Derived::Scalar(double(i));
    return d;
}

template <typename DA, typename DB>
Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, 1>
multiply(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b)
{
    using V = Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, 1>;
    V out = V::Zero(a.size() + b.size() - 1);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        for (Eigen::Index j = 0; j < b.size(); ++j) out(i + j) += a(i) * b(j);
    return out;
}

template <typename DA, typename DB>
Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, 1>
add(const Eigen::MatrixBase<DA>& a, const Eigen::MatrixBase<DB>& b)
{
    using V = Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, 1>;
    V out = V::Zero(std::max(a.size(), b.size()));
    out.head(a.size()) += a;
    out.head(b.size()) += b;
    return out;
}

// Drops leading coefficients below rel_tol * max|c|.
Eigen::VectorXcd trim(const Eigen::VectorXcd& c, double rel_tol = 1e-14);

// Companion-matrix eigenvalues followed by Newton polishing on the polynomial.
Eigen::VectorXcd roots(const Eigen::VectorXcd& c, int polish_iters = 3);

cd newton_polish(const Eigen::VectorXcd& c, cd z, int iters = 3);

// Coefficients of the polynomial of degree n through (x_i, y_i), i = 0..n.
Eigen::VectorXcd interpolate(const Eigen::VectorXd& x, const Eigen::VectorXcd& y);

}  // namespace kovtop::poly

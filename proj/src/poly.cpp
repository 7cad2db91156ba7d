#include "kovtop/poly.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace kovtop::poly {

Eigen::VectorXcd trim(const Eigen::VectorXcd& c, double rel_tol)
{
    const double big = c.cwiseAbs().maxCoeff();
    Eigen::Index n = c.size();
    while (n > 1 && std::abs(c(n - 1)) <= rel_tol * big) --n;
    return c.head(n);
}

cd newton_polish(const Eigen::VectorXcd& c, cd z, int iters)
{
    const Eigen::VectorXcd d = derivative(c);
    for (int k = 0; k < iters; ++k) {
        const cd f = horner(c, z);
        const cd fp = horner(d, z);
        if (std::abs(fp) == 0.0) break;
        const cd step = f / fp;
        const cd next = z - step;
        // keep the step only if it does not make things worse
        if (std::abs(horner(c, next)) > std::abs(f)) break;
        z = next;
        if (std::abs(step) <= 1e-16 * (1.0 + std::abs(z))) break;
    }
    return z;
}

Eigen::VectorXcd roots(const Eigen::VectorXcd& c_in, int polish_iters)
{
    const Eigen::VectorXcd c = trim(c_in);
    const Eigen::Index n = c.size() - 1;
    if (n < 1) return Eigen::VectorXcd(0);
    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) comp(i, n - 1) = -c(i) / c(n);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
    Eigen::VectorXcd z = es.eigenvalues();
    for (Eigen::Index i = 0; i < n; ++i) z(i) = newton_polish(c, z(i), polish_iters);
    return z;
}

Eigen::VectorXcd interpolate(const Eigen::VectorXd& x, const Eigen::VectorXcd& y)
{
    const Eigen::Index n = x.size();
    Eigen::MatrixXcd V(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        cd p = 1.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            V(i, j) = p;
            p *= x(i);
        }
    }
    return V.fullPivLu().solve(y);
}

}  // namespace kovtop::poly

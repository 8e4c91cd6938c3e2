#include "cheborbit/newton.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cheborbit {

double condition_estimate_1norm(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, double a_norm1,
                                long n) {
    // Hager's 1-norm estimator for |A^{-1}|_1 using a few solves.
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    double est = 0.0;
    for (int it = 0; it < 5; ++it) {
        Eigen::VectorXd y = lu.solve(x);
        est = y.lpNorm<1>();
        Eigen::VectorXd xi(n);
        for (long i = 0; i < n; ++i) xi[i] = y[i] >= 0.0 ? 1.0 : -1.0;
        Eigen::VectorXd z = lu.transpose().solve(xi);
        long jmax = 0;
        z.cwiseAbs().maxCoeff(&jmax);
        if (std::abs(z[jmax]) <= z.dot(x)) break;
        x.setZero();
        x[jmax] = 1.0;
    }
    return est * a_norm1;
}

std::pair<Eigen::VectorXd, NewtonReport>
newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& F,
             const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& J,
             Eigen::VectorXd A, NewtonSettings settings) {
    NewtonReport report;
    if (!A.allFinite()) throw std::invalid_argument("newton_solve: non-finite initial guess");
    Eigen::VectorXd residual = F(A);
    double norm = residual.lpNorm<Eigen::Infinity>();
    report.residual_norm = norm;
    std::size_t growth_streak = 0;

    for (std::size_t it = 0; it < settings.max_iterations; ++it) {
        if (norm <= settings.tolerance) {
            report.converged = true;
            return {A, report};
        }
        Eigen::MatrixXd Jm = J(A);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Jm);
        const double cond =
            condition_estimate_1norm(lu, Jm.cwiseAbs().colwise().sum().maxCoeff(), Jm.rows());
        report.condition_estimate = cond;
        if (!std::isfinite(cond) || cond > settings.condition_limit)
            throw std::runtime_error("newton_solve: numerically singular Jacobian, cond ~ " +
                                     std::to_string(cond));
        Eigen::VectorXd step = lu.solve(residual);

        double scale = 1.0;
        Eigen::VectorXd A_next;
        Eigen::VectorXd r_next;
        double norm_next = 0.0;
        for (std::size_t h = 0; h <= settings.max_halvings; ++h) {
            A_next = A - scale * step;
            r_next = F(A_next);
            norm_next = r_next.lpNorm<Eigen::Infinity>();
            if (std::isfinite(norm_next) && norm_next < norm) break;
            scale *= 0.5;
        }
        growth_streak = norm_next >= norm ? growth_streak + 1 : 0;
        if (growth_streak >= 3)
            throw std::runtime_error("newton_solve: diverging (residual grew 3 iterations)");
        A = std::move(A_next);
        residual = std::move(r_next);
        norm = norm_next;
        ++report.iterations;
        report.residual_norm = norm;
    }
    report.converged = norm <= settings.tolerance;
    return {A, report};
}

} // namespace cheborbit

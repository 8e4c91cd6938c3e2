#pragma once

#include <Eigen/Dense>
#include <functional>

namespace cheborbit {

struct NewtonReport {
    std::size_t iterations = 0;
    double residual_norm = 0.0; // final infinity norm
    double condition_estimate = 0.0;
    bool converged = false;
};

struct NewtonSettings {
    double tolerance = 1e-11;
    std::size_t max_iterations = 30;
    std::size_t max_halvings = 6;
    /// Jacobians whose 1-norm condition estimate exceeds this raise an error.
    double condition_limit = 1e14;
};

/// Estimate cond_1(A) from an existing LU factorization (Hager's method).
double condition_estimate_1norm(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu,
                                double a_norm1, long n);

/// Damped Newton iteration on F with analytic Jacobian J.  Plain steps with
/// halving on residual increase; stops at the tolerance in infinity norm.
/// Throws on a numerically singular Jacobian (reporting the condition
/// estimate) and on residual growth over 3 consecutive iterations.
std::pair<Eigen::VectorXd, NewtonReport>
newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& F,
             const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& J,
             Eigen::VectorXd A0, NewtonSettings settings = {});

} // namespace cheborbit

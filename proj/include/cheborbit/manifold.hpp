#pragma once

#include "cheborbit/bundle.hpp"
#include "cheborbit/flow.hpp"

namespace cheborbit {

/// Chebyshev-Taylor parameterization P(t, sigma) = sum_a A_a(t) sigma^a of a
/// local stable/unstable manifold: A_0 is the orbit, A_1 the normal bundle,
/// higher orders solve the homological equations.
struct ManifoldParam {
    PolyField field;
    Mesh mesh;
    std::size_t m = 0;
    double lambda = 0.0;
    double K = 1.0;
    std::size_t k0 = 10;
    bool stable = true;
    std::vector<PeriodicPiecewise> orders; // A_0 .. A_N

    std::size_t taylor_order() const { return orders.size() - 1; }
    double period() const { return mesh.period(); }

    /// Horner evaluation of P(t, sigma); |sigma| <= 1 or std::domain_error.
    std::vector<double> eval_P(double t, double sigma) const;
    /// Evaluate retaining only orders 0..n.
    std::vector<double> eval_P_truncated(double t, double sigma, std::size_t n) const;
};

/// Solve the order-alpha homological equation given the tower A_0..A_{alpha-1}.
/// One linear solve (a single Newton step from zero).  Exposed for tests; the
/// recursion in build_manifold shares factorizations and product caches.
PeriodicPiecewise solve_homological(const std::vector<PeriodicPiecewise>& tower,
                                    const PolyField& field, double lambda, std::size_t alpha);

/// Run the recursion to Taylor order N on top of a converged orbit + bundle.
/// Near-resonant orders (ill-conditioned linear systems) raise an error.
ManifoldParam build_manifold(const PeriodicPiecewise& orbit, const FloquetBundle& bundle,
                             const PolyField& field, std::size_t N);

struct ConjugacyError {
    double max = 0.0;
    double mean = 0.0;
};

/// Flow-conjugacy defect Err(t0): samples (s, sigma) with sigma = +/-1 and s
/// even over one period, comparing P(s + t0, e^{lambda t0} sigma) with
/// Phi(P(s, sigma), t0).  Unstable manifolds are checked in backward time.
/// truncate: evaluate the tower only through this order (default: all).
ConjugacyError conjugacy_error(const ManifoldParam& man, double t0, std::size_t n_samples,
                               FlowSettings settings = {}, std::size_t truncate = SIZE_MAX);

/// Per-(order, domain) tail norms for decay diagnostics.
std::vector<std::vector<double>> decay_profile(const ManifoldParam& man);

/// Find K so that max_i |a_N^i| lands within [target/1e3, target*1e3] by
/// log-scale probing of the full recursion.  Returns the chosen K; the
/// accepted manifold is written to `out`.
double choose_scale(const PeriodicPiecewise& orbit, const PolyField& field, bool stable,
                    std::size_t k0, std::size_t N, double target, ManifoldParam& out,
                    NewtonSettings newton = {}, std::size_t max_probes = 40);

} // namespace cheborbit

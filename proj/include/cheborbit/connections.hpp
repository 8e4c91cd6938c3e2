#pragma once

#include "cheborbit/manifold.hpp"

namespace cheborbit {

/// A connecting orbit located in the parameter spaces of two manifold charts.
/// theta are time-like chart coordinates in [0, tau); |sigma| <= 1.
struct ConnectionResult {
    double theta_u = 0.0, sigma_u = 0.0;
    double theta_s = 0.0, sigma_s = 0.0;
    double time_of_flight = 0.0; // 0 for short connections
    enum class Kind { short_intersection, bvp, homoclinic } kind = Kind::short_intersection;
    double residual = 0.0;
    std::vector<double> point_u; // Q(theta_u, sigma_u)
    std::vector<double> point_s; // P(theta_s, sigma_s)
};

/// Intersection of the unstable chart boundary (sigma_u fixed at +/-1) with
/// the stable chart: Newton on S(theta_s, sigma_s, theta_u) =
/// P(theta_s, sigma_s) - Q(theta_u, sigma_u) from a grid-scan seed.
/// A converged sigma_s outside [-1,1] raises an escaped-chart error.
ConnectionResult short_connection(const ManifoldParam& stable, const ManifoldParam& unstable,
                                  double sigma_u = 1.0, std::size_t scan_t = 160,
                                  std::size_t scan_s = 41, double tol = 1e-9);

/// Shooting connection Phi(Q(theta_u, sigma_u), T) = P(theta_s, sigma_s)
/// with sigma_u fixed on a boundary circle; Newton with a finite-difference
/// Jacobian of the shooting map.  Seeded by integrating boundary points of
/// the unstable manifold and keeping the closest approach to the stable
/// chart (pass seed_points = 0 to supply an explicit seed).
struct BvpSeed {
    double theta_u = 0.0, theta_s = 0.0, sigma_s = 0.0, T = 0.0;
};

ConnectionResult bvp_connection(const ManifoldParam& unstable, const ManifoldParam& stable,
                                double sigma_u, double max_time, FlowSettings flow_settings = {},
                                std::size_t seed_points = 40, double tol = 1e-8,
                                const BvpSeed* seed = nullptr);

/// Integration-free asymptotic extension along the chart: time to rescale
/// sigma from sigma_start to sigma_target under sigma' = lambda sigma, plus
/// the sampled parameter- and phase-space paths.
struct ConjugacyPath {
    double time = 0.0;
    std::vector<std::array<double, 2>> parameter_path; // (theta, sigma)
    std::vector<std::vector<double>> phase_path;
};

ConjugacyPath extend_by_conjugacy(const ManifoldParam& man, double theta, double sigma_start,
                                  double sigma_target, std::size_t n_samples = 200);

} // namespace cheborbit

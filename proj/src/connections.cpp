#include "cheborbit/connections.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace cheborbit {

namespace {

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return s;
}

} // namespace

ConnectionResult short_connection(const ManifoldParam& stable, const ManifoldParam& unstable,
                                  double sigma_u, std::size_t scan_t, std::size_t scan_s,
                                  double tol) {
    if (stable.field.dim != 3 || unstable.field.dim != 3)
        throw std::invalid_argument("short_connection: chart intersection needs a 3-d phase space");
    if (std::abs(std::abs(sigma_u) - 1.0) > 1e-12)
        throw std::invalid_argument(
            "short_connection: sigma_u must sit on a boundary circle (+1 or -1)");
    const double tau_s = stable.period(), tau_u = unstable.period();

    // precompute the stable chart on a grid, then scan the unstable boundary
    struct GridPoint {
        double theta, sigma;
        std::vector<double> x;
    };
    std::vector<GridPoint> grid;
    grid.reserve(scan_t * scan_s);
    for (std::size_t it = 0; it < scan_t; ++it)
        for (std::size_t is = 0; is < scan_s; ++is) {
            const double th = tau_s * static_cast<double>(it) / static_cast<double>(scan_t);
            const double sg = -1.0 + 2.0 * static_cast<double>(is) / static_cast<double>(scan_s - 1);
            grid.push_back({th, sg, stable.eval_P(th, sg)});
        }
    double best = 1e300;
    Eigen::Vector3d x(0, 0, 0); // (theta_s, sigma_s, theta_u)
    for (std::size_t iu = 0; iu < scan_t; ++iu) {
        const double thu = tau_u * static_cast<double>(iu) / static_cast<double>(scan_t);
        auto q = unstable.eval_P(thu, sigma_u);
        for (const auto& g : grid) {
            const double d = dist2(g.x, q);
            if (d < best) {
                best = d;
                x = Eigen::Vector3d(g.theta, g.sigma, thu);
            }
        }
    }

    auto S = [&](const Eigen::Vector3d& q) {
        const double sg = std::clamp(q[1], -1.0, 1.0);
        auto p = stable.eval_P(q[0], sg);
        auto u = unstable.eval_P(q[2], sigma_u);
        return Eigen::Vector3d(p[0] - u[0], p[1] - u[1], p[2] - u[2]);
    };
    Eigen::Vector3d r = S(x);
    for (int it = 0; it < 60 && r.norm() > tol; ++it) {
        Eigen::Matrix3d J;
        for (int c = 0; c < 3; ++c) {
            const double h = 1e-7 * std::max(1.0, std::abs(x[c]));
            Eigen::Vector3d xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            J.col(c) = (S(xp) - S(xm)) / (2.0 * h);
        }
        Eigen::Vector3d step = J.partialPivLu().solve(r);
        double scale = 1.0;
        for (int hlf = 0; hlf < 8; ++hlf) {
            Eigen::Vector3d xn = x - scale * step;
            if (S(xn).norm() < r.norm()) {
                x = xn;
                break;
            }
            scale *= 0.5;
            if (hlf == 7) x = x - scale * step;
        }
        r = S(x);
    }
    if (r.norm() > tol)
        throw std::runtime_error("short_connection: Newton stalled, residual " +
                                 std::to_string(r.norm()));
    if (std::abs(x[1]) > 1.0)
        throw std::runtime_error(
            "short_connection: converged sigma_s outside [-1,1]; intersection escapes the chart");

    ConnectionResult out;
    out.theta_s = std::fmod(std::fmod(x[0], tau_s) + tau_s, tau_s);
    out.sigma_s = x[1];
    out.theta_u = std::fmod(std::fmod(x[2], tau_u) + tau_u, tau_u);
    out.sigma_u = sigma_u;
    out.time_of_flight = 0.0;
    out.kind = ConnectionResult::Kind::short_intersection;
    out.residual = r.norm();
    out.point_s = stable.eval_P(out.theta_s, out.sigma_s);
    out.point_u = unstable.eval_P(out.theta_u, sigma_u);
    return out;
}

ConnectionResult bvp_connection(const ManifoldParam& unstable, const ManifoldParam& stable,
                                double sigma_u, double max_time, FlowSettings flow_settings,
                                std::size_t seed_points, double tol, const BvpSeed* seed) {
    if (std::abs(std::abs(sigma_u) - 1.0) > 1e-12)
        throw std::invalid_argument("bvp_connection: sigma_u must be +1 or -1");
    const std::size_t M = unstable.field.dim;
    const double tau_u = unstable.period(), tau_s = stable.period();
    Flow flow(unstable.field, flow_settings);

    BvpSeed s0;
    if (seed) {
        s0 = *seed;
    } else {
        // integrate boundary points of the unstable chart, keep the closest
        // approach to a coarse sample of the stable chart
        const std::size_t nt = 128, ns = 17;
        std::vector<std::array<double, 2>> params;
        std::vector<std::vector<double>> pts;
        params.reserve(nt * ns);
        for (std::size_t it = 0; it < nt; ++it)
            for (std::size_t is = 0; is < ns; ++is) {
                const double th = tau_s * static_cast<double>(it) / static_cast<double>(nt);
                const double sg =
                    -1.0 + 2.0 * static_cast<double>(is) / static_cast<double>(ns - 1);
                params.push_back({th, sg});
                pts.push_back(stable.eval_P(th, sg));
            }
        double best = 1e300;
        const double dt = 0.05;
        for (std::size_t q = 0; q < seed_points; ++q) {
            const double thu = tau_u * static_cast<double>(q) / static_cast<double>(seed_points);
            std::vector<double> state = unstable.eval_P(thu, sigma_u);
            double t = 0.0;
            try {
                while (t < max_time) {
                    state = flow(state, dt);
                    t += dt;
                    for (std::size_t g = 0; g < pts.size(); ++g) {
                        const double d = dist2(pts[g], state);
                        if (d < best) {
                            best = d;
                            s0 = {thu, params[g][0], params[g][1], t};
                        }
                    }
                }
            } catch (const std::runtime_error&) {
                continue; // escaped or collided; skip this boundary point
            }
        }
        if (best >= 1e300)
            throw std::runtime_error("bvp_connection: no usable seed from the boundary scan");
    }

    // Gauss-Newton on (theta_u, theta_s, sigma_s, T) with all M lifted
    // coordinates in the residual
    Eigen::Vector4d x(s0.theta_u, s0.theta_s, s0.sigma_s, s0.T);
    auto G = [&](const Eigen::Vector4d& q) {
        auto from = unstable.eval_P(q[0], sigma_u);
        auto flown = flow(from, q[3]);
        auto to = stable.eval_P(q[1], std::clamp(q[2], -1.0, 1.0));
        Eigen::VectorXd r(static_cast<long>(M));
        for (std::size_t j = 0; j < M; ++j) r[static_cast<long>(j)] = flown[j] - to[j];
        return r;
    };
    Eigen::VectorXd r = G(x);
    for (int it = 0; it < 40 && r.norm() > tol; ++it) {
        Eigen::MatrixXd J(static_cast<long>(M), 4);
        for (int c = 0; c < 4; ++c) {
            double h = 1e-7 * std::max(1.0, std::abs(x[c]));
            Eigen::Vector4d xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            J.col(c) = (G(xp) - G(xm)) / (2.0 * h);
        }
        Eigen::Vector4d step = J.colPivHouseholderQr().solve(r);
        double scale = 1.0;
        Eigen::Vector4d xn;
        for (int hlf = 0; hlf < 8; ++hlf) {
            xn = x - scale * step;
            if (G(xn).norm() < r.norm()) break;
            scale *= 0.5;
        }
        x = xn;
        r = G(x);
    }
    if (r.norm() > tol)
        throw std::runtime_error("bvp_connection: Newton stalled, residual " +
                                 std::to_string(r.norm()));
    if (x[3] < 0.0)
        throw std::runtime_error("bvp_connection: negative time of flight (wrong manifold pairing)");

    ConnectionResult out;
    out.theta_u = std::fmod(std::fmod(x[0], tau_u) + tau_u, tau_u);
    out.sigma_u = sigma_u;
    out.theta_s = std::fmod(std::fmod(x[1], tau_s) + tau_s, tau_s);
    out.sigma_s = x[2];
    out.time_of_flight = x[3];
    bool same_orbit = &unstable == &stable;
    if (!same_orbit && std::abs(tau_u - tau_s) < 1e-9) {
        const auto a = unstable.orders[0].eval_state(0.0);
        double nearest = 1e300;
        for (int q = 0; q < 64; ++q)
            nearest = std::min(nearest, dist2(a, stable.orders[0].eval_state(tau_s * q / 64.0)));
        same_orbit = nearest < 1e-12;
    }
    out.kind = same_orbit ? ConnectionResult::Kind::homoclinic : ConnectionResult::Kind::bvp;
    out.residual = r.norm();
    out.point_u = unstable.eval_P(out.theta_u, sigma_u);
    out.point_s = stable.eval_P(out.theta_s, out.sigma_s);
    return out;
}

ConjugacyPath extend_by_conjugacy(const ManifoldParam& man, double theta, double sigma_start,
                                  double sigma_target, std::size_t n_samples) {
    if (sigma_target == 0.0)
        throw std::domain_error("extend_by_conjugacy: sigma_target = 0 needs infinite time");
    if (sigma_start == 0.0 || (sigma_start > 0) != (sigma_target > 0))
        throw std::domain_error("extend_by_conjugacy: sigma values must share a sign");
    if (std::abs(sigma_start) > 1.0 || std::abs(sigma_target) > 1.0)
        throw std::domain_error("extend_by_conjugacy: |sigma| <= 1 required");
    if (man.lambda == 0.0) throw std::domain_error("extend_by_conjugacy: lambda = 0");

    ConjugacyPath path;
    path.time = std::log(sigma_target / sigma_start) / man.lambda;
    path.parameter_path.reserve(n_samples + 1);
    path.phase_path.reserve(n_samples + 1);
    for (std::size_t q = 0; q <= n_samples; ++q) {
        const double t = path.time * static_cast<double>(q) / static_cast<double>(n_samples);
        const double sg = sigma_start * std::exp(man.lambda * t);
        path.parameter_path.push_back({theta + t, sg});
        path.phase_path.push_back(man.eval_P(theta + t, sg));
    }
    return path;
}

} // namespace cheborbit

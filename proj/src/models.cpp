#include "cheborbit/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cheborbit {

PolyField lorenz(double sigma, double rho, double beta) {
    if (sigma <= 0 || rho <= 0 || beta <= 0)
        throw std::invalid_argument("lorenz: parameters must be positive");
    PolyField g;
    g.dim = 3;
    g.params = {{"sigma", sigma}, {"rho", rho}, {"beta", beta}};
    g.add(0, sigma, {1});
    g.add(0, -sigma, {0});
    g.add(1, rho, {0});
    g.add(1, -1.0, {1});
    g.add(1, -1.0, {0, 2});
    g.add(2, 1.0, {0, 1});
    g.add(2, -beta, {2});
    return g;
}

LiftedModel kepler(double M_mass) {
    if (!(M_mass > 0)) throw std::invalid_argument("kepler: mass must be positive");
    PolyField F;
    F.dim = 3;
    F.params = {{"M", M_mass}};
    F.add(0, 1.0, {1});
    F.add(1, -M_mass, {2, 2, 2, 0});
    // z' = d/dt (x^2)^(-1/2) = -x y z^3
    F.add(2, -1.0, {0, 1, 2, 2, 2});

    LiftMap R;
    R.dim_orig = 2;
    R.dim_lifted = 3;
    R.lift = [](std::span<const double> u) {
        return std::vector<double>{u[0], u[1], 1.0 / std::abs(u[0])};
    };
    R.field_orig = [M_mass](std::span<const double> u) {
        const double r3 = std::pow(std::abs(u[0]), 3);
        return std::vector<double>{u[1], -M_mass * u[0] / r3};
    };
    R.guard = [](std::span<const double> u) { return std::abs(u[0]) > 0.1; };
    return {std::move(F), std::move(R)};
}

LiftedModel crtbp(double mu) {
    if (!(mu > 0.0 && mu < 1.0)) throw std::invalid_argument("crtbp: need 0 < mu < 1");
    PolyField g;
    g.dim = 6;
    g.params = {{"mu", mu}};
    // v1' = v2
    g.add(0, 1.0, {1});
    // v2' = 2 v4 + v1 - (1-mu)(v1+mu)(v5)^3 - mu(v6)^3(v1-1+mu)
    g.add(1, 2.0, {3});
    g.add(1, 1.0, {0});
    g.add(1, -(1.0 - mu), {0, 4, 4, 4});
    g.add(1, -(1.0 - mu) * mu, {4, 4, 4});
    g.add(1, -mu, {0, 5, 5, 5});
    g.add(1, mu * (1.0 - mu), {5, 5, 5});
    // v3' = v4
    g.add(2, 1.0, {3});
    // v4' = -2 v2 + v3 - (1-mu)v3(v5)^3 - mu v3(v6)^3
    g.add(3, -2.0, {1});
    g.add(3, 1.0, {2});
    g.add(3, -(1.0 - mu), {2, 4, 4, 4});
    g.add(3, -mu, {2, 5, 5, 5});
    // v5' = -(v5)^3 ((v1+mu)v2 + v3 v4)
    g.add(4, -1.0, {0, 1, 4, 4, 4});
    g.add(4, -mu, {1, 4, 4, 4});
    g.add(4, -1.0, {2, 3, 4, 4, 4});
    // v6' = -(v6)^3 ((v1-1+mu)v2 + v3 v4)
    g.add(5, -1.0, {0, 1, 5, 5, 5});
    g.add(5, 1.0 - mu, {1, 5, 5, 5});
    g.add(5, -1.0, {2, 3, 5, 5, 5});

    LiftMap R;
    R.dim_orig = 4;
    R.dim_lifted = 6;
    R.lift = [mu](std::span<const double> u) {
        const double r1 = std::sqrt((u[0] + mu) * (u[0] + mu) + u[2] * u[2]);
        const double r2 = std::sqrt((u[0] - 1.0 + mu) * (u[0] - 1.0 + mu) + u[2] * u[2]);
        return std::vector<double>{u[0], u[1], u[2], u[3], 1.0 / r1, 1.0 / r2};
    };
    R.field_orig = [mu](std::span<const double> u) {
        const double x = u[0], vx = u[1], y = u[2], vy = u[3];
        const double r1 = std::sqrt((x + mu) * (x + mu) + y * y);
        const double r2 = std::sqrt((x - 1.0 + mu) * (x - 1.0 + mu) + y * y);
        const double r13 = r1 * r1 * r1, r23 = r2 * r2 * r2;
        return std::vector<double>{
            vx,
            2.0 * vy + x - (1.0 - mu) * (x + mu) / r13 - mu * (x - 1.0 + mu) / r23,
            vy,
            -2.0 * vx + y - (1.0 - mu) * y / r13 - mu * y / r23};
    };
    R.guard = [mu](std::span<const double> u) {
        const double r1 = std::hypot(u[0] + mu, u[2]);
        const double r2 = std::hypot(u[0] - 1.0 + mu, u[2]);
        return r1 > 5e-2 && r2 > 5e-2;
    };
    return {std::move(g), std::move(R)};
}

CrfbpModel crfbp(double m1, double m2, double m3, double beta, double alpha1, double alpha2,
                 double alpha3) {
    if (!(m3 > 0 && m3 <= m2 && m2 <= m1))
        throw std::invalid_argument("crfbp: need 0 < m3 <= m2 <= m1");
    if (std::abs(m1 + m2 + m3 - 1.0) > 1e-12)
        throw std::invalid_argument("crfbp: masses must sum to 1");

    const double S = m2 * m2 + m2 * m3 + m3 * m3;
    const double K = m2 * (m3 - m2) + m1 * (m2 + 2.0 * m3);
    const double sK = std::abs(K) / K;
    std::array<std::array<double, 3>, 3> p{};
    p[0] = {-sK * std::sqrt(S), 0.0, 0.0};
    p[1] = {sK * ((m2 - m3) * m3 + m1 * (2.0 * m2 + m3)) / (2.0 * std::sqrt(S)),
            -std::sqrt(3.0) * m3 / (2.0 * std::sqrt(S)), 0.0};
    p[2] = {std::abs(K) / (2.0 * std::sqrt(S)), std::sqrt(3.0) * m2 / (2.0 * std::sqrt(S)), 0.0};

    const std::array<double, 3> mass{m1, m2, m3};
    const std::array<double, 3> alpha{alpha1, alpha2, alpha3};

    PolyField g;
    g.dim = 9;
    g.params = {{"m1", m1},       {"m2", m2},       {"m3", m3},       {"beta", beta},
                {"alpha1", alpha1}, {"alpha2", alpha2}, {"alpha3", alpha3}};
    // position indices: x=0, x'=1, y=2, y'=3, z=4, z'=5; reciprocal distances 6,7,8
    g.add(0, 1.0, {1});
    g.add(1, 2.0, {3});
    g.add(1, 1.0, {0});
    g.add(1, beta, {1});
    g.add(2, 1.0, {3});
    g.add(3, -2.0, {1});
    g.add(3, 1.0, {2});
    g.add(4, 1.0, {5});
    for (std::size_t b = 0; b < 3; ++b) {
        const std::size_t w = 6 + b; // reciprocal distance to primary b
        g.add(1, -mass[b], {0, w, w, w});
        g.add(1, mass[b] * p[b][0], {w, w, w});
        g.add(3, -mass[b], {2, w, w, w});
        g.add(3, mass[b] * p[b][1], {w, w, w});
        g.add(5, -mass[b], {4, w, w, w});
        g.add(5, mass[b] * p[b][2], {w, w, w});
        // w' = -(w)^3 ((x - xb) x' + (y - yb) y' + (z - zb) z') + alpha_b (w)^3
        g.add(w, -1.0, {0, 1, w, w, w});
        g.add(w, p[b][0], {1, w, w, w});
        g.add(w, -1.0, {2, 3, w, w, w});
        g.add(w, p[b][1], {3, w, w, w});
        g.add(w, -1.0, {4, 5, w, w, w});
        g.add(w, p[b][2], {5, w, w, w});
        g.add(w, alpha[b], {w, w, w});
    }

    LiftMap R;
    R.dim_orig = 6;
    R.dim_lifted = 9;
    auto dists = [p](std::span<const double> u) {
        std::array<double, 3> r{};
        for (std::size_t b = 0; b < 3; ++b)
            r[b] = std::sqrt((u[0] - p[b][0]) * (u[0] - p[b][0]) +
                             (u[2] - p[b][1]) * (u[2] - p[b][1]) +
                             (u[4] - p[b][2]) * (u[4] - p[b][2]));
        return r;
    };
    R.lift = [dists](std::span<const double> u) {
        auto r = dists(u);
        return std::vector<double>{u[0], u[1], u[2], u[3], u[4], u[5],
                                   1.0 / r[0], 1.0 / r[1], 1.0 / r[2]};
    };
    R.field_orig = [dists, mass, p](std::span<const double> u) {
        auto r = dists(u);
        double Ox = u[0], Oy = u[2], Oz = 0.0;
        for (std::size_t b = 0; b < 3; ++b) {
            const double r3 = r[b] * r[b] * r[b];
            Ox -= mass[b] * (u[0] - p[b][0]) / r3;
            Oy -= mass[b] * (u[2] - p[b][1]) / r3;
            Oz -= mass[b] * (u[4] - p[b][2]) / r3;
        }
        return std::vector<double>{u[1], 2.0 * u[3] + Ox, u[3], -2.0 * u[1] + Oy, u[5], Oz};
    };
    R.guard = [dists](std::span<const double> u) {
        auto r = dists(u);
        return r[0] > 5e-2 && r[1] > 5e-2 && r[2] > 5e-2;
    };
    return {std::move(g), std::move(R), p};
}

double crtbp_energy(std::span<const double> v, double mu) {
    return v[0] * v[0] + v[2] * v[2] + 2.0 * (1.0 - mu) * v[4] + 2.0 * mu * v[5] -
           v[1] * v[1] - v[3] * v[3];
}

namespace {

double crtbp_axis_gradient(double x, double mu) {
    const double d1 = x + mu, d2 = x - 1.0 + mu;
    return x - (1.0 - mu) * d1 / std::pow(std::abs(d1), 3) - mu * d2 / std::pow(std::abs(d2), 3);
}

double bisect(double lo, double hi, double mu) {
    double flo = crtbp_axis_gradient(lo, mu);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = crtbp_axis_gradient(mid, mu);
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace

double crtbp_collinear_point(double mu, int index) {
    switch (index) {
        case 1: return bisect(-mu + 1e-9, 1.0 - mu - 1e-9, mu);
        case 2: return bisect(1.0 - mu + 1e-9, 2.5, mu);
        case 3: return bisect(-2.5, -mu - 1e-9, mu);
        default: throw std::invalid_argument("crtbp_collinear_point: index must be 1, 2 or 3");
    }
}

PotentialHessian crfbp_potential_hessian(const CrfbpModel& model, double x, double y) {
    const auto& p = model.primaries;
    const std::array<double, 3> mass{model.field.params.at("m1"), model.field.params.at("m2"),
                                     model.field.params.at("m3")};
    PotentialHessian H{1.0, 0.0, 1.0};
    for (std::size_t b = 0; b < 3; ++b) {
        const double dx = x - p[b][0], dy = y - p[b][1];
        const double r2 = dx * dx + dy * dy;
        const double r = std::sqrt(r2), r3 = r2 * r, r5 = r3 * r2;
        H.xx += mass[b] * (3.0 * dx * dx / r5 - 1.0 / r3);
        H.yy += mass[b] * (3.0 * dy * dy / r5 - 1.0 / r3);
        H.xy += mass[b] * 3.0 * dx * dy / r5;
    }
    return H;
}

std::vector<std::array<double, 2>> crfbp_equilibria(const CrfbpModel& model) {
    const auto& p = model.primaries;
    const double m1 = model.field.params.at("m1");
    const double m2 = model.field.params.at("m2");
    const double m3 = model.field.params.at("m3");
    const std::array<double, 3> mass{m1, m2, m3};
    auto grad = [&](double x, double y, double& gx, double& gy, double& gxx, double& gxy,
                    double& gyy) {
        gx = x;
        gy = y;
        gxx = 1.0;
        gyy = 1.0;
        gxy = 0.0;
        for (std::size_t b = 0; b < 3; ++b) {
            const double dx = x - p[b][0], dy = y - p[b][1];
            const double r2 = dx * dx + dy * dy;
            const double r = std::sqrt(r2), r3 = r2 * r, r5 = r3 * r2;
            gx -= mass[b] * dx / r3;
            gy -= mass[b] * dy / r3;
            gxx += mass[b] * (3.0 * dx * dx / r5 - 1.0 / r3);
            gyy += mass[b] * (3.0 * dy * dy / r5 - 1.0 / r3);
            gxy += mass[b] * 3.0 * dx * dy / r5;
        }
    };
    std::vector<std::array<double, 2>> found;
    for (double sx = -1.6; sx <= 1.6; sx += 0.05) {
        for (double sy = -1.6; sy <= 1.6; sy += 0.05) {
            double x = sx, y = sy;
            bool ok = false;
            for (int it = 0; it < 60; ++it) {
                double gx, gy, gxx, gxy, gyy;
                const double dmin = std::min({std::hypot(x - p[0][0], y - p[0][1]),
                                              std::hypot(x - p[1][0], y - p[1][1]),
                                              std::hypot(x - p[2][0], y - p[2][1])});
                if (dmin < 1e-4 || std::abs(x) > 3 || std::abs(y) > 3) break;
                grad(x, y, gx, gy, gxx, gxy, gyy);
                const double det = gxx * gyy - gxy * gxy;
                if (std::abs(det) < 1e-14) break;
                const double dx = (gyy * gx - gxy * gy) / det;
                const double dy = (gxx * gy - gxy * gx) / det;
                x -= dx;
                y -= dy;
                if (std::abs(dx) + std::abs(dy) < 1e-14) {
                    ok = std::hypot(gx, gy) < 1e-10;
                    break;
                }
            }
            if (!ok) continue;
            bool dup = false;
            for (auto& e : found)
                if (std::hypot(e[0] - x, e[1] - y) < 1e-6) dup = true;
            if (!dup) found.push_back({x, y});
        }
    }
    std::sort(found.begin(), found.end(), [&](const auto& a, const auto& b) {
        return std::hypot(a[0] - p[0][0], a[1] - p[0][1]) < std::hypot(b[0] - p[0][0], b[1] - p[0][1]);
    });
    return found;
}

} // namespace cheborbit

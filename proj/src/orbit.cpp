#include "cheborbit/orbit.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cheborbit {

PeriodicPiecewise sample_trajectory(const Flow& flow, std::span<const double> x0,
                                    const Mesh& mesh, std::size_t m) {
    const std::size_t M = flow.field().dim;
    PeriodicPiecewise grid(mesh, M, m);
    auto local_nodes = cgl_nodes(m - 1); // +1 .. -1
    std::vector<double> state(x0.begin(), x0.end());
    double t_now = 0.0;
    for (std::size_t i = 0; i < mesh.domains(); ++i) {
        const double start = mesh.domain_start(i);
        const double Li = mesh.domain_half_width(i);
        // sample in ascending physical time, store back in CGL order
        std::vector<std::vector<double>> samples(m);
        for (std::size_t qq = 0; qq < m; ++qq) {
            const std::size_t q = m - 1 - qq; // ascending: local node -1 first
            const double t_target = start + (local_nodes[q] + 1.0) * Li;
            state = flow(state, t_target - t_now);
            t_now = t_target;
            samples[q] = state;
        }
        for (std::size_t j = 0; j < M; ++j) {
            std::vector<double> vals(m);
            for (std::size_t q = 0; q < m; ++q) vals[q] = samples[q][j];
            grid.piece(i, j) = interpolate_cgl(vals);
        }
    }
    return grid;
}

namespace {

// Locate the next maximum of z along a Lorenz trajectory by stepping and
// bisecting the sign change of dz/dt.
struct Crossing {
    std::vector<double> state;
    double time;
};

} // namespace

CloseReturn lorenz_close_return(const PolyField& field, const std::string& symbols,
                                double time_budget, double gap_accept, unsigned rng_seed) {
    if (symbols.empty()) throw std::invalid_argument("lorenz_close_return: empty symbol sequence");
    FlowSettings fs;
    fs.abs_tol = 1e-11;
    fs.rel_tol = 1e-11;
    Flow flow(field, fs);
    auto zdot = [&field](const std::vector<double>& u) { return field.eval(u)[2]; };

    // transient to land on the attractor
    std::vector<double> u{1.0 + 0.01 * static_cast<double>(rng_seed), 1.0, 20.0};
    u = flow(u, 40.0);

    std::vector<Crossing> crossings;
    std::string labels;
    const double dt = 0.01;
    double t = 0.0;
    double zd_prev = zdot(u);
    CloseReturn best;
    best.gap = 1e300;
    const std::size_t n = symbols.size();
    std::vector<std::string> rotations;
    for (std::size_t r = 0; r < n; ++r) rotations.push_back(symbols.substr(r) + symbols.substr(0, r));

    while (t < time_budget) {
        std::vector<double> u_next = flow(u, dt);
        const double zd_next = zdot(u_next);
        if (zd_prev > 0.0 && zd_next <= 0.0) {
            // bisect the crossing time within [t, t+dt]
            double lo = 0.0, hi = dt;
            std::vector<double> um = u;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                um = flow(u, mid);
                if (zdot(um) > 0.0) lo = mid;
                else hi = mid;
            }
            crossings.push_back({um, t + 0.5 * (lo + hi)});
            labels.push_back(um[0] > 0.0 ? 'A' : 'B');
            const std::size_t c = crossings.size();
            if (c > n) {
                const std::size_t i = c - 1 - n;
                const std::string seq = labels.substr(i, n);
                if (std::find(rotations.begin(), rotations.end(), seq) != rotations.end()) {
                    double gap = 0.0;
                    for (std::size_t q = 0; q < 3; ++q)
                        gap = std::max(gap, std::abs(crossings[i + n].state[q] - crossings[i].state[q]));
                    if (gap < best.gap) {
                        best.state = crossings[i].state;
                        best.period = crossings[i + n].time - crossings[i].time;
                        best.gap = gap;
                        best.symbols = seq;
                        if (gap <= gap_accept) return best;
                    }
                }
            }
        }
        u = std::move(u_next);
        zd_prev = zd_next;
        t += dt;
    }
    if (best.gap > gap_accept)
        throw std::runtime_error("lorenz_close_return: no close return for '" + symbols +
                                 "' within budget (best gap " + std::to_string(best.gap) + ")");
    return best;
}

CloseReturn refine_close_return(const PolyField& field, CloseReturn cr) {
    FlowSettings fs;
    fs.abs_tol = 1e-13;
    fs.rel_tol = 1e-13;
    Flow flow(field, fs);
    const std::size_t M = field.dim;
    // unknowns (u0, T); equations Phi_T(u0) - u0 and the anchor g(u0) . e = 0
    // with e the largest-|g| coordinate at the seed (transversal section).
    auto g0 = field.eval(cr.state);
    std::size_t anchor = 0;
    for (std::size_t j = 1; j < M; ++j)
        if (std::abs(g0[j]) > std::abs(g0[anchor])) anchor = j;

    Eigen::VectorXd q(M + 1);
    for (std::size_t j = 0; j < M; ++j) q[static_cast<long>(j)] = cr.state[j];
    q[static_cast<long>(M)] = cr.period;
    const double anchor_value = cr.state[anchor];

    auto G = [&](const Eigen::VectorXd& qq) {
        std::vector<double> u0(M);
        for (std::size_t j = 0; j < M; ++j) u0[j] = qq[static_cast<long>(j)];
        auto uT = flow(u0, qq[static_cast<long>(M)]);
        Eigen::VectorXd r(M + 1);
        for (std::size_t j = 0; j < M; ++j) r[static_cast<long>(j)] = uT[j] - u0[j];
        r[static_cast<long>(M)] = u0[anchor] - anchor_value;
        return r;
    };
    for (int it = 0; it < 12; ++it) {
        Eigen::VectorXd r = G(q);
        if (r.lpNorm<Eigen::Infinity>() < 1e-11) break;
        Eigen::MatrixXd J(M + 1, M + 1);
        for (std::size_t c = 0; c <= M; ++c) {
            const double h = 1e-7 * std::max(1.0, std::abs(q[static_cast<long>(c)]));
            Eigen::VectorXd qp = q, qm = q;
            qp[static_cast<long>(c)] += h;
            qm[static_cast<long>(c)] -= h;
            J.col(static_cast<long>(c)) = (G(qp) - G(qm)) / (2.0 * h);
        }
        q -= J.partialPivLu().solve(r);
    }
    CloseReturn out;
    out.state.resize(M);
    for (std::size_t j = 0; j < M; ++j) out.state[j] = q[static_cast<long>(j)];
    out.period = q[static_cast<long>(M)];
    auto uT = flow(out.state, out.period);
    double gap = 0.0;
    for (std::size_t j = 0; j < M; ++j) gap = std::max(gap, std::abs(uT[j] - out.state[j]));
    out.gap = gap;
    out.symbols = cr.symbols;
    return out;
}

CloseReturn lorenz_section_anchor(const PolyField& field, const CloseReturn& cr) {
    FlowSettings fs;
    fs.abs_tol = 1e-13;
    fs.rel_tol = 1e-13;
    Flow flow(field, fs);
    const double section = field.params.at("rho") - 1.0;
    std::vector<double> state = cr.state;
    const double dt = 1e-3;
    for (int s = 0; s < static_cast<int>(cr.period / dt) + 2; ++s) {
        auto next = flow(state, dt);
        if (state[0] < 0.0 && state[2] < section && next[2] >= section) {
            double lo = 0.0, hi = dt;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (flow(state, mid)[2] < section) lo = mid;
                else hi = mid;
            }
            CloseReturn out = cr;
            out.state = flow(state, 0.5 * (lo + hi));
            return out;
        }
        state = std::move(next);
    }
    return cr; // no such crossing; keep the original phase
}

namespace {

struct PlanarCrtbp {
    double mu;
    std::vector<double> rhs(const std::vector<double>& u) const {
        const double x = u[0], vx = u[1], y = u[2], vy = u[3];
        const double r1 = std::hypot(x + mu, y), r2 = std::hypot(x - 1.0 + mu, y);
        const double r13 = r1 * r1 * r1, r23 = r2 * r2 * r2;
        return {vx, 2.0 * vy + x - (1.0 - mu) * (x + mu) / r13 - mu * (x - 1.0 + mu) / r23,
                vy, -2.0 * vx + y - (1.0 - mu) * y / r13 - mu * y / r23};
    }
};

// tight RK on the 4-d planar problem (reuses the polynomial Flow machinery
// through the lifted field would also work; this stays in original space)
std::vector<double> planar_flow(const PlanarCrtbp& sys, std::vector<double> u, double T) {
    // fixed-step classical RK4; plenty for seeding corrections
    const int steps = std::max(200, static_cast<int>(std::abs(T) / 1e-4));
    const double h = T / steps;
    for (int s = 0; s < steps; ++s) {
        auto k1 = sys.rhs(u);
        std::vector<double> tmp(4);
        for (int j = 0; j < 4; ++j) tmp[j] = u[j] + 0.5 * h * k1[j];
        auto k2 = sys.rhs(tmp);
        for (int j = 0; j < 4; ++j) tmp[j] = u[j] + 0.5 * h * k2[j];
        auto k3 = sys.rhs(tmp);
        for (int j = 0; j < 4; ++j) tmp[j] = u[j] + h * k3[j];
        auto k4 = sys.rhs(tmp);
        for (int j = 0; j < 4; ++j) u[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    return u;
}

} // namespace

namespace {

SymmetricLoop corrected_loop(double mu, double x0, double vy0, double th) {
    PlanarCrtbp sys{mu};
    const double th_ref = th;
    auto res2 = [&](double v, double t) {
        auto u = planar_flow(sys, {x0, 0.0, 0.0, v}, t);
        return std::array<double, 2>{u[2], u[1]}; // y, vx at the half crossing
    };
    auto r = res2(vy0, th);
    // damped Newton on (vy0, th) with the half-period kept in a sane window
    for (int it = 0; it < 60; ++it) {
        if (std::abs(r[0]) + std::abs(r[1]) < 1e-11) break;
        const double d1 = 1e-8, d2 = 1e-8;
        auto ra = res2(vy0 + d1, th);
        auto rb = res2(vy0, th + d2);
        const double a11 = (ra[0] - r[0]) / d1, a12 = (rb[0] - r[0]) / d2;
        const double a21 = (ra[1] - r[1]) / d1, a22 = (rb[1] - r[1]) / d2;
        const double det = a11 * a22 - a12 * a21;
        if (det == 0.0) break;
        const double dv = (a22 * r[0] - a12 * r[1]) / det;
        const double dt = (-a21 * r[0] + a11 * r[1]) / det;
        double scale = 1.0;
        const double rn = std::hypot(r[0], r[1]);
        for (int hlf = 0; hlf < 12; ++hlf) {
            const double v_try = vy0 - scale * dv;
            const double t_try = th - scale * dt;
            if (t_try > 0.3 * th_ref && t_try < 3.0 * th_ref) {
                auto rt = res2(v_try, t_try);
                if (std::hypot(rt[0], rt[1]) < rn) {
                    vy0 = v_try;
                    th = t_try;
                    r = rt;
                    break;
                }
            }
            scale *= 0.5;
        }
        if (scale < 1e-3) break;
    }
    if (std::abs(r[0]) + std::abs(r[1]) > 1e-9)
        throw std::runtime_error("crtbp seeding: differential correction stalled");
    return {x0, vy0, th};
}

} // namespace

SymmetricLoop crtbp_lyapunov_loop(double mu, int libration_index, double amplitude) {
    const double Lpt = crtbp_collinear_point(mu, libration_index);
    const double r1 = std::abs(Lpt + mu), r2 = std::abs(Lpt - 1.0 + mu);
    const double Uxx = 1.0 + 2.0 * (1.0 - mu) / (r1 * r1 * r1) + 2.0 * mu / (r2 * r2 * r2);
    const double Uyy = 1.0 - (1.0 - mu) / (r1 * r1 * r1) - mu / (r2 * r2 * r2);
    // center frequency of xi'' - 2 eta' = Uxx xi, eta'' + 2 xi' = Uyy eta
    const double b = 4.0 - Uxx - Uyy;
    const double disc = b * b - 4.0 * Uxx * Uyy;
    const double om2 = 0.5 * (b + std::sqrt(disc)); // positive root: omega^2
    const double om = std::sqrt(om2);
    return corrected_loop(mu, Lpt - amplitude, amplitude * (om2 + Uxx) / 2.0, M_PI / om);
}

namespace {

double loop_energy(double mu, const SymmetricLoop& loop) {
    const double x = loop.x0, vy = loop.vy0;
    const double r1 = std::abs(x + mu), r2 = std::abs(x - 1.0 + mu);
    return x * x + 2.0 * (1.0 - mu) / r1 + 2.0 * mu / r2 - vy * vy;
}

template <typename Metric>
SymmetricLoop continue_until(double mu, int index, Metric metric, double target, bool decreasing) {
    const double Lpt = crtbp_collinear_point(mu, index);
    double A = 0.004;
    SymmetricLoop prev = crtbp_lyapunov_loop(mu, index, A);
    double dA = 0.004;
    int failures = 0;
    for (int step = 0; step < 2000; ++step) {
        SymmetricLoop cur;
        try {
            // warm-started correction keeps the family through large amplitudes
            cur = corrected_loop(mu, Lpt - (A + dA), prev.vy0, prev.half_period);
        } catch (const std::runtime_error&) {
            dA *= 0.5;
            if (++failures > 30)
                throw std::runtime_error("crtbp seeding: amplitude continuation stalled");
            continue;
        }
        A += dA;
        dA = std::min(2.0 * dA, 0.004);
        double mcur = metric(cur);
        const bool crossed = decreasing ? (mcur <= target) : (mcur >= target);
        if (crossed) {
            SymmetricLoop lo = prev, hi = cur;
            for (int it = 0; it < 60; ++it) {
                const double xm = 0.5 * (lo.x0 + hi.x0);
                SymmetricLoop mid = corrected_loop(mu, xm, 0.5 * (lo.vy0 + hi.vy0),
                                                   0.5 * (lo.half_period + hi.half_period));
                const double mm = metric(mid);
                if ((decreasing && mm <= target) || (!decreasing && mm >= target)) hi = mid;
                else lo = mid;
                cur = mid;
                if (std::abs(mm - target) < 1e-12) break;
            }
            return cur;
        }
        prev = cur;
    }
    throw std::runtime_error("crtbp seeding: amplitude continuation did not reach the target");
}

} // namespace

SymmetricLoop crtbp_loop_at_energy(double mu, int libration_index, double energy) {
    return continue_until(
        mu, libration_index, [mu](const SymmetricLoop& l) { return loop_energy(mu, l); }, energy,
        true);
}

SymmetricLoop crtbp_loop_at_half_period(double mu, int libration_index, double half_period) {
    return continue_until(
        mu, libration_index, [](const SymmetricLoop& l) { return l.half_period; }, half_period,
        false);
}

namespace {

struct PlanarCrfbp {
    const CrfbpModel& model;
    std::vector<double> rhs(const std::vector<double>& u) const {
        std::vector<double> u6{u[0], u[1], u[2], u[3], 0.0, 0.0};
        auto f = model.lift.field_orig(u6);
        return {f[0], f[1], f[2], f[3]};
    }
    std::vector<double> flow(std::vector<double> u, double T) const {
        const int steps = std::max(400, static_cast<int>(std::abs(T) / 2e-4));
        const double h = T / steps;
        std::vector<double> tmp(4);
        for (int s = 0; s < steps; ++s) {
            auto k1 = rhs(u);
            for (int j = 0; j < 4; ++j) tmp[j] = u[j] + 0.5 * h * k1[j];
            auto k2 = rhs(tmp);
            for (int j = 0; j < 4; ++j) tmp[j] = u[j] + 0.5 * h * k2[j];
            auto k3 = rhs(tmp);
            for (int j = 0; j < 4; ++j) tmp[j] = u[j] + h * k3[j];
            auto k4 = rhs(tmp);
            for (int j = 0; j < 4; ++j)
                u[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        return u;
    }
};

double crfbp_unstable_exponent(const CrfbpModel& model, const std::vector<double>& u0, double T) {
    std::vector<double> u6{u0[0], u0[1], u0[2], u0[3], 0.0, 0.0};
    auto v9 = model.lift.lift(u6);
    Flow lifted(model.field);
    auto w = lifted.integrate_variational(v9, T);
    Eigen::MatrixXd Mo(9, 9);
    for (int r = 0; r < 9; ++r)
        for (int c = 0; c < 9; ++c) Mo(r, c) = w[9 + r * 9 + c];
    Eigen::EigenSolver<Eigen::MatrixXd> es(Mo);
    double lam = 0.0;
    for (int q = 0; q < 9; ++q) {
        const auto mult = es.eigenvalues()[q];
        if (std::abs(mult.imag()) < 1e-6 * std::abs(mult) && mult.real() > 1.0001)
            lam = std::max(lam, std::log(mult.real()) / T);
    }
    return lam;
}

} // namespace

PlanarLoop crfbp_planar_loop(const CrfbpModel& model, std::array<double, 2> equilibrium,
                             double amplitude, const PlanarLoop* warm) {
    const double xe = equilibrium[0], ye = equilibrium[1];
    auto H = crfbp_potential_hessian(model, xe, ye);
    Eigen::Matrix4d A4;
    A4 << 0, 1, 0, 0, H.xx, 0, H.xy, 2, 0, 0, 0, 1, H.xy, -2, H.yy, 0;
    Eigen::EigenSolver<Eigen::Matrix4d> es(A4);
    long center = -1;
    double om = 0.0;
    for (long q = 0; q < 4; ++q)
        if (std::abs(es.eigenvalues()[q].real()) < 1e-9 && es.eigenvalues()[q].imag() > 1e-9) {
            center = q;
            om = es.eigenvalues()[q].imag();
        }
    if (center < 0)
        throw std::runtime_error("crfbp_planar_loop: equilibrium has no planar center direction");
    Eigen::Vector4cd w = es.eigenvectors().col(center);
    w /= std::hypot(std::abs(w[0]), std::abs(w[2]));

    std::vector<double> u0(4);
    double T = 2.0 * M_PI / om;
    if (warm && !warm->state4.empty()) {
        const double Aprev = std::abs(warm->state4[0] - xe);
        for (int c = 0; c < 4; ++c) {
            const double eqc = (c == 0 ? xe : (c == 2 ? ye : 0.0));
            u0[c] = eqc + (warm->state4[c] - eqc) * (amplitude / Aprev);
        }
        T = 2.0 * warm->half_period;
    } else {
        for (int c = 0; c < 4; ++c)
            u0[c] = (c == 0 ? xe : (c == 2 ? ye : 0.0)) + amplitude * w[c].real();
    }

    PlanarCrfbp sys{model};
    const double x_pin = u0[0];
    for (int it = 0; it < 60; ++it) {
        auto uT = sys.flow(u0, T);
        Eigen::Vector4d r(uT[0] - u0[0], uT[1] - u0[1], uT[2] - u0[2], uT[3] - u0[3]);
        if (r.lpNorm<Eigen::Infinity>() < 1e-10) break;
        Eigen::Matrix4d J;
        for (int c = 0; c < 4; ++c) {
            const double h = 1e-7;
            auto up = u0;
            double Tp = T;
            if (c < 3) up[c + 1] += h;
            else Tp += h;
            auto uTp = sys.flow(up, Tp);
            for (int rr = 0; rr < 4; ++rr)
                J(rr, c) = ((uTp[rr] - up[rr]) - (uT[rr] - u0[rr])) / h;
        }
        Eigen::Vector4d step = J.partialPivLu().solve(r);
        for (int c = 0; c < 3; ++c) u0[c + 1] -= step[c];
        T -= step[3];
        u0[0] = x_pin;
        if (it == 59) throw std::runtime_error("crfbp_planar_loop: correction did not converge");
    }
    PlanarLoop out;
    out.state4 = u0;
    out.half_period = T / 2.0;
    out.lambda = crfbp_unstable_exponent(model, u0, T);
    return out;
}

PlanarLoop crfbp_loop_at_lambda(const CrfbpModel& model, std::array<double, 2> equilibrium,
                                double lambda_target) {
    PlanarLoop lo = crfbp_planar_loop(model, equilibrium, 0.01);
    if (lambda_target > lo.lambda)
        throw std::runtime_error("crfbp_loop_at_lambda: target above the small-amplitude limit");
    double A_lo = 0.01;
    PlanarLoop hi = lo;
    double A_hi = A_lo;
    for (int s = 0; s < 60; ++s) {
        A_hi += 0.05;
        hi = crfbp_planar_loop(model, equilibrium, A_hi, &hi);
        if (hi.lambda <= lambda_target) break;
        lo = hi;
        A_lo = A_hi;
        if (s == 59)
            throw std::runtime_error("crfbp_loop_at_lambda: target below the family range");
    }
    PlanarLoop mid = hi;
    for (int it = 0; it < 60; ++it) {
        const double A_mid = 0.5 * (A_lo + A_hi);
        mid = crfbp_planar_loop(model, equilibrium, A_mid, &mid);
        if (mid.lambda > lambda_target) A_lo = A_mid;
        else A_hi = A_mid;
        if (std::abs(mid.lambda - lambda_target) < 1e-10) break;
    }
    return mid;
}

OrbitSolution solve_orbit(const OrbitProblem& problem, const PeriodicPiecewise& seed) {
    const std::size_t M = problem.field.dim;
    if (seed.components != M) throw std::invalid_argument("solve_orbit: seed dimension mismatch");

    SystemSpec spec;
    spec.alpha = 0;
    std::vector<double> p0 = seed.eval_state(0.0);
    switch (problem.formulation) {
        case Formulation::autonomous_poincare:
            spec.boundary = BoundaryMode::periodic;
            spec.extra = ExtraUnknown::half_period;
            spec.phase.kind = PhaseSpec::Kind::poincare;
            spec.phase.poincare_point = p0;
            break;
        case Formulation::symmetric_fixed_L:
            spec.boundary = BoundaryMode::crtbp_symmetric;
            break;
        case Formulation::symmetric_fixed_energy:
            spec.boundary = BoundaryMode::crtbp_symmetric;
            spec.extra = ExtraUnknown::half_period;
            spec.phase.kind = PhaseSpec::Kind::energy;
            spec.phase.energy = problem.energy;
            break;
        case Formulation::multiplier_poincare:
            spec.boundary = BoundaryMode::crfbp_autodiff;
            spec.extra = ExtraUnknown::multiplier;
            spec.phase.kind = PhaseSpec::Kind::poincare;
            spec.phase.poincare_point = p0;
            spec.primaries = problem.primaries;
            break;
    }

    ResidualSystem sys(problem.field, seed.mesh, problem.m, spec);
    double extra0 = 0.0;
    if (spec.extra == ExtraUnknown::half_period) extra0 = seed.mesh.half_period;
    Eigen::VectorXd A0 = sys.pack(seed, extra0);
    auto [A, report] = newton_solve([&sys](const Eigen::VectorXd& A_) { return sys.assemble(A_); },
                                    [&sys](const Eigen::VectorXd& A_) { return sys.jacobian(A_); },
                                    A0, problem.newton);
    OrbitSolution out;
    double extra = 0.0;
    out.orbit = sys.unpack(A, &extra);
    out.half_period = spec.extra == ExtraUnknown::half_period ? extra : seed.mesh.half_period;
    if (spec.extra == ExtraUnknown::multiplier) out.beta = extra;
    out.anchor = p0;
    out.report = report;

    // collision guard for lifted celestial models: reciprocal-distance
    // coordinates exceeding 1/guard mean the orbit passed within guard
    // radius of a primary
    if (M >= 6) {
        const std::size_t first_recip = (M == 6) ? 4 : 6;
        for (int s = 0; s < 64 && !out.collision_warning; ++s) {
            auto state = out.orbit.eval_state(out.orbit.mesh.period() * s / 64.0);
            for (std::size_t j = first_recip; j < M; ++j)
                if (std::abs(state[j]) > 1.0 / problem.collision_guard)
                    out.collision_warning = true;
        }
    }
    return out;
}

double validate_orbit(const PeriodicPiecewise& orbit, const PolyField& field,
                      std::size_t n_samples, FlowSettings settings) {
    Flow flow(field, settings);
    const double tau = orbit.mesh.period();
    double worst = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const double t0 = tau * static_cast<double>(s) / static_cast<double>(n_samples);
        const double t1 = tau * static_cast<double>(s + 1) / static_cast<double>(n_samples);
        auto from = orbit.eval_state(t0);
        auto expect = orbit.eval_state(t1);
        auto got = flow(from, t1 - t0);
        for (std::size_t j = 0; j < orbit.components; ++j)
            worst = std::max(worst, std::abs(got[j] - expect[j]));
    }
    return worst;
}

} // namespace cheborbit

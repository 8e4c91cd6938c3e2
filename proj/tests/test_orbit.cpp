#include <doctest.h>

#include <cmath>

#include "cheborbit/orbit.hpp"

using namespace cheborbit;

TEST_CASE("lorenz AB: close return, refinement, BVP solve") {
    auto field = lorenz(10.0, 28.0, 8.0 / 3.0);
    auto cr = lorenz_close_return(field, "AB", 30000.0, 1e-3);
    CHECK(cr.gap <= 1e-3);
    CHECK(cr.period == doctest::Approx(1.5587).epsilon(0.05));

    auto refined = refine_close_return(field, cr);
    CHECK(refined.gap < 1e-8);

    Mesh mesh = Mesh::uniform(10, refined.period / 2.0);
    Flow flow(field);
    auto seed = sample_trajectory(flow, refined.state, mesh, 30);

    OrbitProblem problem;
    problem.field = field;
    problem.formulation = Formulation::autonomous_poincare;
    problem.mesh = mesh;
    problem.m = 30;
    auto sol = solve_orbit(problem, seed);
    CHECK(sol.report.converged);
    CHECK(sol.half_period == doctest::Approx(1.55865221 / 2.0).epsilon(1e-6));

    // converged-orbit row checks
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(std::abs(periodicity_row(sol.orbit, j)) < 1e-11);
        for (std::size_t i = 1; i < mesh.domains(); ++i)
            CHECK(std::abs(chain_row(sol.orbit, i, j)) < 1e-11);
    }
    CHECK(std::abs(poincare_row(sol.orbit, sol.anchor, field)) < 1e-11);

    // independent defect check against the RK oracle
    CHECK(validate_orbit(sol.orbit, field, 100) < 1e-7);

    // deliberate perturbation must show up in the defect
    auto perturbed = sol.orbit;
    perturbed.piece(3, 1)[2] += 1e-3;
    CHECK(validate_orbit(perturbed, field, 50) > 1e-4);
}

TEST_CASE("degenerate hint: close-return search rejects an equilibrium") {
    auto field = lorenz(10.0, 28.0, 8.0 / 3.0);
    // symbol sequence that never occurs as a close return within a tiny budget
    CHECK_THROWS_AS(lorenz_close_return(field, "AAAAAAAAAAAAAAAA", 30.0, 1e-6),
                    std::runtime_error);
}

TEST_CASE("crtbp symmetric orbit at fixed L") {
    const double mu = 0.0123;
    auto model = crtbp(mu);
    auto loop = crtbp_lyapunov_loop(mu, 1, 0.02);
    Mesh mesh = Mesh::uniform(8, loop.half_period);
    Flow flow(model.field);
    std::vector<double> u0{loop.x0, 0.0, 0.0, loop.vy0};
    auto seed = sample_trajectory(flow, model.lift.lift(u0), mesh, 20);

    OrbitProblem problem;
    problem.field = model.field;
    problem.formulation = Formulation::symmetric_fixed_L;
    problem.mesh = mesh;
    problem.m = 20;
    auto sol = solve_orbit(problem, seed);
    CHECK(sol.report.converged);

    // perpendicular crossings at both ends
    const double tau = sol.orbit.mesh.period();
    auto s0 = sol.orbit.eval_state(0.0);
    auto s1 = sol.orbit.eval_state(tau * (1.0 - 1e-15));
    CHECK(std::abs(s0[1]) < 1e-10);
    CHECK(std::abs(s0[2]) < 1e-10);
    CHECK(std::abs(s1[1]) < 1e-9);
    CHECK(std::abs(s1[2]) < 1e-9);

    // x(t) symmetric under reflection about t = 0
    for (int q = 1; q <= 10; ++q) {
        const double s = 0.04 * q * tau;
        CHECK(sol.orbit.eval_component(s, 0) ==
              doctest::Approx(sol.orbit.eval_component(tau - s, 0)).epsilon(1e-8));
    }

    // lifted coordinates track the reciprocal distances
    for (int q = 0; q < 20; ++q) {
        auto st = sol.orbit.eval_state(tau * q / 20.0);
        const double r1 = std::hypot(st[0] + mu, st[2]);
        const double r2 = std::hypot(st[0] - 1.0 + mu, st[2]);
        CHECK(std::abs(st[4] - 1.0 / r1) < 1e-9);
        CHECK(std::abs(st[5] - 1.0 / r2) < 1e-9);
    }

    // energy constancy along the converged orbit
    double emin = 1e300, emax = -1e300;
    for (int q = 0; q < 200; ++q) {
        const double e = crtbp_energy(sol.orbit.eval_state(tau * q / 200.0), mu);
        emin = std::min(emin, e);
        emax = std::max(emax, e);
    }
    CHECK(emax - emin < 1e-8);
}

TEST_CASE("crtbp orbit at fixed energy E = 3.17") {
    const double mu = 0.0123;
    auto model = crtbp(mu);
    auto loop = crtbp_loop_at_energy(mu, 1, 3.17);
    Mesh mesh = Mesh::uniform(8, loop.half_period);
    Flow flow(model.field);
    std::vector<double> u0{loop.x0, 0.0, 0.0, loop.vy0};
    auto seed = sample_trajectory(flow, model.lift.lift(u0), mesh, 24);

    OrbitProblem problem;
    problem.field = model.field;
    problem.formulation = Formulation::symmetric_fixed_energy;
    problem.mesh = mesh;
    problem.m = 24;
    problem.energy = 3.17;
    auto sol = solve_orbit(problem, seed);
    CHECK(sol.report.converged);
    CHECK(crtbp_energy(sol.orbit.eval_state(0.123), mu) == doctest::Approx(3.17).epsilon(1e-9));
    // the L1 Lyapunov orbit at this energy (independent shooting gives 1.38176)
    CHECK(sol.half_period == doctest::Approx(1.38176).epsilon(2e-4));
}

TEST_CASE("mesh refinement leaves the orbit trace unchanged") {
    auto field = lorenz(10.0, 28.0, 8.0 / 3.0);
    auto cr = refine_close_return(field, lorenz_close_return(field, "AB", 4000.0, 5e-2));
    Flow flow(field);

    OrbitProblem problem;
    problem.field = field;
    problem.formulation = Formulation::autonomous_poincare;
    problem.m = 24;

    Mesh coarse = Mesh::uniform(6, cr.period / 2.0);
    problem.mesh = coarse;
    auto sol1 = solve_orbit(problem, sample_trajectory(flow, cr.state, coarse, 24));
    Mesh fine = Mesh::uniform(12, cr.period / 2.0);
    problem.mesh = fine;
    auto sol2 = solve_orbit(problem, sample_trajectory(flow, cr.state, fine, 24));

    const double tau = 2.0 * sol1.half_period;
    CHECK(sol1.half_period == doctest::Approx(sol2.half_period).epsilon(1e-9));
    for (int q = 0; q < 25; ++q) {
        auto a = sol1.orbit.eval_state(tau * q / 25.0);
        auto b = sol2.orbit.eval_state(2.0 * sol2.half_period * q / 25.0);
        for (int j = 0; j < 3; ++j) CHECK(std::abs(a[j] - b[j]) < 1e-8);
    }
}

#include <doctest.h>

#include <cmath>
#include <random>

#include "cheborbit/models.hpp"
#include "cheborbit/residual.hpp"

using namespace cheborbit;

namespace {

std::mt19937_64 rng(987654);

ChebSeries cgl_coeffs(const std::function<double(double)>& f, std::size_t n) {
    auto nodes = cgl_nodes(n);
    std::vector<double> vals(nodes.size());
    for (std::size_t q = 0; q < nodes.size(); ++q) vals[q] = f(nodes[q]);
    return interpolate_cgl(vals);
}

PeriodicPiecewise random_grid(const Mesh& mesh, std::size_t M, std::size_t m, double scale) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    PeriodicPiecewise g(mesh, M, m);
    for (auto& piece : g.pieces)
        for (auto& c : piece.coeffs) c = dist(rng);
    return g;
}

// Brute-force Cauchy product of convolutions by direct enumeration over
// index tuples, straight from the definition.
double cauchy_brute(const TowerView& tower, std::size_t domain,
                    const std::vector<std::size_t>& comps, std::size_t alpha, long k) {
    const std::size_t n = comps.size();
    const long mm = static_cast<long>(tower[0]->piece(domain, comps[0]).size());
    double total = 0.0;
    // enumerate alpha splits
    std::vector<std::size_t> asplit(n, 0);
    std::function<void(std::size_t, std::size_t)> loop_alpha = [&](std::size_t pos,
                                                                   std::size_t left) {
        if (pos == n - 1) {
            asplit[pos] = left;
            // enumerate k splits over Z
            std::vector<long> ksplit(n, 0);
            std::function<void(std::size_t, long)> loop_k = [&](std::size_t kpos, long kleft) {
                if (kpos == n - 1) {
                    ksplit[kpos] = kleft;
                    if (std::labs(kleft) >= mm) return;
                    double prod = 1.0;
                    for (std::size_t q = 0; q < n; ++q)
                        prod *= tower[asplit[q]]->piece(domain, comps[q])
                                    .coeffs[static_cast<std::size_t>(std::labs(ksplit[q]))];
                    total += prod;
                    return;
                }
                for (long kq = -(mm - 1); kq <= mm - 1; ++kq) {
                    ksplit[kpos] = kq;
                    loop_k(kpos + 1, kleft - kq);
                }
            };
            loop_k(0, k);
            return;
        }
        for (std::size_t aq = 0; aq <= left; ++aq) {
            asplit[pos] = aq;
            loop_alpha(pos + 1, left - aq);
        }
    };
    loop_alpha(0, alpha);
    return total;
}

} // namespace

TEST_CASE("residual_row basics") {
    ChebSeries zero(5);
    CHECK(residual_row(2, 0.7, zero, 1.3) == doctest::Approx(2 * 2 * 0.7));
    // u(t) = t, h = 1, L = 1, k = 1: 2*(0.5) + (0 - 1) = 0
    ChebSeries c_one(std::vector<double>{1.0, 0.0, 0.0});
    CHECK(residual_row(1, 0.5, c_one, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("residual_row: u = exp(t) solves u' = u") {
    const std::size_t m = 20;
    auto u = cgl_coeffs([](double t) { return std::exp(t); }, m - 1);
    // h = u, coefficients through index m
    auto c = cgl_coeffs([](double t) { return std::exp(t); }, m);
    for (std::size_t k = 1; k <= m - 3; ++k)
        CHECK(std::abs(residual_row(k, u[k], c, 1.0)) < 1e-12);
}

TEST_CASE("chain and periodicity rows") {
    Mesh mesh = Mesh::uniform(3, 1.0);
    PeriodicPiecewise g(mesh, 2, 4);
    // identical constant pieces -> 0
    for (auto& piece : g.pieces) piece[0] = 1.5;
    CHECK(chain_row(g, 1, 0) == doctest::Approx(0.0));
    CHECK(periodicity_row(g, 1) == doctest::Approx(0.0));
    // piece (0,0) ends at 3.0, piece (1,0) begins at 2.5 -> 0.5
    g.piece(0, 0) = ChebSeries(std::vector<double>{3.0, 0, 0, 0});
    g.piece(1, 0) = ChebSeries(std::vector<double>{2.5, 0, 0, 0});
    CHECK(chain_row(g, 1, 0) == doctest::Approx(0.5));
}

TEST_CASE("poincare_row: anchored and perturbed") {
    auto field = lorenz(10.0, 28.0, 8.0 / 3.0);
    Mesh mesh = Mesh::uniform(2, 1.0);
    PeriodicPiecewise g(mesh, 3, 5);
    std::vector<double> p0{1.0, 2.0, 3.0};
    for (std::size_t j = 0; j < 3; ++j) g.piece(0, j)[0] = p0[j]; // gamma(0) = p0
    CHECK(poincare_row(g, p0, field) == doctest::Approx(0.0));
    // perturb gamma(0) by eps along p0' : row -> -eps |p0'|^2
    auto v0 = field.eval(p0);
    const double eps = 1e-3;
    double nv2 = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
        g.piece(0, j)[0] = p0[j] + eps * v0[j];
        nv2 += v0[j] * v0[j];
    }
    CHECK(poincare_row(g, p0, field) == doctest::Approx(-eps * nv2).epsilon(1e-10));
}

TEST_CASE("normalization_row: zeros, exact hit, quadratic scaling") {
    Mesh mesh = Mesh::uniform(2, 1.0);
    PeriodicPiecewise g(mesh, 3, 6);
    CHECK(normalization_row(g, 0.0, 3) == doctest::Approx(0.0));
    const double K = 2.25;
    g.piece(0, 0)[0] = std::sqrt(K);
    CHECK(normalization_row(g, K, 3) == doctest::Approx(0.0));
    auto g2 = random_grid(mesh, 3, 6, 0.5);
    const double row = normalization_row(g2, K, 4);
    for (auto& piece : g2.pieces)
        for (auto& c : piece.coeffs) c *= 3.0;
    CHECK(normalization_row(g2, K, 4) == doctest::Approx(9.0 * (row + K) - K).epsilon(1e-12));
}

TEST_CASE("cauchy_conv: alpha=0 is plain convolution, n=1 is identity") {
    Mesh mesh = Mesh::uniform(1, 1.0);
    auto g0 = random_grid(mesh, 3, 6, 1.0);
    TowerView tw{&g0};
    std::vector<std::size_t> two{0, 2};
    auto c = cauchy_conv(tw, 0, two, 0, 8);
    auto ref = convolve(g0.piece(0, 0), g0.piece(0, 2), 8);
    for (std::size_t k = 0; k < 8; ++k) CHECK(c[k] == doctest::Approx(ref[k]).epsilon(1e-14));
    std::vector<std::size_t> one{1};
    auto c1 = cauchy_conv(tw, 0, one, 0, 6);
    for (std::size_t k = 0; k < 6; ++k)
        CHECK(c1[k] == doctest::Approx(g0.piece(0, 1)[k]).epsilon(1e-14));
}

TEST_CASE("cauchy_conv: constants only at order zero") {
    // all series equal to a constant c (only alpha=0, k=0 nonzero):
    // alpha=2 has no split into three parts all zero, so the result is 0
    Mesh mesh = Mesh::uniform(1, 1.0);
    PeriodicPiecewise g0(mesh, 2, 4), g1(mesh, 2, 4), g2(mesh, 2, 4);
    g0.piece(0, 0)[0] = 1.7;
    g0.piece(0, 1)[0] = -0.4;
    TowerView tw{&g0, &g1, &g2};
    std::vector<std::size_t> comps{0, 1, 0};
    auto c = cauchy_conv(tw, 0, comps, 2, 4);
    for (std::size_t k = 0; k < 4; ++k) CHECK(c[k] == doctest::Approx(0.0));
    for (long k = 0; k < 4; ++k)
        CHECK(cauchy_brute(tw, 0, comps, 2, k) == doctest::Approx(0.0));
}

TEST_CASE("cauchy_conv agrees with brute-force enumeration") {
    Mesh mesh = Mesh::uniform(2, 1.0);
    auto g0 = random_grid(mesh, 2, 4, 0.8);
    auto g1 = random_grid(mesh, 2, 4, 0.8);
    auto g2 = random_grid(mesh, 2, 4, 0.8);
    auto g3 = random_grid(mesh, 2, 4, 0.8);
    TowerView tw{&g0, &g1, &g2, &g3};
    for (std::size_t alpha : {0u, 1u, 2u, 3u}) {
        std::vector<std::size_t> comps{0, 1, 1};
        auto c = cauchy_conv(tw, 1, comps, alpha, 6);
        for (long k = 0; k < 6; ++k)
            CHECK(c[static_cast<std::size_t>(k)] ==
                  doctest::Approx(cauchy_brute(tw, 1, comps, alpha, k)).epsilon(1e-12));
    }
}

TEST_CASE("cauchy_conv is symmetric under permutation of hyperscripts") {
    Mesh mesh = Mesh::uniform(1, 1.0);
    auto g0 = random_grid(mesh, 3, 5, 0.8);
    auto g1 = random_grid(mesh, 3, 5, 0.8);
    TowerView tw{&g0, &g1};
    std::vector<std::size_t> a{0, 1, 2}, b{2, 0, 1}, c{1, 2, 0};
    auto ca = cauchy_conv(tw, 0, a, 1, 6);
    auto cb = cauchy_conv(tw, 0, b, 1, 6);
    auto cc = cauchy_conv(tw, 0, c, 1, 6);
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(ca[k] == doctest::Approx(cb[k]).epsilon(1e-13));
        CHECK(ca[k] == doctest::Approx(cc[k]).epsilon(1e-13));
    }
}

TEST_CASE("cauchy_conv rejects empty hyperscripts") {
    Mesh mesh = Mesh::uniform(1, 1.0);
    auto g0 = random_grid(mesh, 2, 3, 1.0);
    TowerView tw{&g0};
    std::vector<std::size_t> none;
    CHECK_THROWS_AS(cauchy_conv(tw, 0, none, 0, 3), std::invalid_argument);
}

// ---- golden operators: the hand-written rows for each model must be
// reproduced by the table-driven assembler on random coefficient data ----

TEST_CASE("golden Lorenz operator rows") {
    const double sig = 10.0, rho = 28.0, bet = 8.0 / 3.0, lambda = -1.3;
    auto field = lorenz(sig, rho, bet);
    Mesh mesh({0.3, 0.7}, 1.17);
    const std::size_t m = 7, M = 3, D = 2;

    for (std::size_t alpha : {0u, 1u, 3u}) {
        std::vector<PeriodicPiecewise> lower;
        for (std::size_t b = 0; b < alpha; ++b) lower.push_back(random_grid(mesh, M, m, 0.6));
        auto current = random_grid(mesh, M, m, 0.6);

        SystemSpec spec;
        spec.alpha = alpha;
        spec.lambda = lambda;
        spec.boundary = BoundaryMode::periodic;
        ResidualSystem sys(field, mesh, m, spec);
        if (alpha >= 1) sys.set_lower_orders(&lower);
        auto F = sys.assemble(sys.pack(current));

        TowerView tw;
        for (auto& g : lower) tw.push_back(&g);
        tw.push_back(&current);
        std::vector<std::size_t> c13{0, 2}, c12{0, 1};
        for (std::size_t i = 0; i < D; ++i) {
            const double Li = mesh.domain_half_width(i);
            auto C13 = cauchy_conv(tw, i, c13, alpha, m + 1);
            auto C12 = cauchy_conv(tw, i, c12, alpha, m + 1);
            auto a1 = [&](long k) { return tw[alpha]->piece(i, 0).at_or_zero(k); };
            auto a2 = [&](long k) { return tw[alpha]->piece(i, 1).at_or_zero(k); };
            auto a3 = [&](long k) { return tw[alpha]->piece(i, 2).at_or_zero(k); };
            const double la = lambda * static_cast<double>(alpha);
            for (std::size_t k = 1; k < m; ++k) {
                const long kp = static_cast<long>(k) + 1, km = static_cast<long>(k) - 1;
                auto pm = [&](auto f) { return f(kp) - f(km); };
                const double f1 =
                    2.0 * k * a1(static_cast<long>(k)) +
                    Li * (-la * pm(a1) + sig * (pm(a2) - pm(a1)));
                const double f2 = 2.0 * k * a2(static_cast<long>(k)) +
                                  Li * (-la * pm(a2) + rho * pm(a1) -
                                        (C13.at_or_zero(kp) - C13.at_or_zero(km)) - pm(a2));
                const double f3 = 2.0 * k * a3(static_cast<long>(k)) +
                                  Li * (-la * pm(a3) +
                                        (C12.at_or_zero(kp) - C12.at_or_zero(km)) - bet * pm(a3));
                CHECK(F[static_cast<long>((i * M + 0) * m + k)] ==
                      doctest::Approx(f1).epsilon(1e-12));
                CHECK(F[static_cast<long>((i * M + 1) * m + k)] ==
                      doctest::Approx(f2).epsilon(1e-12));
                CHECK(F[static_cast<long>((i * M + 2) * m + k)] ==
                      doctest::Approx(f3).epsilon(1e-12));
            }
            // k = 0 rows are the boundary rows
            auto grid = sys.unpack(sys.pack(current));
            for (std::size_t j = 0; j < M; ++j) {
                const double expect = (i == 0) ? periodicity_row(grid, j) : chain_row(grid, i, j);
                CHECK(F[static_cast<long>((i * M + j) * m)] == doctest::Approx(expect));
            }
        }
    }
}

TEST_CASE("golden CRTBP operator rows (components 2 and 5)") {
    const double mu = 0.0123, lambda = 0.7;
    auto model = crtbp(mu);
    Mesh mesh = Mesh::uniform(2, 0.9);
    const std::size_t m = 6, M = 6;
    const std::size_t alpha = 2;
    std::vector<PeriodicPiecewise> lower{random_grid(mesh, M, m, 0.4),
                                         random_grid(mesh, M, m, 0.4)};
    auto current = random_grid(mesh, M, m, 0.4);

    SystemSpec spec;
    spec.alpha = alpha;
    spec.lambda = lambda;
    ResidualSystem sys(model.field, mesh, m, spec);
    sys.set_lower_orders(&lower);
    auto F = sys.assemble(sys.pack(current));

    TowerView tw{&lower[0], &lower[1], &current};
    std::vector<std::size_t> c1555{0, 4, 4, 4}, c1666{0, 5, 5, 5}, c555{4, 4, 4}, c666{5, 5, 5};
    std::vector<std::size_t> c12555{0, 1, 4, 4, 4}, c2555{1, 4, 4, 4}, c34555{2, 3, 4, 4, 4};
    for (std::size_t i = 0; i < mesh.domains(); ++i) {
        const double Li = mesh.domain_half_width(i);
        auto C = [&](const std::vector<std::size_t>& comps) {
            return cauchy_conv(tw, i, comps, alpha, m + 1);
        };
        auto A = [&](std::size_t j) { return tw[alpha]->piece(i, j); };
        auto C1555 = C(c1555), C1666 = C(c1666), C555 = C(c555), C666 = C(c666);
        auto C12555 = C(c12555), C2555 = C(c2555), C34555 = C(c34555);
        const double la = lambda * static_cast<double>(alpha);
        for (std::size_t k = 1; k < m; ++k) {
            const long kp = static_cast<long>(k) + 1, km = static_cast<long>(k) - 1;
            auto pm = [&](const ChebSeries& s) { return s.at_or_zero(kp) - s.at_or_zero(km); };
            // f2 = 2k a2 - L(alpha*lambda*a2pm - a1pm - 2a4pm + (1-mu)C(1,5,5,5)pm
            //      + mu C(1,6,6,6)pm + (mu - mu^2)C(5,5,5)pm + (mu^2 - mu)C(6,6,6)pm)
            const double f2 =
                2.0 * k * A(1)[k] -
                Li * (la * pm(A(1)) - pm(A(0)) - 2.0 * pm(A(3)) + (1.0 - mu) * pm(C1555) +
                      mu * pm(C1666) + (mu - mu * mu) * pm(C555) + (mu * mu - mu) * pm(C666));
            // f5 = 2k a5 - L(alpha*lambda*a5pm + C(1,2,5,5,5)pm + mu C(2,5,5,5)pm
            //      + C(3,4,5,5,5)pm)
            const double f5 = 2.0 * k * A(4)[k] -
                              Li * (la * pm(A(4)) + pm(C12555) + mu * pm(C2555) + pm(C34555));
            CHECK(F[static_cast<long>((i * M + 1) * m + k)] ==
                  doctest::Approx(f2).epsilon(1e-12));
            CHECK(F[static_cast<long>((i * M + 4) * m + k)] ==
                  doctest::Approx(f5).epsilon(1e-12));
        }
    }
}

TEST_CASE("golden CRFBP operator row (component 7)") {
    auto model = crfbp(kCrfbpM1, kCrfbpM2, kCrfbpM3);
    const double lambda = -0.05;
    Mesh mesh({0.0907, 0.607, 0.22, 0.0823}, 1.1);
    const std::size_t m = 5, M = 9;
    const std::size_t alpha = 1;
    std::vector<PeriodicPiecewise> lower{random_grid(mesh, M, m, 0.3)};
    auto current = random_grid(mesh, M, m, 0.3);

    SystemSpec spec;
    spec.alpha = alpha;
    spec.lambda = lambda;
    ResidualSystem sys(model.field, mesh, m, spec);
    sys.set_lower_orders(&lower);
    auto F = sys.assemble(sys.pack(current));

    const double x1 = model.primaries[0][0], y1 = model.primaries[0][1],
                 z1 = model.primaries[0][2];
    TowerView tw{&lower[0], &current};
    std::vector<std::size_t> c12777{0, 1, 6, 6, 6}, c34777{2, 3, 6, 6, 6}, c56777{4, 5, 6, 6, 6};
    std::vector<std::size_t> c2777{1, 6, 6, 6}, c4777{3, 6, 6, 6}, c6777{5, 6, 6, 6};
    for (std::size_t i = 0; i < mesh.domains(); ++i) {
        const double Li = mesh.domain_half_width(i);
        auto C = [&](const std::vector<std::size_t>& comps) {
            return cauchy_conv(tw, i, comps, alpha, m + 1);
        };
        auto C12 = C(c12777), C34 = C(c34777), C56 = C(c56777);
        auto C2 = C(c2777), C4 = C(c4777), C6 = C(c6777);
        const auto& a7 = current.piece(i, 6);
        for (std::size_t k = 1; k < m; ++k) {
            const long kp = static_cast<long>(k) + 1, km = static_cast<long>(k) - 1;
            auto pm = [&](const ChebSeries& s) { return s.at_or_zero(kp) - s.at_or_zero(km); };
            const double f7 =
                2.0 * k * a7[k] +
                Li * (-static_cast<double>(alpha) * lambda * pm(a7) - pm(C12) - pm(C34) -
                      pm(C56) + x1 * pm(C2) + y1 * pm(C4) + z1 * pm(C6));
            CHECK(F[static_cast<long>((i * M + 6) * m + k)] ==
                  doctest::Approx(f7).epsilon(1e-12));
        }
    }
}

// ---- analytic vs finite-difference Jacobians across formulations ----

namespace {

void check_jacobian(const ResidualSystem& sys, const Eigen::VectorXd& A, double tol = 1e-5) {
    auto J = sys.jacobian(A);
    auto Jfd = sys.jacobian_fd(A);
    const double scale = Jfd.cwiseAbs().maxCoeff();
    const double worst = (J - Jfd).cwiseAbs().maxCoeff();
    CHECK(worst / scale < tol);
}

} // namespace

TEST_CASE("jacobian: Lorenz formulations") {
    auto field = lorenz(10.0, 28.0, 8.0 / 3.0);
    Mesh mesh = Mesh::uniform(2, 1.1);
    const std::size_t m = 6;
    std::vector<PeriodicPiecewise> lower;
    for (int b = 0; b < 5; ++b) lower.push_back(random_grid(mesh, 3, m, 0.5));

    for (std::size_t alpha : {0u, 1u, 2u, 5u}) {
        SystemSpec spec;
        spec.alpha = alpha;
        spec.lambda = -0.8;
        if (alpha == 0) {
            spec.extra = ExtraUnknown::half_period;
            spec.phase.kind = PhaseSpec::Kind::poincare;
            spec.phase.poincare_point = {1.0, 2.0, 25.0};
        } else if (alpha == 1) {
            spec.extra = ExtraUnknown::exponent;
            spec.phase.kind = PhaseSpec::Kind::normalization;
            spec.phase.K = 2.0;
            spec.phase.k0 = 3;
        }
        ResidualSystem sys(field, mesh, m, spec);
        if (alpha >= 1) sys.set_lower_orders(&lower);
        auto grid = random_grid(mesh, 3, m, 0.5);
        check_jacobian(sys, sys.pack(grid, alpha == 0 ? 1.1 : -0.8));
    }
}

TEST_CASE("jacobian: CRTBP symmetric boundary + energy row") {
    auto model = crtbp(0.0123);
    Mesh mesh = Mesh::uniform(2, 0.8);
    const std::size_t m = 5;
    SystemSpec spec;
    spec.alpha = 0;
    spec.boundary = BoundaryMode::crtbp_symmetric;
    spec.extra = ExtraUnknown::half_period;
    spec.phase.kind = PhaseSpec::Kind::energy;
    spec.phase.energy = 3.17;
    ResidualSystem sys(model.field, mesh, m, spec);
    auto grid = random_grid(mesh, 6, m, 0.4);
    check_jacobian(sys, sys.pack(grid, 0.8));

    SystemSpec fixed;
    fixed.alpha = 0;
    fixed.boundary = BoundaryMode::crtbp_symmetric;
    ResidualSystem sys2(model.field, mesh, m, fixed);
    check_jacobian(sys2, sys2.pack(grid));
}

TEST_CASE("jacobian: CRFBP autodiff boundary + multiplier") {
    auto model = crfbp(kCrfbpM1, kCrfbpM2, kCrfbpM3);
    Mesh mesh({0.0907, 0.607, 0.22, 0.0823}, 1.0);
    const std::size_t m = 4;
    SystemSpec spec;
    spec.alpha = 0;
    spec.boundary = BoundaryMode::crfbp_autodiff;
    spec.extra = ExtraUnknown::multiplier;
    spec.phase.kind = PhaseSpec::Kind::poincare;
    spec.phase.poincare_point = std::vector<double>(9, 0.3);
    spec.primaries = model.primaries;
    ResidualSystem sys(model.field, mesh, m, spec);
    auto grid = random_grid(mesh, 9, m, 0.3);
    check_jacobian(sys, sys.pack(grid, 0.02));
}

TEST_CASE("ledger mismatch raises a configuration error") {
    auto field = lorenz();
    Mesh mesh = Mesh::uniform(2, 1.0);
    SystemSpec spec;
    spec.extra = ExtraUnknown::half_period; // no phase row to balance it
    CHECK_THROWS_AS(ResidualSystem(field, mesh, 5, spec), std::invalid_argument);
}

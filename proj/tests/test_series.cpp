#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "cheborbit/mesh.hpp"
#include "cheborbit/series.hpp"

using namespace cheborbit;

namespace {

// Quadrature oracle: Chebyshev coefficients of f by discrete orthogonality
// on the CGL grid.  Independent of the evaluation path it is used to check.
ChebSeries cgl_coeffs(const std::function<double(double)>& f, std::size_t n) {
    auto nodes = cgl_nodes(n);
    std::vector<double> vals(nodes.size());
    for (std::size_t q = 0; q < nodes.size(); ++q) vals[q] = f(nodes[q]);
    return interpolate_cgl(vals);
}

std::mt19937_64 rng(123456);

ChebSeries random_series(std::size_t m, double scale = 1.0) {
    std::uniform_real_distribution<double> dist(-scale, scale);
    ChebSeries s(m);
    for (auto& c : s.coeffs) c = dist(rng);
    return s;
}

} // namespace

TEST_CASE("eval: constant series") {
    ChebSeries s(std::vector<double>{1.0, 0.0, 0.0});
    CHECK(eval(s, 0.7) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("eval: T2 at cos(theta)") {
    ChebSeries s(std::vector<double>{0.0, 0.0, 0.5}); // 2*0.5*T2 = T2
    const double theta = M_PI / 5.0;
    CHECK(eval(s, std::cos(theta)) == doctest::Approx(std::cos(2.0 * theta)).epsilon(1e-14));
}

TEST_CASE("eval: exp series from quadrature oracle") {
    auto s = cgl_coeffs([](double t) { return std::exp(t); }, 19); // m = 20
    CHECK(std::abs(eval(s, 0.5) - std::exp(0.5)) < 1e-12);
}

TEST_CASE("eval: domain error outside [-1,1]") {
    ChebSeries s(std::vector<double>{1.0, 0.5});
    CHECK_THROWS_AS(eval(s, 1.001), std::domain_error);
    CHECK_THROWS_AS(eval(s, -2.0), std::domain_error);
}

TEST_CASE("endpoint_sum: trivial cases") {
    CHECK(endpoint_sum(ChebSeries(std::vector<double>{1.0, 0.0, 0.0}), Side::right) == 1.0);
    CHECK(endpoint_sum(ChebSeries(std::vector<double>{0.0, 0.5}), Side::left) ==
          doctest::Approx(-1.0));
}

TEST_CASE("endpoint_sum: exp series right endpoint is e") {
    auto s = cgl_coeffs([](double t) { return std::exp(t); }, 19);
    CHECK(std::abs(endpoint_sum(s, Side::right) - std::exp(1.0)) < 1e-12);
}

TEST_CASE("endpoint_sum equals eval at the endpoints") {
    for (int rep = 0; rep < 20; ++rep) {
        auto s = random_series(12);
        CHECK(std::abs(endpoint_sum(s, Side::right) - eval(s, 1.0)) < 1e-13);
        CHECK(std::abs(endpoint_sum(s, Side::left) - eval(s, -1.0)) < 1e-13);
    }
}

TEST_CASE("convolve: constant multiplier") {
    ChebSeries a(std::vector<double>{3.0});
    auto b = random_series(6);
    auto c = convolve(a, b, 6);
    for (std::size_t k = 0; k < 6; ++k) CHECK(c[k] == doctest::Approx(3.0 * b[k]));
}

TEST_CASE("convolve: T1*T1 = (1+T2)/2") {
    ChebSeries t1(std::vector<double>{0.0, 0.5});
    auto c = convolve(t1, t1, 3);
    CHECK(c[0] == doctest::Approx(0.5));
    CHECK(c[1] == doctest::Approx(0.0));
    CHECK(c[2] == doctest::Approx(0.25));
}

TEST_CASE("convolve: product correctness at random points") {
    std::uniform_real_distribution<double> tdist(-1.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        auto a = random_series(9);
        auto b = random_series(14);
        auto c = convolve(a, b, 9 + 14 - 1);
        for (int q = 0; q < 50; ++q) {
            const double t = tdist(rng);
            CHECK(std::abs(eval(c, t) - eval(a, t) * eval(b, t)) < 1e-10);
        }
    }
}

TEST_CASE("convolve direct vs fft") {
    for (int rep = 0; rep < 10; ++rep) {
        auto a = random_series(32);
        auto b = random_series(32);
        auto c1 = convolve(a, b, 63);
        auto c2 = convolve_fft(a, b, 63);
        for (std::size_t k = 0; k < 63; ++k) CHECK(std::abs(c1[k] - c2[k]) < 1e-13);
    }
}

TEST_CASE("mesh: uniform proportions are exact") {
    auto mesh = Mesh::uniform(8, 2.0);
    for (double p : mesh.proportions) CHECK(p == 1.0 / 8.0);
    CHECK(mesh.period() == doctest::Approx(4.0));
}

TEST_CASE("mesh: proportions must sum to one") {
    CHECK_THROWS_AS(Mesh({0.5, 0.4}, 1.0), std::invalid_argument);
}

TEST_CASE("mesh: locate maps seams consistently") {
    Mesh mesh({0.25, 0.5, 0.25}, 2.0); // period 4
    auto [i0, t0] = mesh.locate(0.0);
    CHECK(i0 == 0);
    CHECK(t0 == doctest::Approx(-1.0));
    auto [i1, t1] = mesh.locate(1.0); // end of first domain (width 1)
    CHECK(i1 == 0);
    CHECK(t1 == doctest::Approx(1.0));
    auto [i2, t2] = mesh.locate(1.5);
    CHECK(i2 == 1);
    CHECK(t2 == doctest::Approx(-0.5));
    auto [i3, t3] = mesh.locate(4.25); // wraps
    CHECK(i3 == 0);
    CHECK(t3 == doctest::Approx(-0.5));
}

TEST_CASE("tail_norm") {
    PeriodicPiecewise p(Mesh::uniform(2, 1.0), 3, 4);
    CHECK(tail_norm(p, 0) == 0.0);
    p.piece(1, 2)[3] = 2.5;
    CHECK(tail_norm(p, 1) == doctest::Approx(2.5));
    CHECK(tail_norm_max(p) == doctest::Approx(2.5));
}

TEST_CASE("interpolate_cgl round trip") {
    auto s = random_series(10);
    auto nodes = cgl_nodes(9);
    std::vector<double> vals(nodes.size());
    for (std::size_t q = 0; q < nodes.size(); ++q) vals[q] = eval(s, nodes[q]);
    auto s2 = interpolate_cgl(vals);
    for (std::size_t k = 0; k < 10; ++k) CHECK(s2[k] == doctest::Approx(s[k]).epsilon(1e-12));
}

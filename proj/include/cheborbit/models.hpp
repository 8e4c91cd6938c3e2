#pragma once

#include <array>
#include <optional>

#include "cheborbit/polyfield.hpp"

namespace cheborbit {

/// Lorenz field (x' = s(y-x), y' = rx - y - xz, z' = xy - bz).
PolyField lorenz(double sigma = 10.0, double rho = 27.0, double beta = 8.0 / 3.0);

struct LiftedModel {
    PolyField field;
    LiftMap lift;
};

/// Kepler demonstration problem x' = y, y' = -M x / |x|^3 with the
/// reciprocal-distance coordinate z = 1/|x| appended (d = 2, D = 3).
LiftedModel kepler(double M_mass = 1.0);

/// Planar CRTBP in co-rotating coordinates (x, x', y, y'), polynomialized by
/// appending the reciprocal distances to the primaries (d = 4, D = 6).
LiftedModel crtbp(double mu);

struct CrfbpModel {
    PolyField field;
    LiftMap lift;
    std::array<std::array<double, 3>, 3> primaries; // p1, p2, p3 as (x,y,z)
};

/// Spatial CRFBP about the Lagrange triangle configuration (x,x',y,y',z,z'),
/// polynomialized with the three reciprocal distances appended (d = 6, D = 9).
/// The Lagrange-multiplier slots beta, alpha1..alpha3 are retained as terms
/// with the given coefficients (all zero at true solutions).
CrfbpModel crfbp(double m1, double m2, double m3, double beta = 0.0, double alpha1 = 0.0,
                 double alpha2 = 0.0, double alpha3 = 0.0);

/// Paper-grade CRFBP masses (binary star + planet + trojan companion).
inline constexpr double kCrfbpM1 = 0.9987;
inline constexpr double kCrfbpM2 = 0.0010;
inline constexpr double kCrfbpM3 = 0.0003;

/// Jacobi integral in the lifted CRTBP coordinates:
/// E = v1^2 + v3^2 + 2(1-mu)v5 + 2mu v6 - v2^2 - v4^2.
double crtbp_energy(std::span<const double> v, double mu);

/// Collinear libration point of the CRTBP: root of the effective-potential
/// gradient on the x axis.  index is 1, 2 or 3 (between, beyond small,
/// beyond large primary).
double crtbp_collinear_point(double mu, int index);

/// Planar equilibria of the CRFBP found by Newton on (Omega_x, Omega_y) from
/// a grid of seeds; deduplicated, sorted by distance to p1.
std::vector<std::array<double, 2>> crfbp_equilibria(const CrfbpModel& model);

/// Second derivatives of the CRFBP effective potential at a planar point.
struct PotentialHessian {
    double xx = 0.0, xy = 0.0, yy = 0.0;
};
PotentialHessian crfbp_potential_hessian(const CrfbpModel& model, double x, double y);

} // namespace cheborbit

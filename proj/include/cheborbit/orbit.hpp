#pragma once

#include <string>

#include "cheborbit/flow.hpp"
#include "cheborbit/models.hpp"
#include "cheborbit/newton.hpp"
#include "cheborbit/residual.hpp"

namespace cheborbit {

enum class Formulation {
    autonomous_poincare,    // unknown L, Poincare row (Lorenz)
    symmetric_fixed_L,      // CRTBP perpendicular-crossing rows, L given
    symmetric_fixed_energy, // CRTBP rows, unknown L, Jacobi-energy row
    multiplier_poincare,    // CRFBP: fixed L, unknown unfolding multiplier beta
};

struct OrbitProblem {
    PolyField field;
    Formulation formulation = Formulation::autonomous_poincare;
    Mesh mesh;      // proportions; half_period is the initial/fixed L
    std::size_t m = 50;
    double energy = 0.0; // symmetric_fixed_energy target
    std::array<std::array<double, 3>, 3> primaries{}; // multiplier_poincare rows
    NewtonSettings newton;
    double collision_guard = 1e-3;
};

struct OrbitSolution {
    PeriodicPiecewise orbit;
    double half_period = 0.0;
    double beta = 0.0; // CRFBP unfolding multiplier; ~0 at true solutions
    std::vector<double> anchor; // Poincare anchor point p0
    NewtonReport report;
    bool collision_warning = false;
};

/// Interpolate a trajectory of `flow` starting at x0 onto the mesh: each
/// subdomain holds the CGL interpolant of the sampled flow.
PeriodicPiecewise sample_trajectory(const Flow& flow, std::span<const double> x0,
                                    const Mesh& mesh, std::size_t m);

struct CloseReturn {
    std::vector<double> state;
    double period = 0.0;
    double gap = 0.0;
    std::string symbols;
};

/// Lorenz seeding: hunt for a close return whose lobe-crossing labels match
/// the requested symbol sequence (up to rotation).  Crossings are the maxima
/// of z, labelled A for x > 0 and B for x < 0.  Throws if no return with
/// gap <= gap_accept is found within the time budget.
CloseReturn lorenz_close_return(const PolyField& field, const std::string& symbols,
                                double time_budget = 20000.0, double gap_accept = 5e-2,
                                unsigned rng_seed = 2);

/// Polish a near-periodic point by single shooting (Newton on (x0, T) with a
/// transversal anchor), reducing the return gap to ~1e-9.
CloseReturn refine_close_return(const PolyField& field, CloseReturn cr);

/// Move the phase of a Lorenz close return to the classical section point:
/// the ascending crossing of z = rho - 1 with x < 0.  Anchoring there keeps
/// chart gauges comparable across runs.
CloseReturn lorenz_section_anchor(const PolyField& field, const CloseReturn& cr);

/// Planar Lyapunov loop of a CRTBP-like model obtained from the linearization
/// at a collinear equilibrium plus differential correction of the x-axis
/// crossing.  Works in the original (unlifted) coordinates.
struct SymmetricLoop {
    double x0 = 0.0, vy0 = 0.0;
    double half_period = 0.0; // time between perpendicular crossings = tau/2
};

SymmetricLoop crtbp_lyapunov_loop(double mu, int libration_index, double amplitude);
/// Continue the family in amplitude until the Jacobi energy reaches `energy`.
SymmetricLoop crtbp_loop_at_energy(double mu, int libration_index, double energy);
/// Continue until tau/2 reaches `half_period`.
SymmetricLoop crtbp_loop_at_half_period(double mu, int libration_index, double half_period);

/// CRFBP planar Lyapunov loop about an equilibrium, corrected by shooting in
/// the original coordinates (no symmetry assumed; the x-offset from the
/// equilibrium anchors the phase and parameterizes the family).
struct PlanarLoop {
    std::vector<double> state4; // (x, x', y, y') at t = 0
    double half_period = 0.0;
    double lambda = 0.0; // unstable Floquet exponent from the lifted monodromy
};
PlanarLoop crfbp_planar_loop(const CrfbpModel& model, std::array<double, 2> equilibrium,
                             double amplitude, const PlanarLoop* warm = nullptr);
/// Walk the family until the unstable exponent reaches lambda_target
/// (exponents decrease with amplitude for the weak-saddle families).
PlanarLoop crfbp_loop_at_lambda(const CrfbpModel& model, std::array<double, 2> equilibrium,
                                double lambda_target);

/// Solve the orbit BVP from a mesh-sampled seed.  The Poincare anchor (when
/// the formulation uses one) is the seed's state at t = 0.
OrbitSolution solve_orbit(const OrbitProblem& problem, const PeriodicPiecewise& seed);

/// Independent defect check: flows between n_samples consecutive samples of
/// the orbit with a tight RK oracle and returns the max mismatch.
double validate_orbit(const PeriodicPiecewise& orbit, const PolyField& field,
                      std::size_t n_samples, FlowSettings settings = {});

} // namespace cheborbit

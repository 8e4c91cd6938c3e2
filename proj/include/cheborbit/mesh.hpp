#pragma once

#include <cstddef>
#include <vector>

#include "cheborbit/series.hpp"

namespace cheborbit {

/// Partition of one period into D subdomains.  Subdomain i covers the
/// physical time slice [t_{i-1}, t_i] of width 2*L_i where L_i = p_i * L
/// and L is half the period.  Each slice is rescaled to [-1,1].
struct Mesh {
    std::vector<double> proportions; // p_1..p_D, sum to 1
    double half_period = 0.0;        // L

    Mesh() = default;
    Mesh(std::vector<double> props, double L);
    static Mesh uniform(std::size_t domains, double L);

    std::size_t domains() const { return proportions.size(); }
    double period() const { return 2.0 * half_period; }
    /// L_i of subdomain i (0-based).
    double domain_half_width(std::size_t i) const { return proportions[i] * half_period; }
    /// Physical start time of subdomain i.
    double domain_start(std::size_t i) const;

    /// Map physical time (wrapped mod the period) to (subdomain, local t in [-1,1]).
    std::pair<std::size_t, double> locate(double time) const;

    Mesh with_half_period(double L) const { return Mesh(proportions, L); }
};

/// A periodic R^M-valued function over a mesh: D x M grid of ChebSeries.
/// Endpoint matching between consecutive pieces and periodicity across the
/// seam are equation residuals before solving and hold to solver tolerance
/// after.
struct PeriodicPiecewise {
    Mesh mesh;
    std::size_t components = 0; // M
    std::vector<ChebSeries> pieces; // indexed (i, j) -> pieces[i*M + j]

    PeriodicPiecewise() = default;
    PeriodicPiecewise(Mesh mesh_, std::size_t M, std::size_t coeffs_per_piece);

    std::size_t coeffs_per_piece() const {
        return pieces.empty() ? 0 : pieces.front().size();
    }
    const ChebSeries& piece(std::size_t i, std::size_t j) const {
        return pieces[i * components + j];
    }
    ChebSeries& piece(std::size_t i, std::size_t j) {
        return pieces[i * components + j];
    }

    /// Value of component j at physical time (wrapped into one period).
    double eval_component(double time, std::size_t j) const;
    /// Full state at physical time.
    std::vector<double> eval_state(double time) const;
};

/// Sum over components and coefficients of |a_k| on subdomain i.
double tail_norm(const PeriodicPiecewise& p, std::size_t i);

/// max_i tail_norm(p, i); the scaling heuristic's target quantity.
double tail_norm_max(const PeriodicPiecewise& p);

} // namespace cheborbit

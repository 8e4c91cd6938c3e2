#pragma once

#include <complex>

#include "cheborbit/flow.hpp"
#include "cheborbit/newton.hpp"
#include "cheborbit/residual.hpp"

namespace cheborbit {

/// Stable/unstable normal bundle of a periodic orbit: the periodic
/// eigenfunction v(t) and Floquet exponent lambda solving
/// v' = Dg(gamma) v - lambda v with the truncated-coefficient normalization.
struct FloquetBundle {
    double lambda = 0.0;
    PeriodicPiecewise v;
    double K = 1.0;
    std::size_t k0 = 10;
    bool stable = true; // lambda < 0
    NewtonReport report;
};

/// Floquet multipliers of the orbit from the monodromy matrix (variational
/// equations integrated over one period with the RK oracle).
std::vector<std::complex<double>> monodromy_multipliers(const PeriodicPiecewise& orbit,
                                                        const PolyField& field,
                                                        FlowSettings settings = {});

struct BundleSeed {
    PeriodicPiecewise v;
    double lambda = 0.0;
};

/// Monodromy-based seed: picks the real multiplier on the requested side of
/// the unit circle, converts to an exponent, and propagates the eigenvector
/// along the orbit.  Throws if the requested side holds no real positive
/// multiplier (complex pair or non-orientable bundle: out of scope).
BundleSeed seed_bundle(const PeriodicPiecewise& orbit, const PolyField& field, bool stable,
                       std::size_t m, FlowSettings settings = {});

/// Solve the alpha = 1 eigenproblem for (v, lambda) from the monodromy seed.
/// K scales the eigenfunction through sum_j sum_{k<=k0} (a^{(1,j)}_k)^2 = K.
FloquetBundle solve_bundle(const PeriodicPiecewise& orbit, const PolyField& field, bool stable,
                           double K, std::size_t k0, NewtonSettings newton = {},
                           const BundleSeed* seed = nullptr);

} // namespace cheborbit

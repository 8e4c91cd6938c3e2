#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cheborbit/polyfield.hpp"

namespace cheborbit {

struct FlowSettings {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    double initial_step = 1e-3;
    std::size_t max_steps = 50'000'000;
    double min_step = 1e-14;
};

struct FlowResult {
    std::vector<double> state;
    double error_estimate = 0.0; // accumulated local error estimates
    std::size_t steps = 0;
};

/// Adaptive embedded Runge-Kutta 5(4) flow map for a polynomial field.
/// Integrates to exactly the requested time (negative t integrates backward).
/// Throws on step-size collapse, reporting the location.
class Flow {
  public:
    Flow(PolyField field, FlowSettings settings = {});

    const PolyField& field() const { return field_; }
    const FlowSettings& settings() const { return settings_; }

    FlowResult integrate(std::span<const double> x0, double t) const;
    std::vector<double> operator()(std::span<const double> x0, double t) const {
        return integrate(x0, t).state;
    }

    /// Integrate the state together with the variational matrix dPhi/dx0;
    /// returns M + M*M packed values (state first, then row-major matrix).
    std::vector<double> integrate_variational(std::span<const double> x0, double t) const;

    /// Sample the trajectory at the given (sorted, nonnegative) times.
    std::vector<std::vector<double>> sample(std::span<const double> x0,
                                            std::span<const double> times) const;

  private:
    PolyField field_;
    FlowSettings settings_;

    FlowResult integrate_rhs(const std::function<void(const std::vector<double>&, std::vector<double>&)>& rhs,
                             std::span<const double> x0, double t) const;
};

} // namespace cheborbit

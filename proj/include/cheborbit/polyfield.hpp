#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace cheborbit {

/// One monomial term c * x_{f1} * x_{f2} * ... feeding component `target`.
/// Factor lists are kept sorted so equal monomials compare equal and products
/// map 1:1 onto Cauchy-convolution calls.
struct Monomial {
    std::size_t target = 0;
    double coeff = 0.0;
    std::vector<std::size_t> factors; // empty means constant term

    Monomial() = default;
    Monomial(std::size_t target_, double coeff_, std::vector<std::size_t> factors_);
};

/// A polynomial vector field x' = g(x) as a list of monomial terms.
struct PolyField {
    std::size_t dim = 0;
    std::vector<Monomial> terms;
    std::map<std::string, double> params;

    void add(std::size_t target, double coeff, std::vector<std::size_t> factors);

    std::vector<double> eval(std::span<const double> x) const;
    /// Jacobian by formal monomial differentiation, row-major M x M.
    std::vector<double> jacobian(std::span<const double> x) const;
    double divergence(std::span<const double> x) const;
    /// Field with t -> -t (all coefficients negated).
    PolyField time_reversed() const;
};

/// Polynomializing change of variables R: R^d -> R^D appending closed-form
/// coordinates (reciprocal distances), with pi_d o R = id.  DR(x) f(x) =
/// F(R(x)) holds on the guard-satisfying set.
struct LiftMap {
    std::size_t dim_orig = 0;
    std::size_t dim_lifted = 0;
    std::function<std::vector<double>(std::span<const double>)> lift;
    std::function<std::vector<double>(std::span<const double>)> field_orig;
    std::function<bool(std::span<const double>)> guard;
};

/// Max over sampled guard-satisfying points of |DR(x) f(x) - F(R(x))|_inf,
/// with DR by central finite differences (relative step 1e-6).  Points are
/// drawn from [-box, box]^d; throws if no guard-satisfying sample is found
/// within bounded retries.
double check_lift(const LiftMap& lift, const PolyField& field_poly, std::size_t samples,
                  double box = 1.5, unsigned seed = 20240801);

} // namespace cheborbit

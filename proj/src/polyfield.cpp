#include "cheborbit/polyfield.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cheborbit {

Monomial::Monomial(std::size_t target_, double coeff_, std::vector<std::size_t> factors_)
    : target(target_), coeff(coeff_), factors(std::move(factors_)) {
    std::sort(factors.begin(), factors.end());
}

void PolyField::add(std::size_t target, double coeff, std::vector<std::size_t> factors) {
    if (target >= dim) throw std::invalid_argument("PolyField: target out of range");
    for (std::size_t f : factors)
        if (f >= dim) throw std::invalid_argument("PolyField: factor out of range");
    terms.emplace_back(target, coeff, std::move(factors));
}

std::vector<double> PolyField::eval(std::span<const double> x) const {
    if (x.size() != dim) throw std::invalid_argument("PolyField eval: dimension mismatch");
    std::vector<double> out(dim, 0.0);
    for (const auto& t : terms) {
        double v = t.coeff;
        for (std::size_t f : t.factors) v *= x[f];
        out[t.target] += v;
    }
    return out;
}

std::vector<double> PolyField::jacobian(std::span<const double> x) const {
    if (x.size() != dim) throw std::invalid_argument("PolyField jacobian: dimension mismatch");
    std::vector<double> J(dim * dim, 0.0);
    for (const auto& t : terms) {
        for (std::size_t p = 0; p < t.factors.size(); ++p) {
            double v = t.coeff;
            for (std::size_t q = 0; q < t.factors.size(); ++q)
                if (q != p) v *= x[t.factors[q]];
            J[t.target * dim + t.factors[p]] += v;
        }
    }
    return J;
}

double PolyField::divergence(std::span<const double> x) const {
    auto J = jacobian(x);
    double tr = 0.0;
    for (std::size_t j = 0; j < dim; ++j) tr += J[j * dim + j];
    return tr;
}

PolyField PolyField::time_reversed() const {
    PolyField r = *this;
    for (auto& t : r.terms) t.coeff = -t.coeff;
    return r;
}

double check_lift(const LiftMap& lift, const PolyField& field_poly, std::size_t samples,
                  double box, unsigned seed) {
    if (samples < 1) throw std::invalid_argument("check_lift: samples must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-box, box);
    const std::size_t d = lift.dim_orig;
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        std::vector<double> x(d);
        bool ok = false;
        for (int attempt = 0; attempt < 1000; ++attempt) {
            for (auto& xi : x) xi = dist(rng);
            if (!lift.guard || lift.guard(x)) {
                ok = true;
                break;
            }
        }
        if (!ok) throw std::runtime_error("check_lift: no guard-satisfying sample found");
        const auto fx = lift.field_orig(x);
        const auto Rx = lift.lift(x);
        const auto FRx = field_poly.eval(Rx);
        // DR f by central differences, column by column
        std::vector<double> DRf(lift.dim_lifted, 0.0);
        for (std::size_t c = 0; c < d; ++c) {
            const double h = 1e-6 * std::max(1.0, std::abs(x[c]));
            auto xp = x, xm = x;
            xp[c] += h;
            xm[c] -= h;
            const auto Rp = lift.lift(xp);
            const auto Rm = lift.lift(xm);
            for (std::size_t r = 0; r < lift.dim_lifted; ++r)
                DRf[r] += (Rp[r] - Rm[r]) / (2.0 * h) * fx[c];
        }
        for (std::size_t r = 0; r < lift.dim_lifted; ++r)
            worst = std::max(worst, std::abs(DRf[r] - FRx[r]));
    }
    return worst;
}

} // namespace cheborbit

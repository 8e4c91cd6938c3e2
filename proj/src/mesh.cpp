#include "cheborbit/mesh.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cheborbit {

Mesh::Mesh(std::vector<double> props, double L) : proportions(std::move(props)), half_period(L) {
    if (proportions.empty()) throw std::invalid_argument("Mesh: need at least one subdomain");
    double sum = std::accumulate(proportions.begin(), proportions.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("Mesh: proportions must sum to 1");
    for (double p : proportions)
        if (!(p > 0.0)) throw std::invalid_argument("Mesh: proportions must be positive");
}

Mesh Mesh::uniform(std::size_t domains, double L) {
    if (domains == 0) throw std::invalid_argument("Mesh: need at least one subdomain");
    return Mesh(std::vector<double>(domains, 1.0 / static_cast<double>(domains)), L);
}

double Mesh::domain_start(std::size_t i) const {
    double t = 0.0;
    for (std::size_t q = 0; q < i; ++q) t += 2.0 * domain_half_width(q);
    return t;
}

std::pair<std::size_t, double> Mesh::locate(double time) const {
    const double tau = period();
    double t = std::fmod(time, tau);
    if (t < 0.0) t += tau;
    double start = 0.0;
    for (std::size_t i = 0; i < domains(); ++i) {
        const double width = 2.0 * domain_half_width(i);
        if (t <= start + width || i + 1 == domains()) {
            double local = (t - start) / width * 2.0 - 1.0;
            return {i, std::clamp(local, -1.0, 1.0)};
        }
        start += width;
    }
    return {domains() - 1, 1.0}; // unreachable
}

PeriodicPiecewise::PeriodicPiecewise(Mesh mesh_, std::size_t M, std::size_t coeffs_per_piece)
    : mesh(std::move(mesh_)), components(M),
      pieces(mesh.domains() * M, ChebSeries(coeffs_per_piece)) {}

double PeriodicPiecewise::eval_component(double time, std::size_t j) const {
    auto [i, local] = mesh.locate(time);
    return eval(piece(i, j), local);
}

std::vector<double> PeriodicPiecewise::eval_state(double time) const {
    auto [i, local] = mesh.locate(time);
    std::vector<double> out(components);
    for (std::size_t j = 0; j < components; ++j) out[j] = eval(piece(i, j), local);
    return out;
}

double tail_norm(const PeriodicPiecewise& p, std::size_t i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < p.components; ++j) sum += abs_sum(p.piece(i, j));
    return sum;
}

double tail_norm_max(const PeriodicPiecewise& p) {
    double best = 0.0;
    for (std::size_t i = 0; i < p.mesh.domains(); ++i) best = std::max(best, tail_norm(p, i));
    return best;
}

} // namespace cheborbit

#include "cheborbit/flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cheborbit {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                 e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                 e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

} // namespace

Flow::Flow(PolyField field, FlowSettings settings)
    : field_(std::move(field)), settings_(settings) {}

FlowResult Flow::integrate_rhs(
    const std::function<void(const std::vector<double>&, std::vector<double>&)>& rhs,
    std::span<const double> x0, double t) const {
    const std::size_t n = x0.size();
    std::vector<double> y(x0.begin(), x0.end());
    FlowResult result;
    if (t == 0.0) {
        result.state = y;
        return result;
    }
    const double dir = t > 0 ? 1.0 : -1.0;
    double remaining = std::abs(t);
    double h = std::min(settings_.initial_step, remaining);

    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y5(n);
    rhs(y, k1);
    for (std::size_t step = 0; step < settings_.max_steps; ++step) {
        if (remaining <= 0.0) break;
        h = std::min(h, remaining);
        const double hd = dir * h;

        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hd * a21 * k1[i];
        rhs(tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + hd * (a31 * k1[i] + a32 * k2[i]);
        rhs(tmp, k3);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + hd * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + hd * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(tmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + hd * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(tmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            y5[i] = y[i] + hd * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(y5, k7);

        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ei = hd * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                    e6 * k6[i] + e7 * k7[i]);
            const double sc = settings_.abs_tol +
                              settings_.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
            err = std::max(err, std::abs(ei) / sc);
        }
        if (err <= 1.0) {
            y = y5;
            k1 = k7; // FSAL
            remaining -= h;
            result.error_estimate += err * settings_.abs_tol;
            ++result.steps;
        }
        double factor = 0.9 * std::pow(std::max(err, 1e-10), -0.2);
        factor = std::clamp(factor, 0.2, 5.0);
        h *= factor;
        if (h < settings_.min_step && remaining > settings_.min_step) {
            std::string where = "(";
            for (std::size_t i = 0; i < n && i < 6; ++i)
                where += (i ? ", " : "") + std::to_string(y[i]);
            where += ")";
            throw std::runtime_error("Flow: step size collapse near state " + where);
        }
    }
    if (remaining > settings_.min_step)
        throw std::runtime_error("Flow: max step count exceeded");
    result.state = std::move(y);
    return result;
}

FlowResult Flow::integrate(std::span<const double> x0, double t) const {
    if (x0.size() != field_.dim) throw std::invalid_argument("Flow: state dimension mismatch");
    std::vector<double> fx(field_.dim);
    auto rhs = [this](const std::vector<double>& y, std::vector<double>& dy) {
        auto g = field_.eval(y);
        std::copy(g.begin(), g.end(), dy.begin());
    };
    return integrate_rhs(rhs, x0, t);
}

std::vector<double> Flow::integrate_variational(std::span<const double> x0, double t) const {
    const std::size_t M = field_.dim;
    if (x0.size() != M) throw std::invalid_argument("Flow: state dimension mismatch");
    std::vector<double> w(M + M * M, 0.0);
    std::copy(x0.begin(), x0.end(), w.begin());
    for (std::size_t i = 0; i < M; ++i) w[M + i * M + i] = 1.0;
    auto rhs = [this, M](const std::vector<double>& y, std::vector<double>& dy) {
        std::span<const double> state(y.data(), M);
        auto g = field_.eval(state);
        auto J = field_.jacobian(state);
        std::copy(g.begin(), g.end(), dy.begin());
        for (std::size_t r = 0; r < M; ++r)
            for (std::size_t c = 0; c < M; ++c) {
                double sum = 0.0;
                for (std::size_t q = 0; q < M; ++q) sum += J[r * M + q] * y[M + q * M + c];
                dy[M + r * M + c] = sum;
            }
    };
    return integrate_rhs(rhs, w, t).state;
}

std::vector<std::vector<double>> Flow::sample(std::span<const double> x0,
                                              std::span<const double> times) const {
    std::vector<std::vector<double>> out;
    out.reserve(times.size());
    std::vector<double> current(x0.begin(), x0.end());
    double t_current = 0.0;
    for (double t : times) {
        current = integrate(current, t - t_current).state;
        t_current = t;
        out.push_back(current);
    }
    return out;
}

} // namespace cheborbit

#include "cheborbit/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "cheborbit/newton.hpp"

namespace cheborbit {

std::vector<double> ManifoldParam::eval_P(double t, double sigma) const {
    return eval_P_truncated(t, sigma, orders.size() - 1);
}

std::vector<double> ManifoldParam::eval_P_truncated(double t, double sigma, std::size_t n) const {
    if (std::abs(sigma) > 1.0 + 1e-12)
        throw std::domain_error("eval_P: |sigma| > 1 is outside the chart");
    n = std::min(n, orders.size() - 1);
    auto [i, local] = mesh.locate(t);
    const std::size_t M = field.dim;
    std::vector<double> out(M);
    for (std::size_t j = 0; j < M; ++j) {
        double acc = 0.0;
        for (std::size_t a = n + 1; a-- > 0;) acc = acc * sigma + eval(orders[a].piece(i, j), local);
        out[j] = acc;
    }
    return out;
}

namespace {

// Incremental partial products of the Taylor tower for each distinct
// monomial factor multiset, per domain, at full Chebyshev support.
class CauchyCache {
  public:
    CauchyCache(const PolyField& field, std::size_t domains) : domains_(domains) {
        for (const auto& term : field.terms) {
            if (term.factors.size() < 2) continue;
            if (index_.count(term.factors)) continue;
            index_[term.factors] = chains_.size();
            chains_.push_back(Chain{term.factors, {}});
        }
        for (auto& chain : chains_)
            chain.levels.assign(domains_ * (chain.comps.size() - 1), {});
    }

    // extend all chains with the new top order of the tower
    void advance(const std::vector<PeriodicPiecewise>& tower) {
        const std::size_t alpha = tower.size() - 1;
        for (auto& chain : chains_) {
            const std::size_t n = chain.comps.size();
            for (std::size_t i = 0; i < domains_; ++i) {
                for (std::size_t l = 0; l < n - 1; ++l) {
                    auto& level = chain.levels[i * (n - 1) + l];
                    ChebSeries acc;
                    if (l == 0) {
                        acc = tower[alpha].piece(i, chain.comps[0]);
                    } else {
                        const auto& prev = chain.levels[i * (n - 1) + l - 1];
                        for (std::size_t c = 0; c <= alpha; ++c) {
                            const ChebSeries& lhs = prev[alpha - c];
                            const ChebSeries& rhs = tower[c].piece(i, chain.comps[l]);
                            add_conv(acc, lhs, rhs);
                        }
                    }
                    level.push_back(std::move(acc));
                }
            }
        }
    }

    // order-alpha coefficient of the full product with every part < alpha
    // (tower currently holds orders 0..alpha-1)
    ChebSeries forcing(const std::vector<PeriodicPiecewise>& tower, std::size_t i,
                       const std::vector<std::size_t>& comps, std::size_t alpha,
                       std::size_t out_len) const {
        const auto it = index_.find(comps);
        if (it == index_.end()) throw std::logic_error("CauchyCache: unknown monomial");
        const Chain& chain = chains_[it->second];
        const std::size_t n = chain.comps.size();
        ChebSeries q; // running restricted order-alpha coefficient
        for (std::size_t l = 1; l < n; ++l) {
            ChebSeries next;
            if (q.size() > 0) add_conv(next, q, tower[0].piece(i, chain.comps[l]));
            const auto& prev = chain.levels[i * (n - 1) + l - 1];
            for (std::size_t c = 1; c < alpha; ++c)
                add_conv(next, prev[alpha - c], tower[c].piece(i, chain.comps[l]));
            q = std::move(next);
        }
        ChebSeries out(out_len);
        for (std::size_t k = 0; k < out_len && k < q.size(); ++k) out[k] = q[k];
        return out;
    }

  private:
    struct Chain {
        std::vector<std::size_t> comps;
        // levels[i*(n-1)+l][beta]: product of comps[0..l] at order beta
        std::vector<std::vector<ChebSeries>> levels;
    };
    std::size_t domains_;
    std::vector<Chain> chains_;
    std::map<std::vector<std::size_t>, std::size_t> index_;

    static void add_conv(ChebSeries& acc, const ChebSeries& a, const ChebSeries& b) {
        if (a.size() == 0 || b.size() == 0) return;
        ChebSeries part = convolve(a, b, a.size() + b.size() - 1);
        if (acc.size() < part.size()) acc.coeffs.resize(part.size(), 0.0);
        for (std::size_t k = 0; k < part.size(); ++k) acc[k] += part[k];
    }
};

// Linear operator of the homological equation split as J_base + alpha*lambda*S.
struct HomologicalOperator {
    Eigen::MatrixXd base;
    Eigen::MatrixXd shift; // multiplies alpha*lambda

    HomologicalOperator(const PolyField& field, const PeriodicPiecewise& orbit, std::size_t m) {
        SystemSpec spec;
        spec.alpha = 2; // any fixed order >= 2; lambda enters through `shift`
        spec.lambda = 0.0;
        spec.boundary = BoundaryMode::periodic;
        ResidualSystem sys(field, orbit.mesh, m, spec);
        std::vector<PeriodicPiecewise> lower{orbit, PeriodicPiecewise(orbit.mesh, field.dim, m)};
        sys.set_lower_orders(&lower);
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<long>(sys.unknown_count()));
        base = sys.jacobian(zero);

        const Mesh& mesh = orbit.mesh;
        const std::size_t M = field.dim, D = mesh.domains();
        shift = Eigen::MatrixXd::Zero(base.rows(), base.cols());
        for (std::size_t i = 0; i < D; ++i) {
            const double L_i = mesh.domain_half_width(i);
            for (std::size_t j = 0; j < M; ++j)
                for (std::size_t k = 1; k < m; ++k) {
                    const long row = static_cast<long>((i * M + j) * m + k);
                    // c_k -= alpha*lambda*a_k shifts into rows via c_{k+1}-c_{k-1}
                    if (k + 1 < m) shift(row, row + 1) -= L_i;
                    shift(row, row - 1) += L_i;
                }
        }
    }
};

PeriodicPiecewise homological_step(const PolyField& field, const PeriodicPiecewise& orbit,
                                   const std::vector<PeriodicPiecewise>& tower, double lambda,
                                   std::size_t alpha, const HomologicalOperator& op,
                                   const CauchyCache& cache) {
    const Mesh& mesh = orbit.mesh;
    const std::size_t M = field.dim, D = mesh.domains(), m = orbit.coeffs_per_piece();
    Eigen::MatrixXd A = op.base + static_cast<double>(alpha) * lambda * op.shift;

    Eigen::VectorXd F = Eigen::VectorXd::Zero(static_cast<long>(D * M * m));
    TowerView tview;
    for (const auto& g : tower) tview.push_back(&g);
    for (std::size_t i = 0; i < D; ++i) {
        const double L_i = mesh.domain_half_width(i);
        std::vector<ChebSeries> c(M, ChebSeries(m + 1));
        for (const auto& term : field.terms) {
            if (term.factors.size() < 2) continue; // linear terms carry no forcing
            ChebSeries prod = cache.forcing(tower, i, term.factors, alpha, m + 1);
            for (std::size_t k = 0; k < m + 1; ++k) c[term.target][k] += term.coeff * prod[k];
        }
        for (std::size_t j = 0; j < M; ++j)
            for (std::size_t k = 1; k < m; ++k)
                F[static_cast<long>((i * M + j) * m + k)] =
                    L_i * (c[j].at_or_zero(static_cast<long>(k) + 1) -
                           c[j].at_or_zero(static_cast<long>(k) - 1));
    }

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const double cond =
        condition_estimate_1norm(lu, A.cwiseAbs().colwise().sum().maxCoeff(), A.rows());
    if (!std::isfinite(cond) || cond > 1e14)
        throw std::runtime_error("homological order " + std::to_string(alpha) +
                                 ": near-resonant system, cond ~ " + std::to_string(cond));
    Eigen::VectorXd x = lu.solve(-F);

    PeriodicPiecewise out(mesh, M, m);
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < M; ++j)
            for (std::size_t k = 0; k < m; ++k)
                out.piece(i, j)[k] = x[static_cast<long>((i * M + j) * m + k)];
    return out;
}

} // namespace

PeriodicPiecewise solve_homological(const std::vector<PeriodicPiecewise>& tower,
                                    const PolyField& field, double lambda, std::size_t alpha) {
    if (alpha < 2) throw std::invalid_argument("solve_homological: alpha must be >= 2");
    if (tower.size() < alpha)
        throw std::invalid_argument("solve_homological: tower must hold orders 0..alpha-1");
    const PeriodicPiecewise& orbit = tower[0];
    HomologicalOperator op(field, orbit, orbit.coeffs_per_piece());
    CauchyCache cache(field, orbit.mesh.domains());
    std::vector<PeriodicPiecewise> partial;
    for (std::size_t b = 0; b < alpha; ++b) {
        partial.push_back(tower[b]);
        cache.advance(partial);
    }
    return homological_step(field, orbit, partial, lambda, alpha, op, cache);
}

ManifoldParam build_manifold(const PeriodicPiecewise& orbit, const FloquetBundle& bundle,
                             const PolyField& field, std::size_t N) {
    if (N < 1) throw std::invalid_argument("build_manifold: N must be >= 1");
    ManifoldParam man;
    man.field = field;
    man.mesh = orbit.mesh;
    man.m = orbit.coeffs_per_piece();
    man.lambda = bundle.lambda;
    man.K = bundle.K;
    man.k0 = bundle.k0;
    man.stable = bundle.lambda < 0.0;
    man.orders.reserve(N + 1);
    man.orders.push_back(orbit);
    man.orders.push_back(bundle.v);

    HomologicalOperator op(field, orbit, man.m);
    CauchyCache cache(field, orbit.mesh.domains());
    std::vector<PeriodicPiecewise> partial{orbit};
    cache.advance(partial);
    partial.push_back(bundle.v);
    cache.advance(partial);
    for (std::size_t alpha = 2; alpha <= N; ++alpha) {
        auto next = homological_step(field, orbit, partial, man.lambda, alpha, op, cache);
        partial.push_back(std::move(next));
        cache.advance(partial);
        man.orders.push_back(partial.back());
    }
    return man;
}

ConjugacyError conjugacy_error(const ManifoldParam& man, double t0, std::size_t n_samples,
                               FlowSettings settings, std::size_t truncate) {
    if (n_samples < 2) throw std::invalid_argument("conjugacy_error: need at least 2 samples");
    Flow flow(man.field, settings);
    const double tau = man.period();
    const double tdir = man.stable ? t0 : -t0; // unstable checked backward
    const double shrink = std::exp(man.lambda * tdir);
    ConjugacyError err;
    for (std::size_t s = 0; s < n_samples; ++s) {
        const double time = tau * static_cast<double>(s / 2) /
                            static_cast<double>((n_samples + 1) / 2);
        const double sigma = (s % 2 == 0) ? 1.0 : -1.0;
        auto x0 = man.eval_P_truncated(time, sigma, truncate);
        auto target = man.eval_P_truncated(time + tdir, shrink * sigma, truncate);
        auto flown = flow(x0, tdir);
        double d2 = 0.0;
        for (std::size_t j = 0; j < x0.size(); ++j)
            d2 += (flown[j] - target[j]) * (flown[j] - target[j]);
        const double d = std::sqrt(d2);
        err.max = std::max(err.max, d);
        err.mean += d / static_cast<double>(n_samples);
    }
    return err;
}

std::vector<std::vector<double>> decay_profile(const ManifoldParam& man) {
    std::vector<std::vector<double>> profile(man.orders.size());
    for (std::size_t a = 0; a < man.orders.size(); ++a) {
        profile[a].resize(man.mesh.domains());
        for (std::size_t i = 0; i < man.mesh.domains(); ++i)
            profile[a][i] = tail_norm(man.orders[a], i);
    }
    return profile;
}

double choose_scale(const PeriodicPiecewise& orbit, const PolyField& field, bool stable,
                    std::size_t k0, std::size_t N, double target, ManifoldParam& out,
                    NewtonSettings newton, std::size_t max_probes) {
    const double lo_ok = target * 1e-3, hi_ok = target * 1e3;
    double K = 1.0;
    double logK_lo = std::log10(K) - 12.0, logK_hi = std::log10(K) + 12.0;
    bool have_lo = false, have_hi = false;
    double last_norm = 0.0;
    for (std::size_t probe = 0; probe < max_probes; ++probe) {
        auto bundle = solve_bundle(orbit, field, stable, K, k0, newton);
        out = build_manifold(orbit, bundle, field, N);
        last_norm = tail_norm_max(out.orders.back());
        if (last_norm >= lo_ok && last_norm <= hi_ok) return K;
        if (last_norm < lo_ok) {
            logK_lo = std::log10(K);
            have_lo = true;
        } else {
            logK_hi = std::log10(K);
            have_hi = true;
        }
        if (have_lo && have_hi) {
            K = std::pow(10.0, 0.5 * (logK_lo + logK_hi));
        } else if (probe == 0 && last_norm > 0.0) {
            // eigenfunction scaling covariance: |a_N|(K') = |a_N|(K)(K'/K)^{N/2}
            const double guess =
                K * std::pow(target / last_norm, 2.0 / static_cast<double>(N));
            K = std::clamp(guess, std::pow(10.0, logK_lo), std::pow(10.0, logK_hi));
        } else {
            K = std::pow(10.0, have_lo ? logK_lo + 2.0 : logK_hi - 2.0);
        }
        if (have_lo && have_hi && logK_hi - logK_lo < 1e-8)
            break;
    }
    throw std::runtime_error("choose_scale: no bracket after probing (last tail norm " +
                             std::to_string(last_norm) + "); inspect the decay profile");
}

} // namespace cheborbit

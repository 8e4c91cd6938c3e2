#include "cheborbit/bundle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace cheborbit {

std::vector<std::complex<double>> monodromy_multipliers(const PeriodicPiecewise& orbit,
                                                        const PolyField& field,
                                                        FlowSettings settings) {
    const std::size_t M = field.dim;
    Flow flow(field, settings);
    auto x0 = orbit.eval_state(0.0);
    auto w = flow.integrate_variational(x0, orbit.mesh.period());
    Eigen::MatrixXd Mo(M, M);
    for (std::size_t r = 0; r < M; ++r)
        for (std::size_t c = 0; c < M; ++c) Mo(static_cast<long>(r), static_cast<long>(c)) = w[M + r * M + c];
    Eigen::EigenSolver<Eigen::MatrixXd> es(Mo);
    std::vector<std::complex<double>> out(M);
    for (std::size_t q = 0; q < M; ++q) out[q] = es.eigenvalues()[static_cast<long>(q)];
    return out;
}

BundleSeed seed_bundle(const PeriodicPiecewise& orbit, const PolyField& field, bool stable,
                       std::size_t m, FlowSettings settings) {
    const std::size_t M = field.dim;
    const double tau = orbit.mesh.period();
    Flow flow(field, settings);
    auto x0 = orbit.eval_state(0.0);
    auto w = flow.integrate_variational(x0, tau);
    Eigen::MatrixXd Mo(M, M);
    for (std::size_t r = 0; r < M; ++r)
        for (std::size_t c = 0; c < M; ++c)
            Mo(static_cast<long>(r), static_cast<long>(c)) = w[M + r * M + c];
    Eigen::EigenSolver<Eigen::MatrixXd> es(Mo);

    long pick = -1;
    double best = 0.0;
    for (long q = 0; q < static_cast<long>(M); ++q) {
        const auto mult = es.eigenvalues()[q];
        const double mag = std::abs(mult);
        if (stable ? (mag < 0.9) : (mag > 1.1)) {
            const double strength = std::abs(std::log(mag));
            if (pick < 0 || strength > best) {
                pick = q;
                best = strength;
            }
        }
    }
    if (pick < 0)
        throw std::runtime_error("seed_bundle: no multiplier on the requested side of the unit circle");
    const auto mult = es.eigenvalues()[pick];
    if (std::abs(mult.imag()) > 1e-8 * std::abs(mult))
        throw std::runtime_error("seed_bundle: requested multiplier is complex (out of scope)");
    if (mult.real() < 0.0)
        throw std::runtime_error("seed_bundle: negative multiplier, bundle not orientable (out of scope)");
    const double lambda = std::log(mult.real()) / tau;

    Eigen::VectorXcd wc = es.eigenvectors().col(pick);
    // real eigenvector (real eigenvalue): rotate out any residual phase
    long imax = 0;
    wc.cwiseAbs().maxCoeff(&imax);
    wc /= wc[imax] / std::abs(wc[imax]);
    Eigen::VectorXd v0 = wc.real();
    v0.normalize();

    // propagate v(t) = e^{-lambda t} Phi_t v0 through the mesh sample times
    const Mesh& mesh = orbit.mesh;
    PeriodicPiecewise vgrid(mesh, M, m);
    auto local_nodes = cgl_nodes(m - 1);
    std::vector<double> state = x0;
    Eigen::MatrixXd Phi = Eigen::MatrixXd::Identity(M, M);
    double t_now = 0.0;
    for (std::size_t i = 0; i < mesh.domains(); ++i) {
        const double start = mesh.domain_start(i);
        const double Li = mesh.domain_half_width(i);
        std::vector<Eigen::VectorXd> samples(m);
        for (std::size_t qq = 0; qq < m; ++qq) {
            const std::size_t q = m - 1 - qq;
            const double t_target = start + (local_nodes[q] + 1.0) * Li;
            // Phi(t_target) = Phi_inc * Phi(t_now)
            auto winc = flow.integrate_variational(state, t_target - t_now);
            Eigen::MatrixXd Phi_inc(M, M);
            for (std::size_t r = 0; r < M; ++r) {
                state[r] = winc[r];
                for (std::size_t c = 0; c < M; ++c)
                    Phi_inc(static_cast<long>(r), static_cast<long>(c)) = winc[M + r * M + c];
            }
            Phi = Phi_inc * Phi;
            t_now = t_target;
            samples[q] = std::exp(-lambda * t_now) * (Phi * v0);
        }
        for (std::size_t j = 0; j < M; ++j) {
            std::vector<double> vals(m);
            for (std::size_t q = 0; q < m; ++q) vals[q] = samples[q][static_cast<long>(j)];
            vgrid.piece(i, j) = interpolate_cgl(vals);
        }
    }
    return {std::move(vgrid), lambda};
}

FloquetBundle solve_bundle(const PeriodicPiecewise& orbit, const PolyField& field, bool stable,
                           double K, std::size_t k0, NewtonSettings newton,
                           const BundleSeed* seed) {
    if (!(K > 0.0)) throw std::invalid_argument("solve_bundle: K must be positive");
    const std::size_t m = orbit.coeffs_per_piece();
    BundleSeed local;
    if (!seed) {
        local = seed_bundle(orbit, field, stable, m);
        seed = &local;
    }

    SystemSpec spec;
    spec.alpha = 1;
    spec.boundary = BoundaryMode::periodic;
    spec.extra = ExtraUnknown::exponent;
    spec.phase.kind = PhaseSpec::Kind::normalization;
    spec.phase.K = K;
    spec.phase.k0 = k0;

    ResidualSystem sys(field, orbit.mesh, m, spec);
    std::vector<PeriodicPiecewise> lower{orbit};
    sys.set_lower_orders(&lower);

    // rescale the seed so the normalization row starts near zero
    PeriodicPiecewise vseed = seed->v;
    double ssum = 0.0;
    for (std::size_t j = 0; j < vseed.components; ++j)
        for (std::size_t k = 0; k <= k0 && k < m; ++k)
            ssum += vseed.piece(0, j)[k] * vseed.piece(0, j)[k];
    const double scale = std::sqrt(K / std::max(ssum, 1e-300));
    for (auto& piece : vseed.pieces)
        for (auto& c : piece.coeffs) c *= scale;

    Eigen::VectorXd A0 = sys.pack(vseed, seed->lambda);
    auto [A, report] = newton_solve([&sys](const Eigen::VectorXd& A_) { return sys.assemble(A_); },
                                    [&sys](const Eigen::VectorXd& A_) { return sys.jacobian(A_); },
                                    A0, newton);
    FloquetBundle out;
    double lambda = 0.0;
    out.v = sys.unpack(A, &lambda);
    out.lambda = lambda;
    out.K = K;
    out.k0 = k0;
    out.stable = lambda < 0.0;
    out.report = report;
    if (std::abs(lambda) < 1e-8)
        throw std::runtime_error("solve_bundle: |lambda| < 1e-8, degenerate hyperbolicity");
    if (out.stable != stable)
        throw std::runtime_error("solve_bundle: converged to the opposite stability side");
    return out;
}

} // namespace cheborbit

#include "cheborbit/residual.hpp"

#include <cmath>
#include <stdexcept>

namespace cheborbit {

namespace {

// Product of tower slices folded factor by factor at full support.
// max_part caps the Taylor order any single factor may contribute.
std::vector<ChebSeries> fold_product(const TowerView& tower, std::size_t domain,
                                     std::span<const std::size_t> components, std::size_t alpha,
                                     long max_part) {
    std::vector<ChebSeries> running(alpha + 1);
    running[0] = ChebSeries(std::vector<double>{1.0});
    for (std::size_t b = 1; b <= alpha; ++b) running[b] = ChebSeries(std::vector<double>{0.0});
    for (std::size_t j : components) {
        std::vector<ChebSeries> next(alpha + 1);
        for (std::size_t b = 0; b <= alpha; ++b) {
            std::size_t out_support = 1;
            for (std::size_t b2 = 0; b2 <= b; ++b2) {
                if (static_cast<long>(b2) > max_part) continue;
                const ChebSeries& lhs = running[b - b2];
                const ChebSeries& rhs = tower[b2]->piece(domain, j);
                if (lhs.size() == 0 || rhs.size() == 0) continue;
                out_support = std::max(out_support, lhs.size() + rhs.size() - 1);
            }
            ChebSeries acc(out_support);
            for (std::size_t b2 = 0; b2 <= b; ++b2) {
                if (static_cast<long>(b2) > max_part) continue;
                const ChebSeries& lhs = running[b - b2];
                const ChebSeries& rhs = tower[b2]->piece(domain, j);
                if (lhs.size() == 0 || rhs.size() == 0) continue;
                ChebSeries part = convolve(lhs, rhs, lhs.size() + rhs.size() - 1);
                for (std::size_t k = 0; k < part.size(); ++k) acc[k] += part[k];
            }
            next[b] = std::move(acc);
        }
        running = std::move(next);
    }
    return running;
}

ChebSeries truncated(const ChebSeries& s, std::size_t out_len) {
    ChebSeries out(out_len);
    for (std::size_t k = 0; k < out_len && k < s.size(); ++k) out[k] = s[k];
    return out;
}

} // namespace

ChebSeries cauchy_conv(const TowerView& tower, std::size_t domain,
                       std::span<const std::size_t> components, std::size_t alpha,
                       std::size_t out_len) {
    if (components.empty())
        throw std::invalid_argument("cauchy_conv: empty hyperscript list");
    auto running = fold_product(tower, domain, components, alpha, static_cast<long>(alpha));
    return truncated(running[alpha], out_len);
}

ChebSeries cauchy_conv_forcing(const TowerView& tower, std::size_t domain,
                               std::span<const std::size_t> components, std::size_t alpha,
                               std::size_t out_len) {
    if (components.empty())
        throw std::invalid_argument("cauchy_conv_forcing: empty hyperscript list");
    auto running =
        fold_product(tower, domain, components, alpha, static_cast<long>(alpha) - 1);
    return truncated(running[alpha], out_len);
}

double residual_row(std::size_t k, double a_k, const ChebSeries& c, double L_i) {
    if (k < 1) throw std::invalid_argument("residual_row: k must be >= 1");
    return 2.0 * static_cast<double>(k) * a_k +
           L_i * (c.at_or_zero(static_cast<long>(k) + 1) - c.at_or_zero(static_cast<long>(k) - 1));
}

double chain_row(const PeriodicPiecewise& grid, std::size_t i, std::size_t j) {
    if (i < 1) throw std::invalid_argument("chain_row: needs subdomain index >= 1");
    return endpoint_sum(grid.piece(i - 1, j), Side::right) -
           endpoint_sum(grid.piece(i, j), Side::left);
}

double periodicity_row(const PeriodicPiecewise& grid, std::size_t j) {
    return endpoint_sum(grid.piece(grid.mesh.domains() - 1, j), Side::right) -
           endpoint_sum(grid.piece(0, j), Side::left);
}

double poincare_row(const PeriodicPiecewise& grid, std::span<const double> p0,
                    const PolyField& field) {
    const auto v0 = field.eval(p0);
    double row = 0.0;
    for (std::size_t j = 0; j < grid.components; ++j)
        row += v0[j] * (p0[j] - endpoint_sum(grid.piece(0, j), Side::left));
    return row;
}

double normalization_row(const PeriodicPiecewise& grid, double K, std::size_t k0) {
    double sum = -K;
    for (std::size_t j = 0; j < grid.components; ++j) {
        const auto& a = grid.piece(0, j);
        for (std::size_t k = 0; k <= k0 && k < a.size(); ++k) sum += a[k] * a[k];
    }
    return sum;
}

ResidualSystem::ResidualSystem(const PolyField& field, Mesh mesh, std::size_t coeffs_per_piece,
                               SystemSpec spec)
    : field_(field), mesh_(std::move(mesh)), M_(field.dim), m_(coeffs_per_piece),
      D_(mesh_.domains()), spec_(std::move(spec)) {
    if (m_ < 2) throw std::invalid_argument("ResidualSystem: need at least 2 coefficients");
    const bool has_extra = spec_.extra != ExtraUnknown::none;
    const bool has_phase = spec_.phase.kind != PhaseSpec::Kind::none;
    if (has_extra != has_phase)
        throw std::invalid_argument(
            "ResidualSystem: row/unknown ledger mismatch (phase rows must balance extra unknowns)");
    if (spec_.boundary != BoundaryMode::periodic && spec_.alpha != 0)
        throw std::invalid_argument("ResidualSystem: replaced boundary rows apply to alpha=0 only");
    if (spec_.boundary == BoundaryMode::crtbp_symmetric && M_ != 6)
        throw std::invalid_argument("ResidualSystem: crtbp_symmetric needs a 6-component field");
    if (spec_.boundary == BoundaryMode::crfbp_autodiff && M_ != 9)
        throw std::invalid_argument("ResidualSystem: crfbp_autodiff needs a 9-component field");
}

double ResidualSystem::extra_of(const Eigen::VectorXd& A) const {
    return spec_.extra == ExtraUnknown::none ? 0.0 : A[static_cast<long>(grid_size())];
}

double ResidualSystem::half_period(const Eigen::VectorXd& A) const {
    return spec_.extra == ExtraUnknown::half_period ? extra_of(A) : mesh_.half_period;
}

Eigen::VectorXd ResidualSystem::pack(const PeriodicPiecewise& grid, double extra) const {
    Eigen::VectorXd A(static_cast<long>(unknown_count()));
    for (std::size_t i = 0; i < D_; ++i)
        for (std::size_t j = 0; j < M_; ++j)
            for (std::size_t k = 0; k < m_; ++k)
                A[static_cast<long>((i * M_ + j) * m_ + k)] = grid.piece(i, j)[k];
    if (spec_.extra != ExtraUnknown::none) A[static_cast<long>(grid_size())] = extra;
    return A;
}

PeriodicPiecewise ResidualSystem::unpack(const Eigen::VectorXd& A, double* extra) const {
    Mesh mesh = mesh_;
    if (spec_.extra == ExtraUnknown::half_period) mesh = mesh_.with_half_period(extra_of(A));
    PeriodicPiecewise grid(mesh, M_, m_);
    for (std::size_t i = 0; i < D_; ++i)
        for (std::size_t j = 0; j < M_; ++j)
            for (std::size_t k = 0; k < m_; ++k)
                grid.piece(i, j)[k] = A[static_cast<long>((i * M_ + j) * m_ + k)];
    if (extra) *extra = extra_of(A);
    return grid;
}

TowerView ResidualSystem::tower(const PeriodicPiecewise& current) const {
    TowerView tw;
    if (spec_.alpha >= 1) {
        if (!lower_ || lower_->size() < spec_.alpha)
            throw std::logic_error("ResidualSystem: lower Taylor orders not set");
        for (std::size_t b = 0; b < spec_.alpha; ++b) tw.push_back(&(*lower_)[b]);
    }
    tw.push_back(&current);
    return tw;
}

std::vector<ChebSeries> ResidualSystem::rhs_coeffs(const TowerView& tw, std::size_t i,
                                                   double extra) const {
    const double lambda = spec_.extra == ExtraUnknown::exponent ? extra : spec_.lambda;
    const double alpha_lambda = static_cast<double>(spec_.alpha) * lambda;
    std::vector<ChebSeries> c(M_, ChebSeries(m_ + 1));
    for (const auto& term : field_.terms) {
        ChebSeries prod = term.factors.empty()
                              ? (spec_.alpha == 0 ? ChebSeries(std::vector<double>{1.0})
                                                  : ChebSeries(std::vector<double>{0.0}))
                              : cauchy_conv(tw, i, term.factors, spec_.alpha, m_ + 1);
        for (std::size_t k = 0; k < std::min<std::size_t>(m_ + 1, prod.size()); ++k)
            c[term.target][k] += term.coeff * prod[k];
    }
    const PeriodicPiecewise& current = *tw.back();
    if (alpha_lambda != 0.0)
        for (std::size_t j = 0; j < M_; ++j)
            for (std::size_t k = 0; k < m_; ++k)
                c[j][k] -= alpha_lambda * current.piece(i, j)[k];
    if (spec_.extra == ExtraUnknown::multiplier)
        for (std::size_t k = 0; k < m_; ++k) c[1][k] += extra * current.piece(i, 1)[k];
    return c;
}

void ResidualSystem::boundary_rows(const PeriodicPiecewise& grid, Eigen::VectorXd& F) const {
    auto slot = [this](std::size_t i, std::size_t j) {
        return static_cast<long>((i * M_ + j) * m_);
    };
    for (std::size_t i = 1; i < D_; ++i)
        for (std::size_t j = 0; j < M_; ++j) F[slot(i, j)] = chain_row(grid, i, j);

    auto left = [&](std::size_t j) { return endpoint_sum(grid.piece(0, j), Side::left); };
    auto right_last = [&](std::size_t j) {
        return endpoint_sum(grid.piece(D_ - 1, j), Side::right);
    };
    switch (spec_.boundary) {
        case BoundaryMode::periodic:
            for (std::size_t j = 0; j < M_; ++j) F[slot(0, j)] = periodicity_row(grid, j);
            break;
        case BoundaryMode::crtbp_symmetric: {
            const double mu = field_.params.at("mu");
            F[slot(0, 0)] = left(1);
            F[slot(0, 1)] = left(2);
            F[slot(0, 2)] = right_last(1);
            F[slot(0, 3)] = right_last(2);
            const double x0 = left(0), y0 = left(2);
            F[slot(0, 4)] = left(4) * left(4) * ((x0 + mu) * (x0 + mu) + y0 * y0) - 1.0;
            F[slot(0, 5)] =
                left(5) * left(5) * ((x0 - 1.0 + mu) * (x0 - 1.0 + mu) + y0 * y0) - 1.0;
            break;
        }
        case BoundaryMode::crfbp_autodiff: {
            for (std::size_t j = 0; j < 6; ++j) F[slot(0, j)] = periodicity_row(grid, j);
            const double x0 = left(0), y0 = left(2), z0 = left(4);
            for (std::size_t b = 0; b < 3; ++b) {
                const auto& p = spec_.primaries[b];
                const double w = left(6 + b);
                const double r2 = (x0 - p[0]) * (x0 - p[0]) + (y0 - p[1]) * (y0 - p[1]) +
                                  (z0 - p[2]) * (z0 - p[2]);
                F[slot(0, 6 + b)] = w * w * r2 - 1.0;
            }
            break;
        }
    }
}

double ResidualSystem::phase_row(const PeriodicPiecewise& grid) const {
    switch (spec_.phase.kind) {
        case PhaseSpec::Kind::none:
            return 0.0;
        case PhaseSpec::Kind::poincare:
            return poincare_row(grid, spec_.phase.poincare_point, field_);
        case PhaseSpec::Kind::normalization:
            return normalization_row(grid, spec_.phase.K, spec_.phase.k0);
        case PhaseSpec::Kind::energy: {
            const double mu = field_.params.at("mu");
            std::array<double, 6> s{};
            for (std::size_t j = 0; j < 6; ++j)
                s[j] = endpoint_sum(grid.piece(0, j), Side::right);
            const double E = s[0] * s[0] + s[2] * s[2] + 2.0 * (1.0 - mu) * s[4] +
                             2.0 * mu * s[5] - s[1] * s[1] - s[3] * s[3];
            return E - spec_.phase.energy;
        }
    }
    return 0.0;
}

Eigen::VectorXd ResidualSystem::assemble(const Eigen::VectorXd& A) const {
    if (static_cast<std::size_t>(A.size()) != unknown_count())
        throw std::invalid_argument("ResidualSystem assemble: dimension mismatch");
    const double extra = extra_of(A);
    PeriodicPiecewise grid = unpack(A);
    const double L = half_period(A);
    TowerView tw = tower(grid);

    Eigen::VectorXd F(static_cast<long>(unknown_count()));
    boundary_rows(grid, F);
    for (std::size_t i = 0; i < D_; ++i) {
        const auto c = rhs_coeffs(tw, i, extra);
        const double L_i = mesh_.proportions[i] * L;
        for (std::size_t j = 0; j < M_; ++j)
            for (std::size_t k = 1; k < m_; ++k)
                F[static_cast<long>((i * M_ + j) * m_ + k)] =
                    residual_row(k, grid.piece(i, j)[k], c[j], L_i);
    }
    if (spec_.phase.kind != PhaseSpec::Kind::none)
        F[static_cast<long>(grid_size())] = phase_row(grid);
    return F;
}

Eigen::MatrixXd ResidualSystem::jacobian(const Eigen::VectorXd& A) const {
    if (static_cast<std::size_t>(A.size()) != unknown_count())
        throw std::invalid_argument("ResidualSystem jacobian: dimension mismatch");
    const double extra = extra_of(A);
    PeriodicPiecewise grid = unpack(A);
    const double L = half_period(A);
    TowerView tw = tower(grid);
    const double lambda = spec_.extra == ExtraUnknown::exponent ? extra : spec_.lambda;
    const double alpha_lambda = static_cast<double>(spec_.alpha) * lambda;

    const long n = static_cast<long>(unknown_count());
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    auto col = [this](std::size_t i, std::size_t j, std::size_t k) {
        return static_cast<long>((i * M_ + j) * m_ + k);
    };

    // ---- k >= 1 integrated rows ----
    // For each domain, the derivative of the c-series wrt each unknown block
    // is built from the convolution pattern of the complementary factors.
    const PeriodicPiecewise* order0 =
        spec_.alpha == 0 ? &grid : &(*lower_)[0];
    for (std::size_t i = 0; i < D_; ++i) {
        const double L_i = mesh_.proportions[i] * L;
        // dc[j][j'] = full-support pattern series b with dc_k/da^{(j')}_{k'} =
        //   b_|k-k'| + b_{k+k'} (k' >= 1), b_|k| (k' = 0)
        std::vector<std::vector<ChebSeries>> dc(M_, std::vector<ChebSeries>(M_));
        for (const auto& term : field_.terms) {
            for (std::size_t pos = 0; pos < term.factors.size(); ++pos) {
                // product of the remaining factors at order 0
                ChebSeries b(std::vector<double>{term.coeff});
                for (std::size_t q = 0; q < term.factors.size(); ++q) {
                    if (q == pos) continue;
                    const ChebSeries& f = order0->piece(i, term.factors[q]);
                    b = convolve(b, f, b.size() + f.size() - 1);
                }
                auto& pattern = dc[term.target][term.factors[pos]];
                if (pattern.size() < b.size()) pattern.coeffs.resize(b.size(), 0.0);
                for (std::size_t k = 0; k < b.size(); ++k) pattern[k] += b[k];
            }
        }
        // assemble the block rows
        for (std::size_t j = 0; j < M_; ++j) {
            for (std::size_t k = 1; k < m_; ++k) {
                const long row = col(i, j, k);
                J(row, col(i, j, k)) += 2.0 * static_cast<double>(k);
                for (std::size_t jp = 0; jp < M_; ++jp) {
                    const ChebSeries& b = dc[j][jp];
                    if (b.size() == 0 && jp != j) continue;
                    for (std::size_t kp = 0; kp < m_; ++kp) {
                        double dplus, dminus; // dc_{k+1}/da_{kp}, dc_{k-1}/da_{kp}
                        const long kp1 = static_cast<long>(k) + 1, km1 = static_cast<long>(k) - 1;
                        if (kp == 0) {
                            dplus = b.at_or_zero(kp1);
                            dminus = b.at_or_zero(km1);
                        } else {
                            dplus = b.at_or_zero(kp1 - static_cast<long>(kp)) +
                                    b.at_or_zero(kp1 + static_cast<long>(kp));
                            dminus = b.at_or_zero(km1 - static_cast<long>(kp)) +
                                     b.at_or_zero(km1 + static_cast<long>(kp));
                        }
                        double val = L_i * (dplus - dminus);
                        if (jp == j && alpha_lambda != 0.0) {
                            // c_k -= alpha*lambda*a_k contributes a shifted diagonal
                            if (static_cast<long>(kp) == kp1) val -= L_i * alpha_lambda;
                            if (static_cast<long>(kp) == km1) val += L_i * alpha_lambda;
                        }
                        if (spec_.extra == ExtraUnknown::multiplier && j == 1 && jp == 1) {
                            if (static_cast<long>(kp) == kp1) val += L_i * extra;
                            if (static_cast<long>(kp) == km1) val -= L_i * extra;
                        }
                        if (val != 0.0) J(row, col(i, jp, kp)) += val;
                    }
                }
            }
        }
        // extra-unknown column
        if (spec_.extra != ExtraUnknown::none) {
            const auto c = rhs_coeffs(tw, i, extra);
            const long ecol = static_cast<long>(grid_size());
            for (std::size_t j = 0; j < M_; ++j) {
                for (std::size_t k = 1; k < m_; ++k) {
                    const long row = col(i, j, k);
                    const long kp1 = static_cast<long>(k) + 1, km1 = static_cast<long>(k) - 1;
                    switch (spec_.extra) {
                        case ExtraUnknown::half_period:
                            J(row, ecol) += mesh_.proportions[i] *
                                            (c[j].at_or_zero(kp1) - c[j].at_or_zero(km1));
                            break;
                        case ExtraUnknown::exponent: {
                            const auto& a = grid.piece(i, j);
                            J(row, ecol) += -static_cast<double>(spec_.alpha) * L_i *
                                            (a.at_or_zero(kp1) - a.at_or_zero(km1));
                            break;
                        }
                        case ExtraUnknown::multiplier: {
                            if (j != 1) break;
                            const auto& a = grid.piece(i, 1);
                            J(row, ecol) += L_i * (a.at_or_zero(kp1) - a.at_or_zero(km1));
                            break;
                        }
                        case ExtraUnknown::none: break;
                    }
                }
            }
        }
    }

    // ---- boundary rows ----
    auto add_left_pattern = [&](long row, std::size_t i, std::size_t j, double w) {
        for (std::size_t k = 0; k < m_; ++k)
            J(row, col(i, j, k)) += w * (k == 0 ? 1.0 : 2.0 * (k % 2 == 0 ? 1.0 : -1.0));
    };
    auto add_right_pattern = [&](long row, std::size_t i, std::size_t j, double w) {
        for (std::size_t k = 0; k < m_; ++k) J(row, col(i, j, k)) += w * (k == 0 ? 1.0 : 2.0);
    };
    for (std::size_t i = 1; i < D_; ++i)
        for (std::size_t j = 0; j < M_; ++j) {
            const long row = col(i, j, 0);
            add_right_pattern(row, i - 1, j, 1.0);
            add_left_pattern(row, i, j, -1.0);
        }
    auto left_val = [&](std::size_t j) { return endpoint_sum(grid.piece(0, j), Side::left); };
    switch (spec_.boundary) {
        case BoundaryMode::periodic:
            for (std::size_t j = 0; j < M_; ++j) {
                const long row = col(0, j, 0);
                add_right_pattern(row, D_ - 1, j, 1.0);
                add_left_pattern(row, 0, j, -1.0);
            }
            break;
        case BoundaryMode::crtbp_symmetric: {
            const double mu = field_.params.at("mu");
            add_left_pattern(col(0, 0, 0), 0, 1, 1.0);
            add_left_pattern(col(0, 1, 0), 0, 2, 1.0);
            add_right_pattern(col(0, 2, 0), D_ - 1, 1, 1.0);
            add_right_pattern(col(0, 3, 0), D_ - 1, 2, 1.0);
            const double x0 = left_val(0), y0 = left_val(2);
            for (std::size_t b = 0; b < 2; ++b) {
                const long row = col(0, 4 + b, 0);
                const double w = left_val(4 + b);
                const double dx = x0 + mu - (b == 1 ? 1.0 : 0.0);
                const double r2 = dx * dx + y0 * y0;
                add_left_pattern(row, 0, 4 + b, 2.0 * w * r2);
                add_left_pattern(row, 0, 0, 2.0 * w * w * dx);
                add_left_pattern(row, 0, 2, 2.0 * w * w * y0);
            }
            break;
        }
        case BoundaryMode::crfbp_autodiff: {
            for (std::size_t j = 0; j < 6; ++j) {
                const long row = col(0, j, 0);
                add_right_pattern(row, D_ - 1, j, 1.0);
                add_left_pattern(row, 0, j, -1.0);
            }
            const double x0 = left_val(0), y0 = left_val(2), z0 = left_val(4);
            for (std::size_t b = 0; b < 3; ++b) {
                const long row = col(0, 6 + b, 0);
                const auto& p = spec_.primaries[b];
                const double w = left_val(6 + b);
                const double dx = x0 - p[0], dy = y0 - p[1], dz = z0 - p[2];
                const double r2 = dx * dx + dy * dy + dz * dz;
                add_left_pattern(row, 0, 6 + b, 2.0 * w * r2);
                add_left_pattern(row, 0, 0, 2.0 * w * w * dx);
                add_left_pattern(row, 0, 2, 2.0 * w * w * dy);
                add_left_pattern(row, 0, 4, 2.0 * w * w * dz);
            }
            break;
        }
    }

    // ---- phase row ----
    if (spec_.phase.kind != PhaseSpec::Kind::none) {
        const long row = static_cast<long>(grid_size());
        switch (spec_.phase.kind) {
            case PhaseSpec::Kind::poincare: {
                const auto v0 = field_.eval(spec_.phase.poincare_point);
                for (std::size_t j = 0; j < M_; ++j) add_left_pattern(row, 0, j, -v0[j]);
                break;
            }
            case PhaseSpec::Kind::normalization:
                for (std::size_t j = 0; j < M_; ++j)
                    for (std::size_t k = 0; k <= spec_.phase.k0 && k < m_; ++k)
                        J(row, col(0, j, k)) += 2.0 * grid.piece(0, j)[k];
                break;
            case PhaseSpec::Kind::energy: {
                const double mu = field_.params.at("mu");
                std::array<double, 6> s{};
                for (std::size_t j = 0; j < 6; ++j)
                    s[j] = endpoint_sum(grid.piece(0, j), Side::right);
                const std::array<double, 6> w{2.0 * s[0], -2.0 * s[1], 2.0 * s[2],
                                              -2.0 * s[3], 2.0 * (1.0 - mu), 2.0 * mu};
                for (std::size_t j = 0; j < 6; ++j) add_right_pattern(row, 0, j, w[j]);
                break;
            }
            case PhaseSpec::Kind::none: break;
        }
    }
    return J;
}

Eigen::MatrixXd ResidualSystem::jacobian_fd(const Eigen::VectorXd& A, double step) const {
    const long n = static_cast<long>(unknown_count());
    Eigen::MatrixXd J(n, n);
    Eigen::VectorXd ap = A, am = A;
    for (long c = 0; c < n; ++c) {
        const double h = step * std::max(1.0, std::abs(A[c]));
        ap[c] = A[c] + h;
        am[c] = A[c] - h;
        J.col(c) = (assemble(ap) - assemble(am)) / (2.0 * h);
        ap[c] = A[c];
        am[c] = A[c];
    }
    return J;
}

} // namespace cheborbit

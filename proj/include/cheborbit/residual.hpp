#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>

#include "cheborbit/mesh.hpp"
#include "cheborbit/polyfield.hpp"

namespace cheborbit {

/// View of the Taylor data entering a residual system: frozen lower orders
/// A_0..A_{alpha-1} plus the current unknown grid in the alpha slot.
using TowerView = std::vector<const PeriodicPiecewise*>;

/// Taylor coefficient alpha of the product of the listed components over the
/// tower, i.e. the Cauchy product of convolutions
///   C_{alpha,k}(j_1..j_n) = sum_{a_1+..+a_n=alpha} sum_{k_1+..+k_n=k} prod a^{(i,j_l)}_{a_l,k_l}
/// with k_l ranging over Z via |k_l| indexing.  Intermediate products keep
/// full support; only the returned series is truncated to out_len.
ChebSeries cauchy_conv(const TowerView& tower, std::size_t domain,
                       std::span<const std::size_t> components, std::size_t alpha,
                       std::size_t out_len);

/// Same sum restricted to splits with every part strictly below alpha: the
/// recursion forcing g_alpha.  (Parts equal to alpha are exactly the
/// Dg(gamma) A_alpha terms kept on the linear side.)
ChebSeries cauchy_conv_forcing(const TowerView& tower, std::size_t domain,
                               std::span<const std::size_t> components, std::size_t alpha,
                               std::size_t out_len);

/// Integrated-form residual row for k >= 1: 2k a_k + L_i (c_{k+1} - c_{k-1}).
double residual_row(std::size_t k, double a_k, const ChebSeries& c, double L_i);

/// k = 0 chaining row between subdomains i-1 and i of component j.
double chain_row(const PeriodicPiecewise& grid, std::size_t i, std::size_t j);

/// k = 0 periodicity row closing the seam for component j.
double periodicity_row(const PeriodicPiecewise& grid, std::size_t j);

/// Phase condition p0' . (p0 - gamma(0)) = 0 in coefficient form.
double poincare_row(const PeriodicPiecewise& grid, std::span<const double> p0,
                    const PolyField& field);

/// Eigenfunction normalization sum_j sum_{k<=k0} (a^{(1,j)}_k)^2 - K.
double normalization_row(const PeriodicPiecewise& grid, double K, std::size_t k0);

enum class BoundaryMode {
    periodic,        // chaining + periodicity closure
    crtbp_symmetric, // perpendicular x-axis crossings + reciprocal-distance seeds
    crfbp_autodiff,  // periodicity for 1..6, reciprocal-distance seeds for 7..9
};

enum class ExtraUnknown { none, half_period, exponent, multiplier };

struct PhaseSpec {
    enum class Kind { none, poincare, normalization, energy } kind = Kind::none;
    std::vector<double> poincare_point;
    double K = 1.0;
    std::size_t k0 = 10;
    double energy = 0.0;
};

struct SystemSpec {
    std::size_t alpha = 0;
    double lambda = 0.0; // Floquet exponent; ignored for alpha = 0
    BoundaryMode boundary = BoundaryMode::periodic;
    ExtraUnknown extra = ExtraUnknown::none;
    PhaseSpec phase;
    std::array<std::array<double, 3>, 3> primaries{}; // crfbp_autodiff rows
};

/// Square residual system F(A) = 0 for one Taylor order on a fixed mesh.
/// Unknown layout: a^{(i,j)}_k at ((i*M + j)*m + k), extra scalar last.
/// Residual layout mirrors it: slot k=0 carries the boundary row, slots
/// k=1..m-1 the integrated rows, phase row last.
class ResidualSystem {
  public:
    ResidualSystem(const PolyField& field, Mesh mesh, std::size_t coeffs_per_piece,
                   SystemSpec spec);

    /// Frozen lower Taylor orders (required when spec.alpha >= 1).
    void set_lower_orders(const std::vector<PeriodicPiecewise>* lower) { lower_ = lower; }

    std::size_t grid_size() const { return D_ * M_ * m_; }
    std::size_t unknown_count() const {
        return grid_size() + (spec_.extra == ExtraUnknown::none ? 0 : 1);
    }
    const Mesh& mesh() const { return mesh_; }
    const SystemSpec& spec() const { return spec_; }
    const PolyField& field() const { return field_; }
    std::size_t coeffs_per_piece() const { return m_; }

    Eigen::VectorXd pack(const PeriodicPiecewise& grid, double extra = 0.0) const;
    PeriodicPiecewise unpack(const Eigen::VectorXd& A, double* extra = nullptr) const;

    Eigen::VectorXd assemble(const Eigen::VectorXd& A) const;
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& A) const;
    /// Central finite-difference Jacobian, kept for validation.
    Eigen::MatrixXd jacobian_fd(const Eigen::VectorXd& A, double step = 1e-7) const;

  private:
    const PolyField& field_;
    Mesh mesh_;
    std::size_t M_, m_, D_;
    SystemSpec spec_;
    const std::vector<PeriodicPiecewise>* lower_ = nullptr;

    double half_period(const Eigen::VectorXd& A) const;
    double extra_of(const Eigen::VectorXd& A) const;
    TowerView tower(const PeriodicPiecewise& current) const;
    /// c-series (m+1 entries) of the rhs h on subdomain i, all components.
    std::vector<ChebSeries> rhs_coeffs(const TowerView& tw, std::size_t i, double extra) const;
    void boundary_rows(const PeriodicPiecewise& grid, Eigen::VectorXd& F) const;
    double phase_row(const PeriodicPiecewise& grid) const;
};

} // namespace cheborbit

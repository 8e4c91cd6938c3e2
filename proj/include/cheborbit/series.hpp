#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cheborbit {

/// One scalar function on [-1,1] stored as Chebyshev coefficients under the
/// a0 + 2*sum_{k>=1} a_k T_k convention.  The factor 2 is part of the data
/// contract: coefficients are stored raw and the factor is applied only
/// inside the evaluation/product kernels.
struct ChebSeries {
    std::vector<double> coeffs;

    ChebSeries() = default;
    explicit ChebSeries(std::vector<double> c) : coeffs(std::move(c)) {}
    explicit ChebSeries(std::size_t m) : coeffs(m, 0.0) {}

    std::size_t size() const { return coeffs.size(); }
    double operator[](std::size_t k) const { return coeffs[k]; }
    double& operator[](std::size_t k) { return coeffs[k]; }

    /// Coefficient with out-of-range indices read as zero.
    double at_or_zero(long k) const {
        if (k < 0) k = -k;
        return static_cast<std::size_t>(k) < coeffs.size() ? coeffs[static_cast<std::size_t>(k)] : 0.0;
    }
};

enum class Side { left, right };

/// Clenshaw evaluation of a0 + 2*sum a_k T_k(t).  Throws std::domain_error
/// for |t| > 1 (no extrapolation); values within 1e-9 of the endpoints are
/// clamped so that rescaled physical times at domain seams stay valid.
double eval(const ChebSeries& s, double t);

/// a0 + 2*sum a_k (+1)^k (right) or a0 + 2*sum a_k (-1)^k (left).
/// Equals eval at t = +/-1 but costs O(m) additions only.
double endpoint_sum(const ChebSeries& s, Side side);

/// Discrete convolution (a*b)_k = sum_{k1+k2=k, k1,k2 in Z} a_|k1| b_|k2|,
/// truncated to out_len coefficients.  eval(convolve(a,b),t) equals
/// eval(a,t)*eval(b,t) exactly when out_len >= len(a)+len(b)-1.
ChebSeries convolve(const ChebSeries& a, const ChebSeries& b, std::size_t out_len);

/// Same product computed by FFT with zero padding to the next power of two
/// >= 2*(len(a)+len(b)); agrees with convolve to ~1e-13 on O(1) data.
ChebSeries convolve_fft(const ChebSeries& a, const ChebSeries& b, std::size_t out_len);

/// Sum of |a_k|, the weight of one series in the tail-norm diagnostics.
double abs_sum(const ChebSeries& s);

/// Interpolate values sampled at the n+1 Chebyshev-Gauss-Lobatto points
/// t_q = cos(pi q / n), q = 0..n (t_0 = 1 first), returning n+1 coefficients.
ChebSeries interpolate_cgl(std::span<const double> values);

/// The CGL nodes cos(pi q / n), q = 0..n.
std::vector<double> cgl_nodes(std::size_t n);

} // namespace cheborbit

#include "cheborbit/series.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace cheborbit {

double eval(const ChebSeries& s, double t) {
    if (std::abs(t) > 1.0 + 1e-9)
        throw std::domain_error("ChebSeries eval: argument outside [-1,1]");
    t = std::clamp(t, -1.0, 1.0);
    const auto& a = s.coeffs;
    if (a.empty()) return 0.0;
    // Clenshaw on d_0 = a_0, d_k = 2 a_k.
    double b1 = 0.0, b2 = 0.0;
    for (std::size_t k = a.size() - 1; k >= 1; --k) {
        double b0 = 2.0 * a[k] + 2.0 * t * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    return a[0] + t * b1 - b2;
}

double endpoint_sum(const ChebSeries& s, Side side) {
    const auto& a = s.coeffs;
    if (a.empty()) return 0.0;
    double sum = a[0];
    double sign = 1.0;
    for (std::size_t k = 1; k < a.size(); ++k) {
        if (side == Side::left) sign = (k % 2 == 0) ? 1.0 : -1.0;
        sum += 2.0 * sign * a[k];
    }
    return sum;
}

ChebSeries convolve(const ChebSeries& a, const ChebSeries& b, std::size_t out_len) {
    if (out_len < 1) throw std::invalid_argument("convolve: out_len must be >= 1");
    const long ma = static_cast<long>(a.size());
    const long mb = static_cast<long>(b.size());
    ChebSeries out(out_len);
    if (ma == 0 || mb == 0) return out;
    for (long k = 0; k < static_cast<long>(out_len); ++k) {
        double sum = 0.0;
        for (long k1 = -(ma - 1); k1 <= ma - 1; ++k1) {
            const long k2 = k - k1;
            if (k2 <= -mb || k2 >= mb) continue;
            sum += a.coeffs[static_cast<std::size_t>(std::labs(k1))] *
                   b.coeffs[static_cast<std::size_t>(std::labs(k2))];
        }
        out[static_cast<std::size_t>(k)] = sum;
    }
    return out;
}

namespace {

void fft_inplace(std::vector<std::complex<double>>& x, bool inverse) {
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = x[i + k];
                std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& v : x) v /= static_cast<double>(n);
}

} // namespace

ChebSeries convolve_fft(const ChebSeries& a, const ChebSeries& b, std::size_t out_len) {
    if (out_len < 1) throw std::invalid_argument("convolve_fft: out_len must be >= 1");
    const std::size_t ma = a.size(), mb = b.size();
    ChebSeries out(out_len);
    if (ma == 0 || mb == 0) return out;
    std::size_t n = 1;
    while (n < 2 * (ma + mb)) n <<= 1;
    // Symmetric (Laurent) embedding: index j stands for wavenumber j mod n.
    std::vector<std::complex<double>> A(n), B(n);
    A[0] = a.coeffs[0];
    for (std::size_t k = 1; k < ma; ++k) {
        A[k] = a.coeffs[k];
        A[n - k] = a.coeffs[k];
    }
    B[0] = b.coeffs[0];
    for (std::size_t k = 1; k < mb; ++k) {
        B[k] = b.coeffs[k];
        B[n - k] = b.coeffs[k];
    }
    fft_inplace(A, false);
    fft_inplace(B, false);
    for (std::size_t j = 0; j < n; ++j) A[j] *= B[j];
    fft_inplace(A, true);
    for (std::size_t k = 0; k < out_len && k < n; ++k) out[k] = A[k].real();
    return out;
}

double abs_sum(const ChebSeries& s) {
    double sum = 0.0;
    for (double c : s.coeffs) sum += std::abs(c);
    return sum;
}

std::vector<double> cgl_nodes(std::size_t n) {
    std::vector<double> t(n + 1);
    for (std::size_t q = 0; q <= n; ++q) t[q] = std::cos(M_PI * static_cast<double>(q) / static_cast<double>(n));
    return t;
}

ChebSeries interpolate_cgl(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("interpolate_cgl: need at least 2 samples");
    const std::size_t n = values.size() - 1;
    ChebSeries out(n + 1);
    // Discrete orthogonality on the CGL grid with halved end weights.
    for (std::size_t k = 0; k <= n; ++k) {
        double sum = 0.5 * values[0];
        for (std::size_t q = 1; q < n; ++q)
            sum += values[q] * std::cos(M_PI * static_cast<double>(k * q) / static_cast<double>(n));
        sum += 0.5 * values[n] * ((k % 2 == 0) ? 1.0 : -1.0);
        double d = 2.0 * sum / static_cast<double>(n);
        if (k == 0 || k == n) d *= 0.5;
        // stored convention halves every k >= 1 coefficient
        out[k] = (k == 0) ? d : 0.5 * d;
    }
    return out;
}

} // namespace cheborbit

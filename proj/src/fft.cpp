#include "idcv/fft.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace idcv {
namespace detail {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Iterative radix-2 Cooley-Tukey, in place, n a power of two.
void fft_pow2(std::complex<double>* x, int n, bool inverse) {
    for (int i = 1, j = 0; i < n; ++i) {
        int bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (int len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / len;
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (int i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (int k = 0; k < len / 2; ++k) {
                std::complex<double> u = x[i + k];
                std::complex<double> v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

// Bluestein chirp-z for arbitrary n, expressed through a power-of-two
// circular convolution. Exponents are reduced mod 2n to keep the chirp
// arguments small.
void fft_bluestein(std::complex<double>* x, int n, bool inverse) {
    const int m = next_pow2(2 * n - 1);
    const double sign = inverse ? 1.0 : -1.0;

    std::vector<std::complex<double>> chirp(n);
    for (int k = 0; k < n; ++k) {
        long long kk = (static_cast<long long>(k) * k) % (2LL * n);
        double ang = sign * M_PI * static_cast<double>(kk) / n;
        chirp[k] = std::complex<double>(std::cos(ang), std::sin(ang));
    }

    std::vector<std::complex<double>> a(m, {0.0, 0.0}), b(m, {0.0, 0.0});
    for (int k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
    for (int k = 0; k < n; ++k) {
        b[k] = std::conj(chirp[k]);
        if (k > 0) b[m - k] = b[k];
    }

    fft_pow2(a.data(), m, false);
    fft_pow2(b.data(), m, false);
    for (int k = 0; k < m; ++k) a[k] *= b[k];
    fft_pow2(a.data(), m, true);
    const double scale = 1.0 / m;
    for (int k = 0; k < n; ++k) x[k] = a[k] * scale * chirp[k];
}

} // namespace

void fft_1d(std::complex<double>* x, int n, bool inverse) {
    if (n == 1) return;
    if (is_pow2(n))
        fft_pow2(x, n, inverse);
    else
        fft_bluestein(x, n, inverse);
}

void fft2_inplace(FrequencyField& f, bool inverse) {
    const int h = f.height, w = f.width;
    for (int i = 0; i < h; ++i) fft_1d(&f.at(i, 0), w, inverse);
    std::vector<std::complex<double>> col(h);
    for (int j = 0; j < w; ++j) {
        for (int i = 0; i < h; ++i) col[i] = f.at(i, j);
        fft_1d(col.data(), h, inverse);
        for (int i = 0; i < h; ++i) f.at(i, j) = col[i];
    }
}

} // namespace detail

FrequencyField fft2(const RealField& f) {
    if (f.height < 1 || f.width < 1)
        throw std::invalid_argument("fft2: empty field");
    if (!all_finite(f))
        throw std::invalid_argument("fft2: non-finite input");
    FrequencyField F(f.height, f.width);
    for (std::size_t i = 0; i < f.size(); ++i) F.data[i] = f.data[i];
    detail::fft2_inplace(F, false);
    return F;
}

RealField ifft2(const FrequencyField& F, double sym_tol) {
    const int h = F.height, w = F.width;
    if (h < 1 || w < 1)
        throw std::invalid_argument("ifft2: empty spectrum");
    if (!all_finite(F))
        throw std::invalid_argument("ifft2: non-finite input");

    double max_mag = 0.0;
    for (const auto& v : F.data) max_mag = std::max(max_mag, std::abs(v));
    const double bound = sym_tol * std::max(1.0, max_mag);
    for (int u = 0; u < h; ++u) {
        for (int v = 0; v < w; ++v) {
            const auto& a = F.at(u, v);
            const auto& b = F.at((h - u) % h, (w - v) % w);
            if (std::abs(a - std::conj(b)) > bound)
                throw std::invalid_argument(
                    "ifft2: spectrum is not conjugate symmetric; upstream math error");
        }
    }

    FrequencyField tmp = F;
    detail::fft2_inplace(tmp, true);
    RealField out(h, w);
    const double scale = 1.0 / (static_cast<double>(h) * w);
    for (std::size_t i = 0; i < tmp.size(); ++i) out.data[i] = tmp.data[i].real() * scale;
    return out;
}

RealField circular_convolve(const RealField& a, const RealField& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("circular_convolve: dimension mismatch");
    const int h = a.height, w = a.width;
    RealField out(h, w);
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < w; ++j) {
            double acc = 0.0;
            for (int p = 0; p < h; ++p) {
                const int ii = (i - p + h) % h;
                for (int q = 0; q < w; ++q) {
                    acc += a.at(p, q) * b.at(ii, (j - q + w) % w);
                }
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

} // namespace idcv

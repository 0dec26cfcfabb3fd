#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace ptav {

using cplx = std::complex<double>;

struct ComplexPlane {
    int width = 0;
    int height = 0;
    std::vector<cplx> data;

    ComplexPlane() = default;
    ComplexPlane(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h) {}

    cplx& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    cplx at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
};

namespace detail {

inline bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey; n must be a power of two.
inline void fft_pow2(cplx* a, size_t n, bool inverse) {
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * std::numbers::pi / double(len);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

// Precomputed chirp tables for Bluestein's algorithm at one length.
struct BluesteinPlan {
    size_t n = 0;
    size_t m = 0;                 // power of two >= 2n-1
    std::vector<cplx> chirp;      // exp(-i*pi*k^2/n), k in [0,n)
    std::vector<cplx> kernel_ft;  // FFT of the conjugate-chirp kernel, length m
};

inline const BluesteinPlan& bluestein_plan(size_t n) {
    thread_local std::unordered_map<size_t, BluesteinPlan> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    BluesteinPlan plan;
    plan.n = n;
    size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    plan.m = m;
    plan.chirp.resize(n);
    for (size_t k = 0; k < n; ++k) {
        // k^2 mod 2n keeps the angle argument small for large k
        const double ang = std::numbers::pi * double((k * k) % (2 * n)) / double(n);
        plan.chirp[k] = cplx(std::cos(ang), -std::sin(ang));
    }
    std::vector<cplx> kernel(m, cplx(0.0, 0.0));
    kernel[0] = std::conj(plan.chirp[0]);
    for (size_t k = 1; k < n; ++k) {
        kernel[k] = std::conj(plan.chirp[k]);
        kernel[m - k] = std::conj(plan.chirp[k]);
    }
    fft_pow2(kernel.data(), m, false);
    plan.kernel_ft = std::move(kernel);
    return cache.emplace(n, std::move(plan)).first->second;
}

// Forward DFT of arbitrary length via chirp-z transform.
inline void fft_bluestein(cplx* a, size_t n) {
    const BluesteinPlan& plan = bluestein_plan(n);
    std::vector<cplx> buf(plan.m, cplx(0.0, 0.0));
    for (size_t k = 0; k < n; ++k) buf[k] = a[k] * plan.chirp[k];
    fft_pow2(buf.data(), plan.m, false);
    for (size_t k = 0; k < plan.m; ++k) buf[k] *= plan.kernel_ft[k];
    fft_pow2(buf.data(), plan.m, true);
    const double inv_m = 1.0 / double(plan.m);
    for (size_t k = 0; k < n; ++k) a[k] = buf[k] * inv_m * plan.chirp[k];
}

inline void fft_1d(cplx* a, size_t n, bool inverse) {
    if (n == 1) return;
    if (inverse) {
        for (size_t k = 0; k < n; ++k) a[k] = std::conj(a[k]);
        fft_1d(a, n, false);
        for (size_t k = 0; k < n; ++k) a[k] = std::conj(a[k]);
        return;
    }
    if (is_pow2(n)) {
        fft_pow2(a, n, false);
    } else {
        fft_bluestein(a, n);
    }
}

// Row-column 2-D transform; inverse leaves scaling to the caller.
inline void fft_2d(ComplexPlane& p, bool inverse) {
    const int w = p.width, h = p.height;
    for (int y = 0; y < h; ++y) fft_1d(p.data.data() + static_cast<size_t>(y) * w, w, inverse);
    std::vector<cplx> col(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[y] = p.at(x, y);
        fft_1d(col.data(), h, inverse);
        for (int y = 0; y < h; ++y) p.at(x, y) = col[y];
    }
}

}  // namespace detail

// Forward 2-D DFT, unscaled. Any dimensions >= 1.
inline ComplexPlane fft2(const ComplexPlane& in) {
    if (in.width < 1 || in.height < 1) throw std::invalid_argument("empty plane");
    ComplexPlane out = in;
    detail::fft_2d(out, false);
    return out;
}

inline ComplexPlane fft2(const std::vector<double>& plane, int w, int h) {
    if (w < 1 || h < 1 || plane.size() != static_cast<size_t>(w) * h)
        throw std::invalid_argument("bad plane dimensions");
    ComplexPlane p(w, h);
    for (size_t i = 0; i < plane.size(); ++i) p.data[i] = cplx(plane[i], 0.0);
    detail::fft_2d(p, false);
    return p;
}

// Inverse 2-D DFT scaled by 1/(W*H); ifft2(fft2(x)) == x.
inline ComplexPlane ifft2(const ComplexPlane& in) {
    if (in.width < 1 || in.height < 1) throw std::invalid_argument("empty plane");
    ComplexPlane out = in;
    detail::fft_2d(out, true);
    const double scale = 1.0 / (double(in.width) * double(in.height));
    for (cplx& v : out.data) v *= scale;
    return out;
}

inline std::vector<double> ifft2_real(const ComplexPlane& in) {
    ComplexPlane out = ifft2(in);
    std::vector<double> r(out.data.size());
    for (size_t i = 0; i < r.size(); ++i) r[i] = out.data[i].real();
    return r;
}

}  // namespace ptav

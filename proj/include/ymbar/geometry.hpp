#pragma once

#include <array>
#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

#include "ymbar/core.hpp"

namespace ymbar {

// ---------------------------------------------------------------------------
// Flat Kaehler torus T^{2n} with a uniform periodic grid. Real coordinates are
// ordered (x_1, y_1, ..., x_n, y_n) with z_k = x_k + i y_k; axis 2(k-1) is
// x_k and axis 2k-1 is y_k. The metric is the standard flat one, so the
// Kaehler form is constant and the Ricci transformation vanishes identically.
// ---------------------------------------------------------------------------

struct TorusGeometry {
    int n = 0;            // complex dimension (1 or 2)
    int N = 0;            // base grid points per real axis
    double L = 0.0;       // period per real axis
    bool dealias = true;  // 3/2-rule padding for pointwise products
    double vol = 0.0;     // cached total volume = prod of periods
    std::array<int, 4> ext{};  // points per axis (allows single-axis refinement)

    int axes() const { return 2 * n; }

    std::size_t points() const {
        std::size_t p = 1;
        for (int a = 0; a < axes(); ++a) p *= static_cast<std::size_t>(ext[a]);
        return p;
    }

    /// Quadrature weight of one grid point (trapezoid == rectangle rule on
    /// the periodic grid; exact for trigonometric polynomials below Nyquist).
    double weight() const {
        double w = 1.0;
        for (int a = 0; a < axes(); ++a) w *= L / ext[a];
        return w;
    }

    /// Ricci transformation of the flat base: identically zero.
    /// Kept as an explicit hook so curvature-term formulas stay literal.
    std::array<cplx, 8> ricci(const std::array<cplx, 8>&) const { return {}; }

    bool same_grid(const TorusGeometry& o) const {
        return n == o.n && ext == o.ext && L == o.L;
    }
    bool operator==(const TorusGeometry& o) const {
        return same_grid(o) && dealias == o.dealias;
    }

    TorusGeometry with_dealias(bool on) const {
        TorusGeometry g = *this;
        g.dealias = on;
        return g;
    }
};

inline void validate_axis_count(int N) {
    if (N < 4 || N % 2 != 0)
        throw std::invalid_argument("grid size must be even and at least 4, got " +
                                    std::to_string(N));
}

inline TorusGeometry make_torus(int n, int N, double L = 2.0 * kPi,
                                bool dealias = true) {
    if (n != 1 && n != 2)
        throw std::invalid_argument("complex dimension must be 1 or 2, got " +
                                    std::to_string(n));
    validate_axis_count(N);
    if (!(L > 0.0)) throw std::invalid_argument("period must be positive");
    TorusGeometry g;
    g.n = n;
    g.N = N;
    g.L = L;
    g.dealias = dealias;
    g.ext.fill(0);
    for (int a = 0; a < 2 * n; ++a) g.ext[a] = N;
    g.vol = 1.0;
    for (int a = 0; a < 2 * n; ++a) g.vol *= L;
    return g;
}

/// Torus with independent per-axis grid sizes (used by the symbol probes,
/// which refine one real axis only). Base N is the smallest extent.
inline TorusGeometry make_torus_refined(int n, const std::array<int, 4>& ext,
                                        double L = 2.0 * kPi, bool dealias = true) {
    if (n != 1 && n != 2)
        throw std::invalid_argument("complex dimension must be 1 or 2");
    if (!(L > 0.0)) throw std::invalid_argument("period must be positive");
    TorusGeometry g;
    g.n = n;
    g.L = L;
    g.dealias = dealias;
    g.ext.fill(0);
    g.N = ext[0];
    for (int a = 0; a < 2 * n; ++a) {
        validate_axis_count(ext[a]);
        g.ext[a] = ext[a];
        if (ext[a] < g.N) g.N = ext[a];
    }
    g.vol = 1.0;
    for (int a = 0; a < 2 * n; ++a) g.vol *= L;
    return g;
}

// ---------------------------------------------------------------------------
// FFT engine (FFTW backend). Plans are cached globally behind a mutex; plan
// execution uses the new-array interface, so concurrent callers may share
// plans as long as they bring their own buffers.
// ---------------------------------------------------------------------------

namespace detail {

struct PlanKey {
    int len, stride, nblocks, sign;
    bool operator<(const PlanKey& o) const {
        return std::tie(len, stride, nblocks, sign) <
               std::tie(o.len, o.stride, o.nblocks, o.sign);
    }
};

/// One batched plan per (axis length, stride, block count): the guru
/// interface loops over the outer blocks and over the interleaved lines
/// inside each block, so a whole axis is one plan execution.
inline fftw_plan get_plan(const PlanKey& key) {
    static std::mutex mtx;
    static std::map<PlanKey, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    const std::size_t block = static_cast<std::size_t>(key.len) * key.stride;
    std::vector<cplx> scratch(block * static_cast<std::size_t>(key.nblocks));
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());

    fftw_iodim dims[1] = {{key.len, key.stride, key.stride}};
    fftw_iodim loops[2] = {{key.nblocks, static_cast<int>(block), static_cast<int>(block)},
                           {key.stride, 1, 1}};
    fftw_plan p = fftw_plan_guru_dft(1, dims, 2, loops, buf, buf, key.sign,
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
    cache.emplace(key, p);
    return p;
}

/// In-place 1-D FFT along `axis` of a row-major ndim array. sign -1 forward
/// (unnormalized), +1 inverse (normalized by 1/len).
inline void fft_axis(cplx* data, const int* ext, int ndim, int axis, int sign) {
    int stride = 1;
    for (int a = axis + 1; a < ndim; ++a) stride *= ext[a];
    const int len = ext[axis];
    int nblocks = 1;
    for (int a = 0; a < axis; ++a) nblocks *= ext[a];

    fftw_plan plan = get_plan({len, stride, nblocks, sign});
    auto* ptr = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, ptr, ptr);

    if (sign == +1) {
        const double s = 1.0 / len;
        const std::size_t total = static_cast<std::size_t>(len) * stride * nblocks;
        for (std::size_t i = 0; i < total; ++i) data[i] *= s;
    }
}

inline void fft_all(cplx* data, const int* ext, int ndim, int sign) {
    for (int a = 0; a < ndim; ++a) fft_axis(data, ext, ndim, a, sign);
}

/// Integer frequency of bin j on an axis of even length len; the Nyquist bin
/// is reported as -len/2.
inline int bin_freq(int j, int len) { return (j < len / 2) ? j : j - len; }

/// Derivative multiplier i*(2pi/L)*k with the Nyquist mode zeroed.
inline cplx deriv_multiplier(int j, int len, double L) {
    if (j == len / 2) return {0.0, 0.0};
    return kI * (2.0 * kPi / L) * static_cast<double>(bin_freq(j, len));
}

/// Apply a per-bin multiplier along one axis of a row-major spectrum.
template <class F>
inline void scale_axis_bins(cplx* data, const int* ext, int ndim, int axis, F mult) {
    int stride = 1;
    for (int a = axis + 1; a < ndim; ++a) stride *= ext[a];
    const int len = ext[axis];
    int nblocks = 1;
    for (int a = 0; a < axis; ++a) nblocks *= ext[a];
    for (int b = 0; b < nblocks; ++b) {
        cplx* base = data + static_cast<std::size_t>(b) * len * stride;
        for (int j = 0; j < len; ++j) {
            const cplx m = mult(j, len);
            cplx* line = base + static_cast<std::size_t>(j) * stride;
            for (int s = 0; s < stride; ++s) line[s] *= m;
        }
    }
}

/// Spectral derivative along a real axis, in place (exact on band-limited
/// samples; the trigonometric interpolant is differentiated).
inline void derivative_axis(cplx* data, const int* ext, int ndim, int axis, double L) {
    fft_axis(data, ext, ndim, axis, -1);
    scale_axis_bins(data, ext, ndim, axis,
                    [L](int j, int len) { return deriv_multiplier(j, len, L); });
    fft_axis(data, ext, ndim, axis, +1);
}

/// Zero all spectrum bins with |k| >= len/2 along one axis (in place, on an
/// already-transformed axis).
inline void zero_high_bins(cplx* data, const int* ext, int ndim, int axis, int keep) {
    scale_axis_bins(data, ext, ndim, axis, [keep](int j, int len) {
        const int k = bin_freq(j, len);
        return (k < -keep || k > keep) ? cplx{0.0, 0.0} : cplx{1.0, 0.0};
    });
}

/// Project grid values onto the retained band |k_axis| <= ext/2 - 1.
inline void band_filter(cplx* data, const int* ext, int ndim) {
    fft_all(data, ext, ndim, -1);
    for (int a = 0; a < ndim; ++a) zero_high_bins(data, ext, ndim, a, ext[a] / 2 - 1);
    fft_all(data, ext, ndim, +1);
}

/// Copy spectrum bins from src (extents se) to dst (extents de), keeping only
/// per-axis frequencies |k| <= min(se,de)/2 - 1 and rescaling so that grid
/// values are preserved. dst must be zero-initialized.
inline void remap_spectrum(const cplx* src, const int* se, cplx* dst, const int* de,
                           int ndim) {
    double scale = 1.0;
    for (int a = 0; a < ndim; ++a) scale *= static_cast<double>(de[a]) / se[a];

    std::array<int, 4> keep{};
    for (int a = 0; a < ndim; ++a) keep[a] = std::min(se[a], de[a]) / 2 - 1;

    std::array<int, 4> idx{};
    const std::size_t total = [&] {
        std::size_t t = 1;
        for (int a = 0; a < ndim; ++a) t *= static_cast<std::size_t>(se[a]);
        return t;
    }();
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (int a = ndim - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % se[a]);
            rem /= se[a];
        }
        bool keep_it = true;
        std::size_t dflat = 0;
        for (int a = 0; a < ndim && keep_it; ++a) {
            const int k = bin_freq(idx[a], se[a]);
            if (k < -keep[a] || k > keep[a]) { keep_it = false; break; }
            const int dj = (k >= 0) ? k : k + de[a];
            dflat = dflat * de[a] + static_cast<std::size_t>(dj);
        }
        if (keep_it) dst[dflat] = src[flat] * scale;
    }
}

}  // namespace detail

/// Grid extents of the 3/2-rule padded companion grid.
inline std::array<int, 4> padded_ext(const TorusGeometry& g) {
    std::array<int, 4> m{};
    for (int a = 0; a < g.axes(); ++a) m[a] = 3 * g.ext[a] / 2;
    return m;
}

}  // namespace ymbar

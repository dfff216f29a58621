#pragma once

#include <algorithm>
#include <cmath>

#include "ymbar/geometry.hpp"

namespace ymbar {

// ---------------------------------------------------------------------------
// MatrixField: an r x r complex matrix attached to every grid point. Storage
// is entry-major (one scalar grid plane per matrix entry) so spectral passes
// run on contiguous planes. The coefficient metric is <a,b> = Re Tr(a b*).
//
// Every field carries a conservative per-axis band bound (max |frequency| of
// its spectral content). Freshly allocated fields are zero (band 0); code
// writing grid values directly through plane()/at() must restate the band
// afterwards (mark_full_band() is always safe). Products consult the bounds
// to decide whether the dealiased product can be taken pointwise.
// ---------------------------------------------------------------------------

class MatrixField {
public:
    MatrixField() = default;

    MatrixField(const TorusGeometry& geom, int rank)
        : geom_(geom), rank_(rank),
          data_(static_cast<std::size_t>(rank) * rank * geom.points()) {
        if (rank < 1) throw std::invalid_argument("rank must be positive");
        band_.fill(0);
    }

    static MatrixField zero(const TorusGeometry& g, int r) { return MatrixField(g, r); }

    static MatrixField identity(const TorusGeometry& g, int r) {
        MatrixField f(g, r);
        for (int u = 0; u < r; ++u)
            std::fill(f.plane(u, u), f.plane(u, u) + g.points(), cplx{1.0, 0.0});
        return f;
    }

    /// Constant field with the given r x r matrix (row-major entries).
    static MatrixField constant(const TorusGeometry& g, int r,
                                const std::vector<cplx>& m) {
        if (m.size() != static_cast<std::size_t>(r) * r)
            throw std::invalid_argument("constant matrix has wrong shape");
        MatrixField f(g, r);
        for (int u = 0; u < r; ++u)
            for (int v = 0; v < r; ++v)
                std::fill(f.plane(u, v), f.plane(u, v) + g.points(), m[u * r + v]);
        return f;
    }

    const std::array<int, 4>& band() const { return band_; }
    void set_band(const std::array<int, 4>& b) { band_ = b; }
    /// Declare unknown spectral content (per-axis Nyquist bound).
    void mark_full_band() {
        for (int a = 0; a < geom_.axes(); ++a) band_[a] = geom_.ext[a] / 2;
    }

    const TorusGeometry& geom() const { return geom_; }
    int rank() const { return rank_; }
    std::size_t points() const { return geom_.points(); }
    bool skew_hermitian_flag() const { return skew_; }
    void set_skew_hermitian_flag(bool s) { skew_ = s; }

    cplx* plane(int u, int v) {
        return data_.data() + (static_cast<std::size_t>(u) * rank_ + v) * points();
    }
    const cplx* plane(int u, int v) const {
        return data_.data() + (static_cast<std::size_t>(u) * rank_ + v) * points();
    }

    cplx& at(std::size_t point, int u, int v) { return plane(u, v)[point]; }
    const cplx& at(std::size_t point, int u, int v) const { return plane(u, v)[point]; }

    MatrixField with_geometry(const TorusGeometry& g) const {
        if (!g.same_grid(geom_))
            throw std::invalid_argument("geometry rebind must preserve the grid");
        MatrixField f = *this;
        f.geom_ = g;
        return f;
    }

    // -- linear structure ---------------------------------------------------

    MatrixField& operator+=(const MatrixField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        skew_ = skew_ && o.skew_;
        for (int a = 0; a < 4; ++a) band_[a] = std::max(band_[a], o.band_[a]);
        return *this;
    }
    MatrixField& operator-=(const MatrixField& o) {
        check_compatible(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        skew_ = skew_ && o.skew_;
        for (int a = 0; a < 4; ++a) band_[a] = std::max(band_[a], o.band_[a]);
        return *this;
    }
    MatrixField& operator*=(cplx s) {
        for (auto& v : data_) v *= s;
        skew_ = skew_ && (s.imag() == 0.0);
        return *this;
    }

    friend MatrixField operator+(MatrixField a, const MatrixField& b) { return a += b; }
    friend MatrixField operator-(MatrixField a, const MatrixField& b) { return a -= b; }
    friend MatrixField operator*(cplx s, MatrixField a) { return a *= s; }
    friend MatrixField operator-(MatrixField a) { return a *= cplx{-1.0, 0.0}; }

    /// Pointwise conjugate transpose (spectrum reflects, band preserved).
    MatrixField adjoint() const {
        MatrixField out(geom_, rank_);
        for (int u = 0; u < rank_; ++u)
            for (int v = 0; v < rank_; ++v) {
                const cplx* src = plane(u, v);
                cplx* dst = out.plane(v, u);
                for (std::size_t i = 0; i < points(); ++i) dst[i] = std::conj(src[i]);
            }
        out.skew_ = skew_;
        out.band_ = band_;
        return out;
    }

    // -- spectral derivatives -----------------------------------------------

    /// d/dx along real axis `axis` of the trigonometric interpolant.
    MatrixField derivative(int axis) const {
        if (axis < 0 || axis >= geom_.axes())
            throw std::invalid_argument("axis out of range");
        MatrixField out = *this;
        for (int u = 0; u < rank_; ++u)
            for (int v = 0; v < rank_; ++v)
                detail::derivative_axis(out.plane(u, v), geom_.ext.data(),
                                        geom_.axes(), axis, geom_.L);
        out.skew_ = false;
        out.band_ = band_;
        return out;
    }

    /// Wirtinger derivative along complex axis k (1-based):
    /// bar=false: d/dz_k = (d/dx_k - i d/dy_k)/2, bar=true: d/dzbar_k.
    MatrixField wirtinger(int k, bool bar) const {
        if (k < 1 || k > geom_.n) throw std::invalid_argument("complex axis out of range");
        MatrixField dx = derivative(2 * (k - 1));
        MatrixField dy = derivative(2 * (k - 1) + 1);
        const cplx iy = bar ? kI : -kI;
        MatrixField out = dx;
        out += iy * dy;
        out *= cplx{0.5, 0.0};
        return out;
    }

    // -- norms, checks -------------------------------------------------------

    double max_abs() const {
        double m = 0.0;
        for (const auto& v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    bool is_finite() const {
        for (const auto& v : data_)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }

    bool is_unitary(double tol = 1e-10) const;
    bool is_skew_hermitian(double tol = 1e-12) const {
        MatrixField s = *this + adjoint();
        return s.max_abs() <= tol;
    }

    /// Pointwise trace as a rank-1 field.
    MatrixField trace_field() const {
        MatrixField t(geom_, 1);
        cplx* dst = t.plane(0, 0);
        for (int u = 0; u < rank_; ++u) {
            const cplx* src = plane(u, u);
            for (std::size_t i = 0; i < points(); ++i) dst[i] += src[i];
        }
        t.band_ = band_;
        return t;
    }

    /// Pointwise matrix inverse (Gauss-Jordan per point). Throws on a
    /// singular value at any grid point.
    MatrixField inverse() const;

    const std::vector<cplx>& raw() const { return data_; }
    std::vector<cplx>& raw() { return data_; }

private:
    void check_compatible(const MatrixField& o) const {
        if (!(geom_ == o.geom_) || rank_ != o.rank_)
            throw std::invalid_argument("matrix fields live on different geometries");
    }

    TorusGeometry geom_;
    int rank_ = 0;
    bool skew_ = false;
    std::array<int, 4> band_{};
    std::vector<cplx> data_;
};

namespace detail {

/// Raw pointwise matrix product c += a*b over npts points of rank r
/// entry-major planes.
inline void matmul_accumulate(const cplx* a, const cplx* b, cplx* c, int r,
                              std::size_t npts, cplx sign) {
    for (int u = 0; u < r; ++u)
        for (int v = 0; v < r; ++v) {
            cplx* cp = c + (static_cast<std::size_t>(u) * r + v) * npts;
            for (int w = 0; w < r; ++w) {
                const cplx* ap = a + (static_cast<std::size_t>(u) * r + w) * npts;
                const cplx* bp = b + (static_cast<std::size_t>(w) * r + v) * npts;
                for (std::size_t i = 0; i < npts; ++i) cp[i] += sign * ap[i] * bp[i];
            }
        }
}

/// Interpolate all planes of a field onto the padded grid.
inline std::vector<cplx> pad_field(const MatrixField& f, const std::array<int, 4>& mext) {
    const auto& g = f.geom();
    const int nd = g.axes();
    std::size_t mpts = 1;
    for (int a = 0; a < nd; ++a) mpts *= static_cast<std::size_t>(mext[a]);
    const int r = f.rank();
    std::vector<cplx> out(static_cast<std::size_t>(r) * r * mpts);
    std::vector<cplx> spec(f.points());
    for (int u = 0; u < r; ++u)
        for (int v = 0; v < r; ++v) {
            std::copy(f.plane(u, v), f.plane(u, v) + f.points(), spec.begin());
            fft_all(spec.data(), g.ext.data(), nd, -1);
            cplx* dst = out.data() + (static_cast<std::size_t>(u) * r + v) * mpts;
            remap_spectrum(spec.data(), g.ext.data(), dst, mext.data(), nd);
            fft_all(dst, mext.data(), nd, +1);
        }
    return out;
}

/// Project padded-grid planes back to the base grid (band |k| <= N/2-1).
inline void truncate_field(const std::vector<cplx>& padded,
                           const std::array<int, 4>& mext, MatrixField& out) {
    const auto& g = out.geom();
    const int nd = g.axes();
    std::size_t mpts = 1;
    for (int a = 0; a < nd; ++a) mpts *= static_cast<std::size_t>(mext[a]);
    const int r = out.rank();
    std::vector<cplx> spec(mpts);
    for (int u = 0; u < r; ++u)
        for (int v = 0; v < r; ++v) {
            const cplx* src = padded.data() + (static_cast<std::size_t>(u) * r + v) * mpts;
            std::copy(src, src + mpts, spec.begin());
            fft_all(spec.data(), mext.data(), nd, -1);
            cplx* dst = out.plane(u, v);
            std::fill(dst, dst + out.points(), cplx{});
            remap_spectrum(spec.data(), mext.data(), dst, g.ext.data(), nd);
            fft_all(dst, g.ext.data(), nd, +1);
        }
}

enum class ProductKind { Plain, Commutator };

/// Pointwise product (or commutator) under the geometry's dealias policy.
/// The dealiased product is the band-retained projection of the exact product
/// of the trigonometric interpolants. The tracked band bounds pick the
/// cheapest faithful realization:
///   - content fits the retained band: the plain pointwise product is already
///     exact (the projection is a no-op);
///   - content fits the grid but touches Nyquist: plain product followed by a
///     spectral band filter (aliased images land outside the retained band);
///   - otherwise: evaluate on the 3/2 padded grid and project back.
inline MatrixField product_impl(const MatrixField& a, const MatrixField& b,
                                ProductKind kind) {
    if (!(a.geom() == b.geom()) || a.rank() != b.rank())
        throw std::invalid_argument("product of incompatible matrix fields");
    const auto& g = a.geom();
    const int r = a.rank();
    MatrixField out(g, r);

    if (kind == ProductKind::Commutator && r == 1) return out;  // abelian

    std::array<int, 4> sum{};
    bool fits_band = true, fits_grid = true;
    for (int ax = 0; ax < g.axes(); ++ax) {
        sum[ax] = a.band()[ax] + b.band()[ax];
        if (sum[ax] > g.ext[ax] / 2 - 1) fits_band = false;
        if (sum[ax] > g.ext[ax] / 2) fits_grid = false;
    }

    auto plain_into = [&](MatrixField& dst) {
        matmul_accumulate(a.raw().data(), b.raw().data(), dst.raw().data(), r,
                          a.points(), cplx{1.0, 0.0});
        if (kind == ProductKind::Commutator)
            matmul_accumulate(b.raw().data(), a.raw().data(), dst.raw().data(), r,
                              a.points(), cplx{-1.0, 0.0});
    };
    auto capped = [&] {
        std::array<int, 4> c{};
        for (int ax = 0; ax < g.axes(); ++ax)
            c[ax] = std::min(sum[ax], g.ext[ax] / 2 - 1);
        return c;
    };

    if (!g.dealias) {
        plain_into(out);
        std::array<int, 4> bd{};
        for (int ax = 0; ax < g.axes(); ++ax)
            bd[ax] = fits_band ? sum[ax] : g.ext[ax] / 2;  // aliased: unknown
        out.set_band(bd);
        return out;
    }
    if (fits_band) {
        plain_into(out);
        out.set_band(sum);
        return out;
    }
    if (fits_grid) {
        plain_into(out);
        for (int u = 0; u < r; ++u)
            for (int v = 0; v < r; ++v)
                band_filter(out.plane(u, v), g.ext.data(), g.axes());
        out.set_band(capped());
        return out;
    }
    const auto mext = padded_ext(g);
    std::size_t mpts = 1;
    for (int ax = 0; ax < g.axes(); ++ax) mpts *= static_cast<std::size_t>(mext[ax]);
    const std::vector<cplx> pa = pad_field(a, mext);
    const std::vector<cplx> pb = pad_field(b, mext);
    std::vector<cplx> pc(static_cast<std::size_t>(r) * r * mpts);
    matmul_accumulate(pa.data(), pb.data(), pc.data(), r, mpts, cplx{1.0, 0.0});
    if (kind == ProductKind::Commutator)
        matmul_accumulate(pb.data(), pa.data(), pc.data(), r, mpts, cplx{-1.0, 0.0});
    truncate_field(pc, mext, out);
    out.set_band(capped());
    return out;
}

}  // namespace detail

namespace detail {

/// Reusable padded representation of a field, for product chains that hit
/// the padded tier repeatedly with shared operands.
struct PaddedField {
    std::array<int, 4> mext{};
    std::size_t mpts = 0;
    int r = 0;
    std::vector<cplx> data;
};

inline PaddedField prepad(const MatrixField& f) {
    PaddedField p;
    p.mext = padded_ext(f.geom());
    p.mpts = 1;
    for (int a = 0; a < f.geom().axes(); ++a) p.mpts *= static_cast<std::size_t>(p.mext[a]);
    p.r = f.rank();
    p.data = pad_field(f, p.mext);
    return p;
}

/// Projected product (or commutator) of two pre-padded operands.
inline MatrixField product_prepadded(const TorusGeometry& g, const PaddedField& a,
                                     const PaddedField& b, ProductKind kind) {
    MatrixField out(g, a.r);
    if (kind == ProductKind::Commutator && a.r == 1) return out;
    std::vector<cplx> pc(static_cast<std::size_t>(a.r) * a.r * a.mpts);
    matmul_accumulate(a.data.data(), b.data.data(), pc.data(), a.r, a.mpts,
                      cplx{1.0, 0.0});
    if (kind == ProductKind::Commutator)
        matmul_accumulate(b.data.data(), a.data.data(), pc.data(), a.r, a.mpts,
                          cplx{-1.0, 0.0});
    truncate_field(pc, a.mext, out);
    std::array<int, 4> bd{};
    for (int ax = 0; ax < g.axes(); ++ax) bd[ax] = g.ext[ax] / 2 - 1;
    out.set_band(bd);
    return out;
}

}  // namespace detail

/// Pointwise product a*b under the geometry's dealias policy.
inline MatrixField product(const MatrixField& a, const MatrixField& b) {
    return detail::product_impl(a, b, detail::ProductKind::Plain);
}

/// Pointwise commutator [a,b] under the geometry's dealias policy.
inline MatrixField bracket(const MatrixField& a, const MatrixField& b) {
    return detail::product_impl(a, b, detail::ProductKind::Commutator);
}

/// Pointwise scalar field Tr(a(x) b(x)*), as a rank-1 field. Coefficient
/// pairing of the wedge-with-contraction product; follows the dealias policy.
inline MatrixField trace_pair(const MatrixField& a, const MatrixField& b) {
    return detail::product_impl(a, b.adjoint(), detail::ProductKind::Plain)
        .trace_field();
}

inline bool MatrixField::is_unitary(double tol) const {
    MatrixField g = *this;
    // g g* = 1 pointwise, checked with plain products
    MatrixField p(geom_, rank_);
    detail::matmul_accumulate(g.raw().data(), g.adjoint().raw().data(),
                              p.raw().data(), rank_, points(), cplx{1.0, 0.0});
    MatrixField diff = p - identity(geom_, rank_);
    return diff.max_abs() <= tol;
}

inline MatrixField MatrixField::inverse() const {
    MatrixField out(geom_, rank_);
    out.mark_full_band();  // pointwise inversion is not band-limited
    const int r = rank_;
    std::vector<cplx> m(static_cast<std::size_t>(r) * r);
    std::vector<cplx> col(r);
    for (std::size_t i = 0; i < points(); ++i) {
        for (int u = 0; u < r; ++u)
            for (int v = 0; v < r; ++v) m[u * r + v] = at(i, u, v);
        // invert column by column
        for (int c = 0; c < r; ++c) {
            std::vector<cplx> a = m;
            std::fill(col.begin(), col.end(), cplx{});
            col[c] = 1.0;
            try {
                solve_dense(a, col, r, "pointwise matrix inverse");
            } catch (const std::runtime_error&) {
                throw std::invalid_argument(
                    "gauge transform is singular at a grid point");
            }
            for (int u = 0; u < r; ++u) out.at(i, u, c) = col[u];
        }
    }
    return out;
}

// -- reductions --------------------------------------------------------------

/// L2 pairing sum_x w Re Tr(a b*) (coefficient metric times quadrature).
inline double l2_inner(const MatrixField& a, const MatrixField& b) {
    if (!a.geom().same_grid(b.geom()) || a.rank() != b.rank())
        throw std::invalid_argument("l2 pairing of incompatible matrix fields");
    double s = 0.0;
    for (int u = 0; u < a.rank(); ++u)
        for (int v = 0; v < a.rank(); ++v) {
            const cplx* pa = a.plane(u, v);
            const cplx* pb = b.plane(u, v);
            for (std::size_t i = 0; i < a.points(); ++i)
                s += pa[i].real() * pb[i].real() + pa[i].imag() * pb[i].imag();
        }
    return s * a.geom().weight();
}

inline double l2_norm(const MatrixField& a) { return std::sqrt(l2_inner(a, a)); }

// -- random fields -----------------------------------------------------------

/// Band-limited random field: independent complex Gaussian Fourier
/// coefficients on modes |k_axis| <= band, normalized so the field RMS is
/// close to `amplitude`.
inline MatrixField random_field(const TorusGeometry& g, int r, int band,
                                double amplitude, Rng& rng) {
    if (band < 0 || band >= g.N / 2)
        throw std::invalid_argument("band limit must lie below Nyquist");
    MatrixField out(g, r);
    const int nd = g.axes();
    std::size_t nmodes = 1;
    for (int a = 0; a < nd; ++a) nmodes *= static_cast<std::size_t>(2 * band + 1);
    const double scale = amplitude / std::sqrt(2.0 * static_cast<double>(nmodes));

    std::vector<cplx> spec(g.points());
    std::array<int, 4> k{};
    for (int u = 0; u < r; ++u)
        for (int v = 0; v < r; ++v) {
            std::fill(spec.begin(), spec.end(), cplx{});
            // iterate modes lexicographically for determinism
            k.fill(-band);
            while (true) {
                std::size_t flat = 0;
                for (int a = 0; a < nd; ++a) {
                    const int bin = (k[a] >= 0) ? k[a] : k[a] + g.ext[a];
                    flat = flat * g.ext[a] + static_cast<std::size_t>(bin);
                }
                spec[flat] = scale * rng.cgauss();
                int a = nd - 1;
                while (a >= 0 && ++k[a] > band) { k[a] = -band; --a; }
                if (a < 0) break;
            }
            cplx* dst = out.plane(u, v);
            std::copy(spec.begin(), spec.end(), dst);
            detail::fft_all(dst, g.ext.data(), nd, +1);
            // inverse normalization folds in 1/prod(ext); undo it so the
            // coefficients mean what they say
            double renorm = 1.0;
            for (int a = 0; a < nd; ++a) renorm *= g.ext[a];
            for (std::size_t i = 0; i < g.points(); ++i) dst[i] *= renorm;
        }
    std::array<int, 4> bd{};
    for (int a = 0; a < g.axes(); ++a) bd[a] = band;
    out.set_band(bd);
    return out;
}

/// Random field with values in the skew-Hermitian matrices u(r).
inline MatrixField random_skew_field(const TorusGeometry& g, int r, int band,
                                     double amplitude, Rng& rng) {
    MatrixField x = random_field(g, r, band, amplitude, rng);
    MatrixField s = x - x.adjoint();
    s *= cplx{0.5, 0.0};
    s.set_skew_hermitian_flag(true);
    return s;
}

}  // namespace ymbar

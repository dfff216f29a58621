#pragma once

#include "ymbar/forms.hpp"

namespace ymbar {

// ---------------------------------------------------------------------------
// Unitary connections on the trivial rank-r Hermitian bundle, stored by their
// (0,1)-part relative to the product connection; the (1,0)-part is always
// -(a01)* so unitarity is structural. A constant abelian background curvature
// (rank 1 only) models a line bundle with nonzero Chern class: every operator
// acts on End(E)-valued data, which is untwisted for a line bundle, so
// periodic fields plus the constant curvature shift suffice.
// ---------------------------------------------------------------------------

/// Constant background 2-form, stored by canonical components. For n = 1 only
/// the single (1,1) slot may be nonzero. Unitarity requires f20 = -conj(f02)
/// and a Hermitian (1,1) coefficient matrix.
struct Background {
    cplx f20{};
    std::array<cplx, 4> f11{};  // (i,j) -> dz_i ^ dzbar_j, i-major
    cplx f02{};

    void validate(int n) const {
        if (std::abs(f20 + std::conj(f02)) > 1e-14)
            throw std::invalid_argument("background must satisfy f20 = -conj(f02)");
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (std::abs(f11[i * n + j] - std::conj(f11[j * n + i])) > 1e-14)
                    throw std::invalid_argument(
                        "background (1,1) coefficients must be Hermitian");
        if (n == 1 && (f20 != cplx{} || f02 != cplx{}))
            throw std::invalid_argument(
                "no (2,0)/(0,2) background exists in complex dimension 1");
    }

    /// F = i (dz_1 ^ dz_2 + dzbar_1 ^ dzbar_2): constant curvature with
    /// vanishing (1,1)-part (n = 2).
    static Background standard() {
        Background b;
        b.f20 = kI;
        b.f02 = kI;
        return b;
    }
};

class Connection {
public:
    Connection(const TorusGeometry& geom, int rank, FormPQ a01,
               std::optional<Background> bg = std::nullopt)
        : geom_(geom), rank_(rank), a01_(std::move(a01)), bg_(std::move(bg)) {
        if (a01_.p() != 0 || a01_.q() != 1)
            throw std::invalid_argument("connection form must have bidegree (0,1)");
        if (!(a01_.geom() == geom) || a01_.rank() != rank)
            throw std::invalid_argument("connection form does not match geometry/rank");
        if (bg_) {
            if (rank != 1)
                throw std::invalid_argument("background curvature requires rank 1");
            bg_->validate(geom.n);
        }
    }

    static Connection flat(const TorusGeometry& g, int r) {
        return Connection(g, r, FormPQ::zero(g, r, 0, 1));
    }

    const TorusGeometry& geom() const { return geom_; }
    int rank() const { return rank_; }
    const FormPQ& a01() const { return a01_; }
    const std::optional<Background>& background() const { return bg_; }

    FormPQ a10() const { return -conj_transpose(a01_); }

    /// dzbar_k component of the (0,1)-part (1-based axis).
    const MatrixField& coeff01(int k) const { return a01_.comp(0u, 1u << (k - 1)); }
    /// dz_k component of the (1,0)-part: -(coeff01)*.
    MatrixField coeff10(int k) const { return -coeff01(k).adjoint(); }

    Connection with_a01(FormPQ a) const { return Connection(geom_, rank_, std::move(a), bg_); }

    Connection with_dealias(bool on) const {
        TorusGeometry g = geom_.with_dealias(on);
        return Connection(g, rank_, a01_.with_geometry(g), bg_);
    }

    bool is_finite() const { return a01_.is_finite(); }

private:
    TorusGeometry geom_;
    int rank_ = 0;
    FormPQ a01_;
    std::optional<Background> bg_;
};

/// Line bundle fixture: trivial potential plus the standard constant
/// background, an almost flat holomorphic connection (F11 = 0, F02 constant).
inline Connection constant_background_connection(const TorusGeometry& g) {
    if (g.n != 2)
        throw std::invalid_argument("the constant background fixture needs n = 2");
    return Connection(g, 1, FormPQ::zero(g, 1, 0, 1), Background::standard());
}

inline Connection random_connection(const TorusGeometry& g, int r, int band,
                                    double amplitude, Rng& rng,
                                    std::optional<Background> bg = std::nullopt) {
    FormPQ a01(g, r, 0, 1);
    for (int k = 1; k <= g.n; ++k)
        a01.comp(0u, 1u << (k - 1)) = random_field(g, r, band, amplitude, rng);
    return Connection(g, r, std::move(a01), std::move(bg));
}

// ---------------------------------------------------------------------------
// Curvature. F02 = dbar a01 + a01 ^ a01 (plus background); F20 = -(F02)* by
// unitarity; F11 = partial a01 + dbar a10 + a10 ^ a01 + a01 ^ a10 (plus
// background).
// ---------------------------------------------------------------------------

struct Curvature {
    FormPQ f20, f11, f02;

    double norm() const {
        return std::sqrt(l2_inner(f20, f20) + l2_inner(f11, f11) + l2_inner(f02, f02));
    }
};

namespace detail {

/// Whether a product of two fields with these band bounds needs the padded
/// grid under this geometry's dealias policy.
inline bool needs_padding(const TorusGeometry& g, const MatrixField& a,
                          const MatrixField& b) {
    if (!g.dealias) return false;
    for (int ax = 0; ax < g.axes(); ++ax)
        if (a.band()[ax] + b.band()[ax] > g.ext[ax] / 2) return true;
    return false;
}

}  // namespace detail

/// (0,2)-part of the curvature: dbar a01 + a01 ^ a01 (plus background).
/// The quadratic term reduces to the single commutator [a_1, a_2].
inline FormPQ curvature_f02(const Connection& A) {
    const auto& g = A.geom();
    FormPQ f02 = dbar_flat(A.a01());
    if (g.n == 2) {
        f02.comp(0u, 0b11u) += bracket(A.coeff01(1), A.coeff01(2));
        if (A.background()) f02 += FormPQ::basis(g, 1, 0u, 0b11u, A.background()->f02);
    }
    return f02;
}

inline Curvature curvature(const Connection& A) {
    const auto& g = A.geom();
    const FormPQ& a01 = A.a01();
    const FormPQ a10 = A.a10();

    // derivative parts
    FormPQ f02 = dbar_flat(a01);
    FormPQ f11 = partial_flat(a01) + dbar_flat(a10);

    // quadratic parts, assembled as commutators: the (0,2)-component is
    // [a_1, a_2] and the (1,1)-component over (i, jbar) is [a10_i, a01_j].
    // When every bracket would hit the padded grid anyway, pad each operand
    // once and reuse it.
    bool all_padded = g.n == 2;
    for (int i = 1; i <= g.n && all_padded; ++i)
        for (int j = 1; j <= g.n && all_padded; ++j)
            all_padded = detail::needs_padding(g, a01.comp(0u, 1u << (j - 1)),
                                               a01.comp(0u, 1u << (i - 1)));
    if (all_padded) {
        std::vector<detail::PaddedField> p01, p10;
        for (int k = 1; k <= g.n; ++k) {
            p01.push_back(detail::prepad(A.coeff01(k)));
            p10.push_back(detail::prepad(a10.comp(1u << (k - 1), 0u)));
        }
        if (g.n == 2 && !f02.empty())
            f02.comp(0u, 0b11u) += detail::product_prepadded(
                g, p01[0], p01[1], detail::ProductKind::Commutator);
        for (int i = 1; i <= g.n; ++i)
            for (int j = 1; j <= g.n; ++j)
                f11.comp(1u << (i - 1), 1u << (j - 1)) += detail::product_prepadded(
                    g, p10[static_cast<std::size_t>(i - 1)],
                    p01[static_cast<std::size_t>(j - 1)],
                    detail::ProductKind::Commutator);
    } else {
        if (g.n == 2 && !f02.empty())
            f02.comp(0u, 0b11u) += bracket(A.coeff01(1), A.coeff01(2));
        for (int i = 1; i <= g.n; ++i)
            for (int j = 1; j <= g.n; ++j)
                f11.comp(1u << (i - 1), 1u << (j - 1)) +=
                    bracket(a10.comp(1u << (i - 1), 0u), a01.comp(0u, 1u << (j - 1)));
    }

    if (A.background()) {
        const Background& b = *A.background();
        if (g.n == 2 && !f02.empty()) f02 += FormPQ::basis(g, 1, 0u, 0b11u, b.f02);
        for (int i = 1; i <= g.n; ++i)
            for (int j = 1; j <= g.n; ++j) {
                const cplx c = b.f11[(i - 1) * g.n + (j - 1)];
                if (c != cplx{}) f11 += FormPQ::basis(g, 1, 1u << (i - 1), 1u << (j - 1), c);
            }
    }
    FormPQ f20 = -conj_transpose(f02);
    return Curvature{std::move(f20), std::move(f11), std::move(f02)};
}

/// Independent recomputation of the (2,0)-part from the (1,0) potential,
/// used to cross-check the structural identity F20 = -(F02)*.
inline FormPQ curvature_f20_direct(const Connection& A) {
    const FormPQ a10 = A.a10();
    FormPQ f20 = partial_flat(a10) + detail::wedge_impl(a10, a10, CoeffRule::Product);
    if (A.background() && A.geom().n == 2)
        f20 += FormPQ::basis(A.geom(), 1, 0b11u, 0u, A.background()->f20);
    return f20;
}

// ---------------------------------------------------------------------------
// Gauge actions.
// ---------------------------------------------------------------------------

struct GaugeTransform {
    MatrixField g;
    bool unitary = false;

    GaugeTransform(MatrixField field, bool unitary_flag)
        : g(std::move(field)), unitary(unitary_flag) {
        if (unitary && !g.is_unitary(1e-10))
            throw std::invalid_argument("gauge transform flagged unitary is not unitary");
    }

    MatrixField inverse() const { return unitary ? g.adjoint() : g.inverse(); }
};

/// Random constant unitary gauge transform (QR-free: Gram-Schmidt on a
/// Gaussian matrix).
inline GaugeTransform random_constant_unitary(const TorusGeometry& geom, int r, Rng& rng) {
    std::vector<cplx> m(static_cast<std::size_t>(r) * r);
    for (auto& v : m) v = rng.cgauss();
    // Gram-Schmidt columns
    for (int c = 0; c < r; ++c) {
        for (int pc = 0; pc < c; ++pc) {
            cplx dot{};
            for (int i = 0; i < r; ++i) dot += std::conj(m[i * r + pc]) * m[i * r + c];
            for (int i = 0; i < r; ++i) m[i * r + c] -= dot * m[i * r + pc];
        }
        double nrm = 0.0;
        for (int i = 0; i < r; ++i) nrm += std::norm(m[i * r + c]);
        nrm = std::sqrt(nrm);
        for (int i = 0; i < r; ++i) m[i * r + c] /= nrm;
    }
    return GaugeTransform(MatrixField::constant(geom, r, m), true);
}

/// a01 -> g a01 g^{-1} - (dbar g) g^{-1}. Unitary transforms only; curvature
/// conjugates and the bar-energy is invariant.
inline Connection gauge_unitary(const Connection& A, const GaugeTransform& G) {
    if (!G.unitary)
        throw std::invalid_argument("gauge_unitary requires a unitary transform");
    const MatrixField ginv = G.inverse();
    FormPQ a(A.geom(), A.rank(), 0, 1);
    for (int k = 1; k <= A.geom().n; ++k) {
        MatrixField t = product(product(G.g, A.coeff01(k)), ginv);
        t -= product(G.g.wirtinger(k, true), ginv);
        a.comp(0u, 1u << (k - 1)) = t;
    }
    return A.with_a01(std::move(a));
}

/// Complexified gauge action on unitary connections: the new dbar-operator is
/// the g-conjugate of the old one and the (1,0)-part is re-derived by
/// unitarity. For unitary g this coincides with gauge_unitary.
inline Connection gauge_complex_hat(const Connection& A, const GaugeTransform& G) {
    const MatrixField ginv = G.inverse();
    FormPQ a(A.geom(), A.rank(), 0, 1);
    for (int k = 1; k <= A.geom().n; ++k) {
        // covariant derivative of g as an End section: dbar g + [a_k, g]
        MatrixField dg = G.g.wirtinger(k, true) + bracket(A.coeff01(k), G.g);
        a.comp(0u, 1u << (k - 1)) = A.coeff01(k) - product(dg, ginv);
    }
    Connection out = A.with_a01(std::move(a));
    // (1,0)-part consistency: a10 + [(dbar_A g) g^{-1}]* must equal the
    // negative adjoint of the new (0,1)-part. Exact by construction.
    for (int k = 1; k <= A.geom().n; ++k) {
        MatrixField dg = G.g.wirtinger(k, true) + bracket(A.coeff01(k), G.g);
        MatrixField lhs = A.coeff10(k) + product(dg, ginv).adjoint();
        MatrixField rhs = out.coeff10(k);
        if ((lhs - rhs).max_abs() > 1e-12 * (1.0 + rhs.max_abs()))
            throw std::runtime_error("complex gauge action lost unitarity");
    }
    return out;
}

/// Componentwise conjugation g F g^{-1} of a curvature (for equivariance
/// checks).
inline Curvature conjugate(const Curvature& F, const GaugeTransform& G) {
    const MatrixField ginv = G.inverse();
    auto conj_form = [&](const FormPQ& f) {
        FormPQ out = f;
        for (std::size_t i = 0; i < f.masksI().size(); ++i)
            for (std::size_t k = 0; k < f.masksK().size(); ++k)
                out.comp_at(static_cast<int>(i), static_cast<int>(k)) = product(
                    product(G.g, f.comp_at(static_cast<int>(i), static_cast<int>(k))),
                    ginv);
        return out;
    };
    return Curvature{conj_form(F.f20), conj_form(F.f11), conj_form(F.f02)};
}

}  // namespace ymbar

#pragma once

#include <optional>

#include "ymbar/matrix_field.hpp"

namespace ymbar {

// ---------------------------------------------------------------------------
// End(E)-valued (p,q)-forms. A form is stored by its components over the
// canonical basis dz_{i_1}..dz_{i_p} ^ dzbar_{k_1}..dzbar_{k_q} with strictly
// increasing multi-indices (all dz factors before all dzbar factors).
//
// Conventions fixed here and used throughout:
//  - |dz_k|^2 = |dzbar_k|^2 = 2 pointwise, so a basis (p,q)-form has squared
//    norm 2^{p+q};
//  - the contractions i_k, ibar_k are the pointwise adjoints of dz_k^,
//    dzbar_k^ and carry the matching factor 2;
//  - Lambda = -(i/2) sum_k ibar_k i_k, the adjoint of wedging with the
//    Kaehler form.
// Bidegrees outside [0,n] are legal and carry no components; they act as
// canonical zero forms so operator compositions stay total.
// ---------------------------------------------------------------------------

enum class CoeffRule { Product, Bracket, Pairing };

/// Sign of dz_{I1} dzbar_{K1} ^ dz_{I2} dzbar_{K2} reordered to the canonical
/// basis element over (I1|I2, K1|K2); zero when factors repeat.
inline int form_wedge_sign(unsigned I1, unsigned K1, unsigned I2, unsigned K2) {
    if ((I1 & I2) || (K1 & K2)) return 0;
    int s = 1;
    if ((popcount(K1) % 2) && (popcount(I2) % 2)) s = -s;  // dz_{I2} past dzbar_{K1}
    s *= merge_sign(I1, I2);
    s *= merge_sign(K1, K2);
    return s;
}

class FormPQ {
public:
    FormPQ() = default;

    FormPQ(const TorusGeometry& geom, int rank, int p, int q)
        : geom_(geom), rank_(rank), p_(p), q_(q),
          masksI_(subsets(geom.n, p)), masksK_(subsets(geom.n, q)) {
        comps_.reserve(masksI_.size() * masksK_.size());
        for (std::size_t i = 0; i < masksI_.size() * masksK_.size(); ++i)
            comps_.emplace_back(geom, rank);
    }

    static FormPQ zero(const TorusGeometry& g, int r, int p, int q) {
        return FormPQ(g, r, p, q);
    }

    /// Single canonical basis form with the given constant coefficient.
    static FormPQ basis(const TorusGeometry& g, int r, unsigned maskI, unsigned maskK,
                        cplx coef = {1.0, 0.0}) {
        FormPQ f(g, r, popcount(maskI), popcount(maskK));
        MatrixField c = MatrixField::identity(g, r);
        c *= coef;
        f.comp(maskI, maskK) = c;
        return f;
    }

    const TorusGeometry& geom() const { return geom_; }
    int rank() const { return rank_; }
    int p() const { return p_; }
    int q() const { return q_; }
    int ncomp() const { return static_cast<int>(comps_.size()); }
    bool empty() const { return comps_.empty(); }

    const std::vector<unsigned>& masksI() const { return masksI_; }
    const std::vector<unsigned>& masksK() const { return masksK_; }

    MatrixField& comp_at(int iI, int iK) {
        return comps_[static_cast<std::size_t>(iI) * masksK_.size() + iK];
    }
    const MatrixField& comp_at(int iI, int iK) const {
        return comps_[static_cast<std::size_t>(iI) * masksK_.size() + iK];
    }
    MatrixField& comp(unsigned maskI, unsigned maskK) {
        return comp_at(index_of(masksI_, maskI), index_of(masksK_, maskK));
    }
    const MatrixField& comp(unsigned maskI, unsigned maskK) const {
        return comp_at(index_of(masksI_, maskI), index_of(masksK_, maskK));
    }

    FormPQ& operator+=(const FormPQ& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < comps_.size(); ++i) comps_[i] += o.comps_[i];
        return *this;
    }
    FormPQ& operator-=(const FormPQ& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < comps_.size(); ++i) comps_[i] -= o.comps_[i];
        return *this;
    }
    FormPQ& operator*=(cplx s) {
        for (auto& c : comps_) c *= s;
        return *this;
    }
    friend FormPQ operator+(FormPQ a, const FormPQ& b) { return a += b; }
    friend FormPQ operator-(FormPQ a, const FormPQ& b) { return a -= b; }
    friend FormPQ operator*(cplx s, FormPQ a) { return a *= s; }
    friend FormPQ operator-(FormPQ a) { return a *= cplx{-1.0, 0.0}; }

    double max_abs() const {
        double m = 0.0;
        for (const auto& c : comps_) m = std::max(m, c.max_abs());
        return m;
    }
    bool is_finite() const {
        for (const auto& c : comps_)
            if (!c.is_finite()) return false;
        return true;
    }

    FormPQ with_geometry(const TorusGeometry& g) const {
        FormPQ f(g, rank_, p_, q_);
        for (std::size_t i = 0; i < comps_.size(); ++i)
            f.comps_[i] = comps_[i].with_geometry(g);
        return f;
    }

private:
    static int index_of(const std::vector<unsigned>& masks, unsigned m) {
        for (std::size_t i = 0; i < masks.size(); ++i)
            if (masks[i] == m) return static_cast<int>(i);
        throw std::invalid_argument("multi-index not present at this bidegree");
    }
    void check_same_shape(const FormPQ& o) const {
        if (!(geom_ == o.geom_) || rank_ != o.rank_ || p_ != o.p_ || q_ != o.q_)
            throw std::invalid_argument("form shape mismatch");
    }

    TorusGeometry geom_;
    int rank_ = 0;
    int p_ = 0, q_ = 0;
    std::vector<unsigned> masksI_, masksK_;
    std::vector<MatrixField> comps_;
};

namespace detail {

/// Wedge without the degree-overflow check; overflowing bidegrees come back
/// as canonical zero forms with no components.
inline FormPQ wedge_impl(const FormPQ& a, const FormPQ& b, CoeffRule rule) {
    if (!(a.geom() == b.geom()))
        throw std::invalid_argument("wedge of forms on different geometries");
    if (rule != CoeffRule::Pairing && a.rank() != b.rank())
        throw std::invalid_argument("wedge of forms of different rank");
    const int rank_out = (rule == CoeffRule::Pairing) ? 1 : a.rank();
    FormPQ out(a.geom(), rank_out, a.p() + b.p(), a.q() + b.q());
    if (out.empty()) return out;
    for (std::size_t ia = 0; ia < a.masksI().size(); ++ia)
        for (std::size_t ka = 0; ka < a.masksK().size(); ++ka)
            for (std::size_t ib = 0; ib < b.masksI().size(); ++ib)
                for (std::size_t kb = 0; kb < b.masksK().size(); ++kb) {
                    const unsigned I1 = a.masksI()[ia], K1 = a.masksK()[ka];
                    const unsigned I2 = b.masksI()[ib], K2 = b.masksK()[kb];
                    const int s = form_wedge_sign(I1, K1, I2, K2);
                    if (s == 0) continue;
                    const MatrixField& ca = a.comp_at(static_cast<int>(ia),
                                                      static_cast<int>(ka));
                    const MatrixField& cb = b.comp_at(static_cast<int>(ib),
                                                      static_cast<int>(kb));
                    MatrixField term = (rule == CoeffRule::Product)
                                           ? product(ca, cb)
                                           : (rule == CoeffRule::Bracket)
                                                 ? bracket(ca, cb)
                                                 : trace_pair(ca, cb);
                    term *= cplx{static_cast<double>(s), 0.0};
                    out.comp(I1 | I2, K1 | K2) += term;
                }
    return out;
}

}  // namespace detail

/// Wedge product with the chosen coefficient combination: matrix product,
/// Lie bracket, or the Hermitian trace pairing Tr(a b*) (scalar result).
inline FormPQ wedge(const FormPQ& a, const FormPQ& b, CoeffRule rule = CoeffRule::Product) {
    const int n = a.geom().n;
    if (a.p() + b.p() > n || a.q() + b.q() > n)
        throw std::invalid_argument("wedge degree overflow");
    return detail::wedge_impl(a, b, rule);
}

/// Contraction i_k (bar=false) or ibar_k (bar=true); the pointwise adjoint of
/// wedging with the corresponding basis 1-form (carries a factor 2).
inline FormPQ contract(const FormPQ& a, int k, bool bar) {
    if (k < 1 || k > a.geom().n) throw std::invalid_argument("contraction axis out of range");
    const unsigned mk = 1u << (k - 1);
    FormPQ out(a.geom(), a.rank(), bar ? a.p() : a.p() - 1, bar ? a.q() - 1 : a.q());
    if (out.empty()) return out;
    for (std::size_t ia = 0; ia < a.masksI().size(); ++ia)
        for (std::size_t ka = 0; ka < a.masksK().size(); ++ka) {
            const unsigned I = a.masksI()[ia], K = a.masksK()[ka];
            if (bar) {
                if (!(K & mk)) continue;
                int s = extract_sign(K, k);
                if (a.p() % 2) s = -s;  // dzbar_k moved past the dz block
                MatrixField t = a.comp_at(static_cast<int>(ia), static_cast<int>(ka));
                t *= cplx{2.0 * s, 0.0};
                out.comp(I, K & ~mk) += t;
            } else {
                if (!(I & mk)) continue;
                const int s = extract_sign(I, k);
                MatrixField t = a.comp_at(static_cast<int>(ia), static_cast<int>(ka));
                t *= cplx{2.0 * s, 0.0};
                out.comp(I & ~mk, K) += t;
            }
        }
    return out;
}

/// Lambda, the pointwise adjoint of wedging with the Kaehler form:
/// -(i/2) sum_k ibar_k i_k. Annihilates forms with p = 0 or q = 0.
inline FormPQ lambda(const FormPQ& a) {
    FormPQ out(a.geom(), a.rank(), a.p() - 1, a.q() - 1);
    if (out.empty() || a.p() == 0 || a.q() == 0) return out;
    for (int k = 1; k <= a.geom().n; ++k)
        out += contract(contract(a, k, false), k, true);
    out *= cplx{0.0, -0.5};
    return out;
}

/// Componentwise conjugate transpose of the coefficients, basis untouched.
/// Threading this through the Hodge star turns the C-linear star of the
/// defining relation into the degree-reversing map whose sandwich with
/// dbar_A realizes the adjoint over the Hermitian coefficient bundle.
inline FormPQ coefficient_adjoint(const FormPQ& a) {
    FormPQ out = a;
    for (std::size_t i = 0; i < a.masksI().size(); ++i)
        for (std::size_t k = 0; k < a.masksK().size(); ++k)
            out.comp_at(static_cast<int>(i), static_cast<int>(k)) =
                a.comp_at(static_cast<int>(i), static_cast<int>(k)).adjoint();
    return out;
}

/// Conjugate-transpose star: swaps bidegree (p,q) -> (q,p), conjugates the
/// form factors and takes the pointwise adjoint of the coefficients.
inline FormPQ conj_transpose(const FormPQ& a) {
    FormPQ out(a.geom(), a.rank(), a.q(), a.p());
    const int sign = ((a.p() * a.q()) % 2) ? -1 : 1;
    for (std::size_t ia = 0; ia < a.masksI().size(); ++ia)
        for (std::size_t ka = 0; ka < a.masksK().size(); ++ka) {
            MatrixField t = a.comp_at(static_cast<int>(ia), static_cast<int>(ka)).adjoint();
            t *= cplx{static_cast<double>(sign), 0.0};
            out.comp(a.masksK()[ka], a.masksI()[ia]) += t;
        }
    return out;
}

// ---------------------------------------------------------------------------
// Conjugating Hodge star. Defined as the unique map with
//     <alpha, beta>(x) = <vol, alpha ^(,) star_bar(beta)>(x)  for all alpha,
// where ^(,) contracts coefficients with Tr(a b*). The matrix of the map is
// obtained per bidegree by solving this relation over the full form basis,
// which pins every sign against the wedge/contraction conventions above.
// Maps (p,q) to (n-p, n-q); coefficients pass through untouched.
// ---------------------------------------------------------------------------

namespace detail {

struct StarTable {
    std::vector<unsigned> srcI, srcK, dstI, dstK;  // basis masks
    std::vector<cplx> map;                         // [l*dim + m]
    int dim = 0;
};

inline const StarTable& star_table(int n, int p, int q) {
    static std::mutex mtx;
    static std::map<std::tuple<int, int, int>, StarTable> cache;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find({n, p, q});
    if (it != cache.end()) return it->second;

    StarTable t;
    const auto srcI = subsets(n, p), srcK = subsets(n, q);
    const auto dstI = subsets(n, n - p), dstK = subsets(n, n - q);
    const int D = static_cast<int>(srcI.size() * srcK.size());
    t.dim = D;
    // flatten (I-major, K-minor) to match FormPQ component order
    for (auto i : srcI) for (auto k : srcK) { t.srcI.push_back(i); t.srcK.push_back(k); }
    for (auto i : dstI) for (auto k : dstK) { t.dstI.push_back(i); t.dstK.push_back(k); }

    // top form dz_1..dz_n ^ dzbar_1..dzbar_n = tau * vol
    cplx tau{1.0, 0.0};
    for (int i = 0; i < n; ++i) tau *= cplx{0.0, -2.0};
    if ((n * (n - 1) / 2) % 2) tau = -tau;

    const double basis_norm2 = std::pow(2.0, p + q);
    t.map.assign(static_cast<std::size_t>(D) * D, cplx{});

    for (int l = 0; l < D; ++l) {
        // unknowns x_m = Re c_m, y_m = Im c_m for gamma = sum_m c_m e'_m
        std::vector<cplx> A(static_cast<std::size_t>(2 * D) * (2 * D));
        std::vector<cplx> rhs(2 * D);
        for (int aix = 0; aix < D; ++aix) {
            for (int m = 0; m < D; ++m) {
                const int s = form_wedge_sign(t.srcI[aix], t.srcK[aix], t.dstI[m], t.dstK[m]);
                if (s == 0) continue;
                const cplx st = static_cast<double>(s) * tau;
                // alpha = e_a:   sum_m s Re(conj(c_m) tau) = norm2 delta_{al}
                A[(2 * aix) * (2 * D) + m] = st.real();
                A[(2 * aix) * (2 * D) + D + m] = st.imag();
                // alpha = i e_a: sum_m s Re(i conj(c_m) tau) = 0
                A[(2 * aix + 1) * (2 * D) + m] = -st.imag();
                A[(2 * aix + 1) * (2 * D) + D + m] = st.real();
            }
            rhs[2 * aix] = (aix == l) ? basis_norm2 : 0.0;
            rhs[2 * aix + 1] = 0.0;
        }
        solve_dense(A, rhs, 2 * D, "hodge star defining relation");
        for (int m = 0; m < D; ++m)
            t.map[static_cast<std::size_t>(l) * D + m] =
                cplx{rhs[m].real(), rhs[D + m].real()};
    }
    return cache.emplace(std::make_tuple(n, p, q), std::move(t)).first->second;
}

}  // namespace detail

inline FormPQ hodge_star_bar(const FormPQ& a) {
    const int n = a.geom().n;
    FormPQ out(a.geom(), a.rank(), n - a.p(), n - a.q());
    if (a.empty() || out.empty()) return out;
    const auto& t = detail::star_table(n, a.p(), a.q());
    for (int l = 0; l < t.dim; ++l) {
        const MatrixField& src = a.comp(t.srcI[l], t.srcK[l]);
        for (int m = 0; m < t.dim; ++m) {
            const cplx c = t.map[static_cast<std::size_t>(l) * t.dim + m];
            if (c == cplx{}) continue;
            MatrixField term = src;
            term *= c;
            out.comp(t.dstI[m], t.dstK[m]) += term;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Flat Dolbeault operators (trivial product connection).
// ---------------------------------------------------------------------------

inline FormPQ dbar_flat(const FormPQ& a) {
    FormPQ out(a.geom(), a.rank(), a.p(), a.q() + 1);
    if (a.empty() || out.empty()) return out;
    for (std::size_t ia = 0; ia < a.masksI().size(); ++ia)
        for (std::size_t ka = 0; ka < a.masksK().size(); ++ka) {
            const unsigned I = a.masksI()[ia], K = a.masksK()[ka];
            for (int k = 1; k <= a.geom().n; ++k) {
                const unsigned mk = 1u << (k - 1);
                if (K & mk) continue;
                int s = merge_sign(mk, K);
                if (a.p() % 2) s = -s;  // dzbar_k enters past the dz block
                MatrixField t =
                    a.comp_at(static_cast<int>(ia), static_cast<int>(ka)).wirtinger(k, true);
                t *= cplx{static_cast<double>(s), 0.0};
                out.comp(I, K | mk) += t;
            }
        }
    return out;
}

inline FormPQ partial_flat(const FormPQ& a) {
    FormPQ out(a.geom(), a.rank(), a.p() + 1, a.q());
    if (a.empty() || out.empty()) return out;
    for (std::size_t ia = 0; ia < a.masksI().size(); ++ia)
        for (std::size_t ka = 0; ka < a.masksK().size(); ++ka) {
            const unsigned I = a.masksI()[ia], K = a.masksK()[ka];
            for (int k = 1; k <= a.geom().n; ++k) {
                const unsigned mk = 1u << (k - 1);
                if (I & mk) continue;
                const int s = merge_sign(mk, I);
                MatrixField t =
                    a.comp_at(static_cast<int>(ia), static_cast<int>(ka)).wirtinger(k, false);
                t *= cplx{static_cast<double>(s), 0.0};
                out.comp(I | mk, K) += t;
            }
        }
    return out;
}

// ---------------------------------------------------------------------------
// Inner products. Distinct bidegrees are orthogonal by convention; the
// pointwise metric weights each canonical component by 2^{p+q}.
// ---------------------------------------------------------------------------

inline double l2_inner(const FormPQ& a, const FormPQ& b) {
    if (!a.geom().same_grid(b.geom()) || a.rank() != b.rank())
        throw std::invalid_argument("inner product of incompatible forms");
    if (a.p() != b.p() || a.q() != b.q()) return 0.0;
    const double w = std::pow(2.0, a.p() + a.q());
    double s = 0.0;
    for (int i = 0; i < a.ncomp(); ++i)
        s += l2_inner(a.comp_at(i / static_cast<int>(a.masksK().size()),
                                i % static_cast<int>(a.masksK().size())),
                      b.comp_at(i / static_cast<int>(b.masksK().size()),
                                i % static_cast<int>(b.masksK().size())));
    return w * s;
}

inline double l2_norm(const FormPQ& a) { return std::sqrt(l2_inner(a, a)); }

/// Pointwise inner product <a,b>(x) as a real grid function (plain products;
/// this is metric evaluation, not field algebra).
inline std::vector<double> pointwise_inner(const FormPQ& a, const FormPQ& b) {
    if (!a.geom().same_grid(b.geom()) || a.rank() != b.rank())
        throw std::invalid_argument("inner product of incompatible forms");
    std::vector<double> out(a.geom().points(), 0.0);
    if (a.p() != b.p() || a.q() != b.q()) return out;
    const double w = std::pow(2.0, a.p() + a.q());
    for (std::size_t ia = 0; ia < a.masksI().size(); ++ia)
        for (std::size_t ka = 0; ka < a.masksK().size(); ++ka) {
            const MatrixField& ca = a.comp_at(static_cast<int>(ia), static_cast<int>(ka));
            const MatrixField& cb = b.comp_at(static_cast<int>(ia), static_cast<int>(ka));
            for (int u = 0; u < a.rank(); ++u)
                for (int v = 0; v < a.rank(); ++v) {
                    const cplx* pa = ca.plane(u, v);
                    const cplx* pb = cb.plane(u, v);
                    for (std::size_t x = 0; x < out.size(); ++x)
                        out[x] += w * (pa[x].real() * pb[x].real() +
                                       pa[x].imag() * pb[x].imag());
                }
        }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation on complexified tangent vectors, used by the frame-sum formulas.
// A vector is stored by its coefficients on (d/dz_k, d/dzbar_k).
// ---------------------------------------------------------------------------

struct TangentVector {
    std::array<cplx, 2> z{};   // coefficients on d/dz_k
    std::array<cplx, 2> zb{};  // coefficients on d/dzbar_k
};

/// The 2n real unitary frame vectors (d/dx_1, d/dy_1, ..., ordered x-first
/// per complex axis then the J-rotated ones appended): e_j for j < n is
/// d/dx_{j+1}, e_{n+j} = J e_j = d/dy_{j+1}.
inline std::vector<TangentVector> real_frame(const TorusGeometry& g) {
    std::vector<TangentVector> frame(2 * g.n);
    for (int k = 0; k < g.n; ++k) {
        frame[k].z[k] = {1.0, 0.0};        // dz(d/dx) = 1
        frame[k].zb[k] = {1.0, 0.0};       // dzbar(d/dx) = 1
        frame[g.n + k].z[k] = {0.0, 1.0};  // dz(d/dy) = i
        frame[g.n + k].zb[k] = {0.0, -1.0};
    }
    return frame;
}

inline TangentVector holo_vector(int k) {  // d/dz_k, 1-based
    TangentVector v;
    v.z[k - 1] = {1.0, 0.0};
    return v;
}
inline TangentVector antiholo_vector(int k) {  // d/dzbar_k, 1-based
    TangentVector v;
    v.zb[k - 1] = {1.0, 0.0};
    return v;
}

namespace detail {

inline cplx one_form_on(const TorusGeometry& g, bool bar, int k, const TangentVector& v) {
    (void)g;
    return bar ? v.zb[k - 1] : v.z[k - 1];
}

/// Value of the scalar basis form dz_I ^ dzbar_K on (v_1..v_{p+q})
/// (determinant convention, no 1/k! factor).
inline cplx basis_on_vectors(const TorusGeometry& g, unsigned I, unsigned K,
                             const std::vector<TangentVector>& v) {
    // collect the factor list
    std::vector<std::pair<bool, int>> factors;
    for (int k = 1; k <= g.n; ++k)
        if (I & (1u << (k - 1))) factors.emplace_back(false, k);
    for (int k = 1; k <= g.n; ++k)
        if (K & (1u << (k - 1))) factors.emplace_back(true, k);
    const int d = static_cast<int>(factors.size());
    if (d != static_cast<int>(v.size()))
        throw std::invalid_argument("wrong number of vectors for form degree");
    if (d == 0) return {1.0, 0.0};
    // small determinant by expansion over permutations (d <= 4)
    std::array<int, 4> perm{};
    for (int i = 0; i < d; ++i) perm[i] = i;
    cplx det{};
    do {
        int sign = 1;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j)
                if (perm[i] > perm[j]) sign = -sign;
        cplx term{static_cast<double>(sign), 0.0};
        for (int i = 0; i < d; ++i)
            term *= one_form_on(g, factors[i].first, factors[i].second, v[perm[i]]);
        det += term;
    } while (std::next_permutation(perm.begin(), perm.begin() + d));
    return det;
}

}  // namespace detail

/// Evaluate an End(E)-valued form on tangent vectors pointwise.
inline MatrixField eval_form(const FormPQ& a, const std::vector<TangentVector>& v) {
    MatrixField out(a.geom(), a.rank());
    for (std::size_t ia = 0; ia < a.masksI().size(); ++ia)
        for (std::size_t ka = 0; ka < a.masksK().size(); ++ka) {
            const cplx c = detail::basis_on_vectors(
                a.geom(), a.masksI()[ia], a.masksK()[ka], v);
            if (c == cplx{}) continue;
            MatrixField t = a.comp_at(static_cast<int>(ia), static_cast<int>(ka));
            t *= c;
            out += t;
        }
    return out;
}

/// Band-limited random form with independent Gaussian components.
inline FormPQ random_form(const TorusGeometry& g, int r, int p, int q, int band,
                          double amplitude, Rng& rng) {
    FormPQ f(g, r, p, q);
    for (std::size_t ia = 0; ia < f.masksI().size(); ++ia)
        for (std::size_t ka = 0; ka < f.masksK().size(); ++ka)
            f.comp_at(static_cast<int>(ia), static_cast<int>(ka)) =
                random_field(g, r, band, amplitude, rng);
    return f;
}

}  // namespace ymbar

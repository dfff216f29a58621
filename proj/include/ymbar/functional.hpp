#pragma once

#include "ymbar/calculus.hpp"

namespace ymbar {

// ---------------------------------------------------------------------------
// The bar-energy functional 1/2 ||F02||^2, its L2 gradient dbar*_A F02, the
// classification predicates, the affine integrability operator, and the
// plane-wave symbol probes.
// ---------------------------------------------------------------------------

inline double ymbar_energy(const Curvature& F) { return 0.5 * l2_inner(F.f02, F.f02); }

inline double ymbar_energy(const Connection& A) { return ymbar_energy(curvature(A)); }

/// Euler-Lagrange operator of the bar-energy: the exact discrete adjoint
/// applied to the (0,2)-curvature. Vanishes exactly at critical points.
inline FormPQ ymbar_gradient(const Connection& A, const Curvature& F) {
    return dbar_star(A, F.f02);
}

inline FormPQ ymbar_gradient(const Connection& A) {
    return dbar_star(A, curvature_f02(A));
}

enum class ConnectionClass { Holomorphic, AlmostHolomorphic, YangMillsBar, None };

inline const char* to_string(ConnectionClass c) {
    switch (c) {
        case ConnectionClass::Holomorphic: return "holomorphic";
        case ConnectionClass::AlmostHolomorphic: return "almost_holomorphic";
        case ConnectionClass::YangMillsBar: return "yangmills_bar";
        case ConnectionClass::None: return "none";
    }
    return "?";
}

/// Strongest matching label. Residuals are measured relative to the full
/// curvature norm (with one frequency unit 2pi/L per derivative so the
/// thresholds are resolution-independent):
///   holomorphic:        ||F02|| <= tol * ||F||
///   almost holomorphic: ||partial_A F02|| <= tol * ||F|| * (2pi/L)
///   bar-critical:       ||dbar*_A F02|| <= tol * ||F|| * (2pi/L)
inline ConnectionClass classify(const Connection& A, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("classification tolerance must be positive");
    const Curvature F = curvature(A);
    const double scale = F.norm();
    if (scale == 0.0) return ConnectionClass::Holomorphic;
    if (l2_norm(F.f02) <= tol * scale) return ConnectionClass::Holomorphic;
    const double freq = 2.0 * kPi / A.geom().L;
    if (l2_norm(partial(A, F.f02)) <= tol * scale * freq)
        return ConnectionClass::AlmostHolomorphic;
    if (l2_norm(dbar_star(A, F.f02)) <= tol * scale * freq)
        return ConnectionClass::YangMillsBar;
    return ConnectionClass::None;
}

// ---------------------------------------------------------------------------
// Affine integrability operator
//   P_A(phi) = dbar*_A phi - (1/2) Lambda Lambda (F02 ^[,] F20),
// affine in phi, annihilating the bar-energy gradient. The wedge uses the
// Lie-bracket coefficient rule, so the constant term dies in rank 1. The
// constant 1/2 is pinned by the pointwise pairing identity
//   <[theta, F02], F02> = -(1/2) <theta, Lambda Lambda F02 ^ F20>,
// which the verification suite checks to roundoff.
// ---------------------------------------------------------------------------

/// The phi-independent term of P (a (0,0)-form).
inline FormPQ integrability_const(const Curvature& F) {
    FormPQ c = lambda(lambda(detail::wedge_impl(F.f02, F.f20, CoeffRule::Bracket)));
    c *= cplx{-0.5, 0.0};
    return c;
}

inline FormPQ integrability_P(const Connection& A, const FormPQ& phi) {
    if (phi.p() != 0 || phi.q() != 1)
        throw std::invalid_argument("integrability operator expects a (0,1)-form");
    if (!(phi.geom() == A.geom()) || phi.rank() != A.rank())
        throw std::invalid_argument("integrability operand mismatch");
    return dbar_star(A, phi) + integrability_const(curvature(A));
}

// ---------------------------------------------------------------------------
// Plane-wave symbol probes. The gradient map and the linear part of P are
// linearized by centered differences along h = e^{i m (2pi/L) x_axis} sum_k
// alpha_k dzbar_k and compared, after frequency scaling, with their leading
// multipliers: the gradient linearization (scaled by 2/mt^2, mt = 2pi m/L)
// annihilates the axis-aligned dzbar component and passes the others
// through; the P linearization (scaled by 1/mt) multiplies by -i alpha_axis
// for the e^{+i m x} probe. Deviations decay like 1/m as the wave outruns
// the connection's own frequencies.
// ---------------------------------------------------------------------------

struct SymbolDeviation {
    int freq = 0;
    double gradient_dev = 0.0;
    double p_dev = 0.0;
};

namespace detail {

inline MatrixField plane_wave(const TorusGeometry& g, int axis, int m) {
    MatrixField w = MatrixField::identity(g, 1);
    // fill exp(i m 2pi x_axis / L) pointwise
    std::array<int, 4> idx{};
    const int nd = g.axes();
    cplx* dst = w.plane(0, 0);
    for (std::size_t flat = 0; flat < g.points(); ++flat) {
        std::size_t rem = flat;
        for (int a = nd - 1; a >= 0; --a) {
            idx[a] = static_cast<int>(rem % g.ext[a]);
            rem /= g.ext[a];
        }
        const double x = g.L * idx[axis] / g.ext[axis];
        dst[flat] = std::exp(kI * (2.0 * kPi * m / g.L) * x);
    }
    std::array<int, 4> bd{};
    bd[axis] = m;
    w.set_band(bd);
    return w;
}

}  // namespace detail

/// Probe the symbol structure at one frequency. `axis` is a real grid axis
/// and must be an x-axis (even index); the associated complex axis is
/// axis/2 + 1.
inline SymbolDeviation symbol_probe(const Connection& A, int axis, int m, Rng& rng) {
    const auto& g = A.geom();
    if (axis < 0 || axis >= g.axes() || axis % 2 != 0)
        throw std::invalid_argument("symbol probe expects an x-type real axis");
    if (m <= 0 || m >= g.ext[axis] / 2)
        throw std::invalid_argument("probe frequency at or above Nyquist");
    const int k0 = axis / 2 + 1;
    const double mt = 2.0 * kPi * m / g.L;
    const int r = A.rank();

    // random constant matrix amplitudes alpha_k
    std::vector<MatrixField> alpha;
    for (int k = 1; k <= g.n; ++k) {
        std::vector<cplx> mat(static_cast<std::size_t>(r) * r);
        for (auto& v : mat) v = rng.cgauss();
        alpha.push_back(MatrixField::constant(g, r, mat));
    }
    const MatrixField wave = detail::plane_wave(g, axis, m);
    FormPQ h(g, r, 0, 1);
    for (int k = 1; k <= g.n; ++k) {
        MatrixField c = alpha[static_cast<std::size_t>(k - 1)];
        for (int u = 0; u < r; ++u)
            for (int v = 0; v < r; ++v) {
                cplx* dst = c.plane(u, v);
                const cplx* w = wave.plane(0, 0);
                for (std::size_t i = 0; i < g.points(); ++i) dst[i] *= w[i];
            }
        c.set_band(wave.band());
        h.comp(0u, 1u << (k - 1)) = c;
    }

    const double t = 1e-6;
    auto grad_at = [&](double s) {
        FormPQ a = A.a01();
        a += cplx{s, 0.0} * h;
        return ymbar_gradient(A.with_a01(std::move(a)));
    };
    FormPQ dgrad = grad_at(t) - grad_at(-t);
    dgrad *= cplx{1.0 / (2.0 * t), 0.0};
    dgrad *= cplx{2.0 / (mt * mt), 0.0};

    FormPQ pred(g, r, 0, 1);
    for (int k = 1; k <= g.n; ++k) {
        if (k == k0) continue;
        pred.comp(0u, 1u << (k - 1)) = h.comp(0u, 1u << (k - 1));
    }
    double pred_norm = l2_norm(pred);
    if (pred_norm == 0.0) pred_norm = l2_norm(h);  // n = 1: pure annihilation
    SymbolDeviation out;
    out.freq = m;
    out.gradient_dev = l2_norm(dgrad - pred) / pred_norm;

    // linear part of P by the same centered difference (P is affine in phi,
    // so this reproduces dbar*_A h exactly up to roundoff)
    Rng phirng(derive_seed(rng.next_u64(), 0x50484921ULL));
    const FormPQ phi = random_form(g, r, 0, 1, 1, 0.1, phirng);
    auto p_at = [&](double s) {
        FormPQ x = phi;
        x += cplx{s, 0.0} * h;
        return integrability_P(A, x);
    };
    FormPQ dp = p_at(t) - p_at(-t);
    dp *= cplx{1.0 / (2.0 * t), 0.0};
    dp *= cplx{1.0 / mt, 0.0};

    FormPQ pred_p(g, r, 0, 0);
    {
        MatrixField c = alpha[static_cast<std::size_t>(k0 - 1)];
        for (int u = 0; u < r; ++u)
            for (int v = 0; v < r; ++v) {
                cplx* dst = c.plane(u, v);
                const cplx* w = wave.plane(0, 0);
                for (std::size_t i = 0; i < g.points(); ++i) dst[i] *= -kI * w[i];
            }
        c.set_band(wave.band());
        pred_p.comp(0u, 0u) = c;
    }
    out.p_dev = l2_norm(dp - pred_p) / l2_norm(pred_p);
    return out;
}

/// Sweep a list of increasing frequencies; the check passes when both
/// deviation sequences decrease monotonically.
inline OperatorReport symbol_check(const Connection& A, int axis,
                                   const std::vector<int>& freqs, Rng& rng,
                                   double final_tol = 0.5) {
    if (freqs.empty()) throw std::invalid_argument("no probe frequencies");
    for (std::size_t i = 1; i < freqs.size(); ++i)
        if (freqs[i] <= freqs[i - 1])
            throw std::invalid_argument("probe frequencies must increase");
    std::vector<SymbolDeviation> devs;
    for (int m : freqs) devs.push_back(symbol_probe(A, axis, m, rng));
    bool monotone = true;
    for (std::size_t i = 1; i < devs.size(); ++i)
        if (devs[i].gradient_dev >= devs[i - 1].gradient_dev ||
            devs[i].p_dev >= devs[i - 1].p_dev)
            monotone = false;
    std::string ctx = "devs:";
    for (const auto& d : devs)
        ctx += " m=" + std::to_string(d.freq) + " grad=" + std::to_string(d.gradient_dev) +
               " p=" + std::to_string(d.p_dev) + ";";
    const double worst_final = std::max(devs.back().gradient_dev, devs.back().p_dev);
    return OperatorReport::make("symbol-sweep", monotone ? worst_final : 1e9, final_tol,
                                ctx);
}

}  // namespace ymbar

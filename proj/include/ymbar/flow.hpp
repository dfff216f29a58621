#pragma once

#include <limits>

#include "ymbar/functional.hpp"

namespace ymbar {

// ---------------------------------------------------------------------------
// Explicit integration of the negative bar-energy gradient flow
//     d a01 / dt = - dbar*_A F02_A
// with classical RK4 stepping and energy-rejection control. The continuum
// flow is only weakly parabolic (degenerate along the complexified gauge
// directions), so no gauge-fixing term is added; steps that raise the energy
// are rejected and the step size halved. Observed stiffness is data.
// ---------------------------------------------------------------------------

struct FlowConfig {
    double dt0 = 0.0;          // initial step; <= 0 picks safety*(L/(pi N))^2
    double safety = 0.2;       // multiplier for the auto step
    long max_steps = 200;      // attempted steps
    double stop_grad = 1e-10;  // gradient-norm stopping threshold
    double stop_energy = 0.0;  // energy floor
    long snapshot_every = 0;   // accepted steps between snapshots; 0 = off

    /// Resolve the automatic step size and validate.
    FlowConfig resolved(const TorusGeometry& g) const {
        FlowConfig c = *this;
        if (!(c.safety > 0.0) || c.safety > 1.0)
            throw ConfigError("flow safety factor must lie in (0,1]");
        if (c.dt0 <= 0.0) {
            const double h = g.L / (kPi * g.N);
            c.dt0 = c.safety * h * h;
        }
        if (!(c.dt0 > 0.0)) throw ConfigError("flow step size must be positive");
        if (c.max_steps < 0) throw ConfigError("flow step budget must be nonnegative");
        if (c.stop_grad < 0.0 || c.stop_energy < 0.0)
            throw ConfigError("flow stopping thresholds must be nonnegative");
        if (c.snapshot_every < 0) throw ConfigError("snapshot interval must be nonnegative");
        return c;
    }
};

enum class StopReason { GradBelowThreshold, EnergyFloor, MaxSteps, DtUnderflow };

inline const char* to_string(StopReason r) {
    switch (r) {
        case StopReason::GradBelowThreshold: return "gradient below threshold";
        case StopReason::EnergyFloor: return "energy floor reached";
        case StopReason::MaxSteps: return "step budget exhausted";
        case StopReason::DtUnderflow: return "step size underflow";
    }
    return "?";
}

struct TraceRow {
    long step = 0;
    double t = 0.0;
    double dt = 0.0;
    double energy = 0.0;
    double grad_norm = 0.0;
    double f02_norm = 0.0;
    double f11_norm = 0.0;
    bool accepted = true;
};

struct FlowState {
    double energy = 0.0;
    double grad_norm = 0.0;
    double f02_norm = 0.0;
    double f11_norm = 0.0;
    bool finite = true;
    FormPQ gradient;  // reusable as the first RK stage
};

inline FlowState flow_metrics(const Connection& A) {
    FlowState s;
    s.finite = A.is_finite();
    if (!s.finite) {
        s.energy = s.grad_norm = s.f02_norm = s.f11_norm =
            std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    const Curvature F = curvature(A);
    s.energy = ymbar_energy(F);
    s.f02_norm = l2_norm(F.f02);
    s.f11_norm = l2_norm(F.f11);
    s.gradient = ymbar_gradient(A, F);
    s.grad_norm = l2_norm(s.gradient);
    return s;
}

struct FlowTrace {
    std::vector<TraceRow> rows;
    StopReason reason = StopReason::MaxSteps;
    std::vector<std::pair<long, Connection>> snapshots;  // (accepted step, state)
};

/// One classical RK4 step of the (0,1)-potential under the negative gradient
/// field. Deterministic; non-finite output signals blow-up to the caller.
inline Connection flow_step(const Connection& A, double dt,
                            const FormPQ* grad_at_a = nullptr) {
    if (!(dt > 0.0)) throw std::invalid_argument("flow step size must be positive");
    auto field = [&](const FormPQ& a) {
        return -ymbar_gradient(A.with_a01(a));
    };
    const FormPQ& a0 = A.a01();
    const FormPQ k1 = grad_at_a ? -(*grad_at_a) : field(a0);
    const FormPQ k2 = field(a0 + cplx{0.5 * dt, 0.0} * k1);
    const FormPQ k3 = field(a0 + cplx{0.5 * dt, 0.0} * k2);
    const FormPQ k4 = field(a0 + cplx{dt, 0.0} * k3);
    FormPQ a = a0;
    a += cplx{dt / 6.0, 0.0} * (k1 + cplx{2.0, 0.0} * k2 + cplx{2.0, 0.0} * k3 + k4);
    return A.with_a01(std::move(a));
}

/// Drive the flow with energy-rejection step control. A candidate step that
/// is non-finite or raises the energy is rejected and dt halves; dt grows by
/// 1.25x after 10 consecutive accepts, capped at dt0. Rejected attempts are
/// recorded (with the candidate's metrics), never silently retried.
inline FlowTrace flow_run(const Connection& A0, const FlowConfig& cfg_in) {
    const FlowConfig cfg = cfg_in.resolved(A0.geom());
    FlowTrace trace;

    Connection state = A0;
    FlowState cur = flow_metrics(state);
    if (!cur.finite) throw std::invalid_argument("initial flow state is not finite");
    double t = 0.0, dt = cfg.dt0;
    trace.rows.push_back({0, 0.0, 0.0, cur.energy, cur.grad_norm, cur.f02_norm,
                          cur.f11_norm, true});

    long accepted = 0, consecutive = 0;
    const double dt_floor = cfg.dt0 * std::pow(2.0, -20);

    for (long step = 1;; ++step) {
        if (cur.grad_norm <= cfg.stop_grad) {
            trace.reason = StopReason::GradBelowThreshold;
            break;
        }
        if (cur.energy <= cfg.stop_energy) {
            trace.reason = StopReason::EnergyFloor;
            break;
        }
        if (step > cfg.max_steps) {
            trace.reason = StopReason::MaxSteps;
            break;
        }

        Connection candidate = flow_step(state, dt, &cur.gradient);
        FlowState next = flow_metrics(candidate);
        const bool ok = next.finite && next.energy <= cur.energy;
        trace.rows.push_back({step, ok ? t + dt : t, dt, next.energy, next.grad_norm,
                              next.f02_norm, next.f11_norm, ok});
        if (ok) {
            state = std::move(candidate);
            cur = std::move(next);
            t += dt;
            ++accepted;
            if (++consecutive >= 10) {
                dt = std::min(dt * 1.25, cfg.dt0);
                consecutive = 0;
            }
            if (cfg.snapshot_every > 0 && accepted % cfg.snapshot_every == 0)
                trace.snapshots.emplace_back(accepted, state);
        } else {
            consecutive = 0;
            dt *= 0.5;
            if (dt < dt_floor) {
                trace.reason = StopReason::DtUnderflow;
                break;
            }
        }
    }
    trace.snapshots.emplace_back(accepted, std::move(state));
    return trace;
}

/// Final state of a run (the last snapshot is always the final state).
inline const Connection& flow_final(const FlowTrace& t) {
    return t.snapshots.back().second;
}

}  // namespace ymbar

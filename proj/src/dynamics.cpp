#include "vplab/dynamics.hpp"

#include <cmath>
#include <sstream>

namespace vplab {

EmpiricalMeasure EmpiricalMeasure::from_state(const PhaseState& s) { return from_state(s, 1.0); }

EmpiricalMeasure EmpiricalMeasure::from_state(const PhaseState& s, double q_scale) {
    EmpiricalMeasure m;
    m.points.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        m.points[i] = {q_scale * s.q[i].x, q_scale * s.q[i].y, q_scale * s.q[i].z, s.p[i].x, s.p[i].y, s.p[i].z};
    }
    return m;
}

void check_finite(const PhaseState& state, std::size_t step, const char* context) {
    for (std::size_t i = 0; i < state.size(); ++i) {
        for (int c = 0; c < 6; ++c) {
            const double v = c < 3 ? state.q[i][c] : state.p[i][c - 3];
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << context << ": non-finite " << (c < 3 ? "position" : "momentum") << " coordinate " << c % 3
                    << " of particle " << i << " at step " << step;
                throw NumericalError(msg.str(), i, c, step);
            }
        }
    }
}

std::vector<Vec3> micro_force(const KernelSpec& spec, const PhaseState& state, const Execution& exec) {
    if (state.size() != spec.n()) {
        std::ostringstream msg;
        msg << "micro_force: state has " << state.size() << " particles, kernel expects " << spec.n();
        throw DomainError(msg.str());
    }
    const SourceCloud sources(state.q);
    std::vector<Vec3> out(state.size());
    accumulate_field(spec, sources, state.q, 1.0 / static_cast<double>(spec.n()), out, exec);
    return out;
}

namespace {

auto micro_force_fn(const KernelSpec& spec, const Execution& exec) {
    return [&spec, &exec](std::span<const Vec3> q, std::size_t, std::span<Vec3> out) {
        const SourceCloud sources(q);
        accumulate_field(spec, sources, q, 1.0 / static_cast<double>(spec.n()), out, exec);
    };
}

void require_step(double dt, const char* context) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError(std::string(context) + ": dt must be positive");
}

}  // namespace

PhaseState micro_step(const KernelSpec& spec, const PhaseState& state, double dt, const Execution& exec) {
    require_step(dt, "micro_step");
    if (state.size() != spec.n()) throw DomainError("micro_step: state size does not match kernel n");
    check_finite(state, 0, "micro_step");
    PhaseState next = state;
    verlet_integrate(next, dt, 1, micro_force_fn(spec, exec), [](std::size_t, const PhaseState&) {}, "micro_step");
    return next;
}

StepPlan plan_steps(double t0, double t_final, double dt, std::span<const double> snapshot_times) {
    if (!(t_final >= t0)) throw DomainError("evolve: t_final precedes the state time");
    const double span = t_final - t0;
    StepPlan plan;
    plan.total_steps = static_cast<std::size_t>(std::llround(span / dt));
    const double slack = 1e-9 * std::max(1.0, std::abs(t_final));
    for (double ts : snapshot_times) {
        if (ts < t0 - slack || ts > t_final + slack) {
            std::ostringstream msg;
            msg << "evolve: snapshot time " << ts << " outside [" << t0 << ", " << t_final << "]";
            throw DomainError(msg.str());
        }
        const auto k = static_cast<std::size_t>(std::llround((ts - t0) / dt));
        plan.snapshot_steps.push_back(std::min(k, plan.total_steps));
    }
    if (plan.snapshot_steps.empty()) plan.snapshot_steps.push_back(plan.total_steps);
    return plan;
}

std::vector<PhaseState> evolve(const KernelSpec& spec, const PhaseState& state, double t_final, double dt,
                               std::span<const double> snapshot_times, const Execution& exec) {
    require_step(dt, "evolve");
    if (state.size() != spec.n()) throw DomainError("evolve: state size does not match kernel n");
    check_finite(state, 0, "evolve");
    const StepPlan plan = plan_steps(state.t, t_final, dt, snapshot_times);

    std::vector<PhaseState> snapshots(plan.snapshot_steps.size());
    PhaseState work = state;
    auto capture = [&](std::size_t step, const PhaseState& s) {
        for (std::size_t k = 0; k < plan.snapshot_steps.size(); ++k) {
            if (plan.snapshot_steps[k] == step) snapshots[k] = s;
        }
    };
    verlet_integrate(work, dt, plan.total_steps, micro_force_fn(spec, exec), capture, "evolve");
    return snapshots;
}

double total_energy(const KernelSpec& spec, const PhaseState& state) {
    const std::size_t n = state.size();
    const double big_n = static_cast<double>(spec.n());
    double kinetic = 0.0;
    for (const Vec3& p : state.p) kinetic += 0.5 * dot(p, p);
    double pair = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pair += potential_eval(spec, norm(state.q[i] - state.q[j]));
    }
    // sum over i != j counts each unordered pair twice.
    return kinetic / big_n + spec.sigma() * pair / (big_n * big_n);
}

Vec3 total_momentum(const PhaseState& state) {
    Vec3 sum{};
    for (const Vec3& p : state.p) sum += p;
    return sum;
}

}  // namespace vplab

#pragma once

#include <span>
#include <vector>

#include "vplab/kernels.hpp"
#include "vplab/parallel.hpp"
#include "vplab/types.hpp"

namespace vplab {

/// (K(Z))_i = (1/N) sum_j k(q_i - q_j) with N = spec.n().
std::vector<Vec3> micro_force(const KernelSpec& spec, const PhaseState& state, const Execution& exec = {});

/// One velocity-Verlet step of the N-particle system.
PhaseState micro_step(const KernelSpec& spec, const PhaseState& state, double dt, const Execution& exec = {});

/// Maps requested snapshot times onto the step grid t0 + k dt (nearest step).
/// Returns the step index of every snapshot and the total step count.
struct StepPlan {
    std::size_t total_steps = 0;
    std::vector<std::size_t> snapshot_steps;
};
StepPlan plan_steps(double t0, double t_final, double dt, std::span<const double> snapshot_times);

/// Integrates to t_final and returns the states at the requested times. An
/// empty `snapshot_times` returns only the final state.
std::vector<PhaseState> evolve(const KernelSpec& spec, const PhaseState& state, double t_final, double dt,
                               std::span<const double> snapshot_times, const Execution& exec = {});

/// Per-particle energy sum p^2/(2N) + sigma/(2N^2) sum_{i != j} V(|q_i - q_j|).
double total_energy(const KernelSpec& spec, const PhaseState& state);

Vec3 total_momentum(const PhaseState& state);

/// Throws NumericalError naming the first non-finite coordinate.
void check_finite(const PhaseState& state, std::size_t step, const char* context);

/// Velocity-Verlet driver shared by the microscopic, reference and tracer
/// integrations. `force(positions, step, out)` returns the acceleration at
/// time t0 + step*dt. The force at the end of a step is reused as the start
/// force of the next one.
template <class ForceFn, class SnapshotFn>
void verlet_integrate(PhaseState& state, double dt, std::size_t steps, ForceFn&& force, SnapshotFn&& on_step,
                      const char* context) {
    const std::size_t n = state.size();
    const double t0 = state.t;
    std::vector<Vec3> acc(n);
    force(std::span<const Vec3>(state.q), std::size_t{0}, std::span<Vec3>(acc));
    on_step(std::size_t{0}, state);
    const double half = 0.5 * dt;
    for (std::size_t k = 0; k < steps; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            state.p[i] += half * acc[i];
            state.q[i] += dt * state.p[i];
        }
        check_finite(state, k + 1, context);
        force(std::span<const Vec3>(state.q), k + 1, std::span<Vec3>(acc));
        for (std::size_t i = 0; i < n; ++i) state.p[i] += half * acc[i];
        state.t = t0 + static_cast<double>(k + 1) * dt;
        check_finite(state, k + 1, context);
        on_step(k + 1, state);
    }
}

}  // namespace vplab

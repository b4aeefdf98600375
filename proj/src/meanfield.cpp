#include "vplab/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vplab/dynamics.hpp"

namespace vplab {

ReferenceEnsemble draw_reference_ensemble(const InitialDistribution& dist, std::size_t m, const StreamKey& key) {
    return {sample(dist, m, key), key};
}

std::vector<Vec3> meanfield_force(const KernelSpec& spec, std::span<const Vec3> sources,
                                  std::span<const Vec3> targets, const Execution& exec) {
    if (sources.empty()) throw DomainError("meanfield_force: empty ensemble");
    const SourceCloud cloud(sources);
    std::vector<Vec3> out(targets.size());
    accumulate_field(spec, cloud, targets, 1.0 / static_cast<double>(sources.size()), out, exec);
    return out;
}

std::vector<Vec3> meanfield_force(const KernelSpec& spec, const ReferenceEnsemble& ensemble,
                                  std::span<const Vec3> targets, const Execution& exec) {
    return meanfield_force(spec, ensemble.state.q, targets, exec);
}

ReferenceEnsemble vlasov_evolve(const KernelSpec& spec, const ReferenceEnsemble& ensemble, double t_final, double dt,
                                const Execution& exec) {
    EnsembleTimeline timeline(spec, ensemble, t_final, dt, {}, exec);
    ReferenceEnsemble out{timeline.state(timeline.steps()), ensemble.lineage};
    return out;
}

EnsembleTimeline::EnsembleTimeline(const KernelSpec& spec, const ReferenceEnsemble& initial, double t_final,
                                   double dt, std::span<const std::size_t> keep_steps, const Execution& exec)
    : t0_(initial.state.t), dt_(dt), lineage_(initial.lineage) {
    if (!(dt > 0.0)) throw DomainError("vlasov_evolve: dt must be positive");
    if (initial.size() == 0) throw DomainError("vlasov_evolve: empty ensemble");
    check_finite(initial.state, 0, "vlasov_evolve");
    const StepPlan plan = plan_steps(t0_, t_final, dt, {});
    positions_.reserve(plan.total_steps + 1);

    const double weight = 1.0 / static_cast<double>(initial.size());
    auto force = [&](std::span<const Vec3> q, std::size_t, std::span<Vec3> out) {
        positions_.emplace_back(q);
        accumulate_field(spec, positions_.back(), q, weight, out, exec);
    };
    auto keep = [&](std::size_t step, const PhaseState& s) {
        const bool wanted = step == plan.total_steps ||
                            std::find(keep_steps.begin(), keep_steps.end(), step) != keep_steps.end();
        if (wanted) kept_.emplace_back(step, s);
    };
    PhaseState work = initial.state;
    verlet_integrate(work, dt, plan.total_steps, force, keep, "vlasov_evolve");
}

bool EnsembleTimeline::has_state(std::size_t step) const {
    return std::any_of(kept_.begin(), kept_.end(), [step](const auto& e) { return e.first == step; });
}

const PhaseState& EnsembleTimeline::state(std::size_t step) const {
    for (const auto& [s, st] : kept_) {
        if (s == step) return st;
    }
    throw DomainError("EnsembleTimeline: state at step " + std::to_string(step) + " was not kept");
}

std::size_t EnsembleTimeline::step_of(double t) const {
    return static_cast<std::size_t>(std::llround((t - t0_) / dt_));
}

std::vector<PhaseState> meanfield_flow(const KernelSpec& spec, const EnsembleTimeline& timeline, const PhaseState& z0,
                                       double dt, double t_final, std::span<const double> snapshot_times,
                                       const Execution& exec) {
    if (std::abs(dt - timeline.dt()) > 1e-12 * timeline.dt()) {
        std::ostringstream msg;
        msg << "meanfield_flow: dt " << dt << " does not match the ensemble timeline dt " << timeline.dt();
        throw ConfigError(msg.str());
    }
    const double offset = (z0.t - timeline.t0()) / dt;
    if (std::abs(offset - std::round(offset)) > 1e-9 || offset < -1e-9) {
        throw ConfigError("meanfield_flow: tracer start time is not on the timeline grid");
    }
    const std::size_t first = static_cast<std::size_t>(std::llround(offset));
    const StepPlan plan = plan_steps(z0.t, t_final, dt, snapshot_times);
    if (first + plan.total_steps > timeline.steps()) {
        std::ostringstream msg;
        msg << "meanfield_flow: timeline covers [" << timeline.t0() << ", " << timeline.t_final()
            << "], tracers need up to " << t_final;
        throw ConfigError(msg.str());
    }
    check_finite(z0, 0, "meanfield_flow");

    const double weight = 1.0 / static_cast<double>(timeline.members());
    auto force = [&](std::span<const Vec3> q, std::size_t step, std::span<Vec3> out) {
        accumulate_field(spec, timeline.positions(first + step), q, weight, out, exec);
    };
    std::vector<PhaseState> snapshots(plan.snapshot_steps.size());
    auto capture = [&](std::size_t step, const PhaseState& s) {
        for (std::size_t k = 0; k < plan.snapshot_steps.size(); ++k) {
            if (plan.snapshot_steps[k] == step) snapshots[k] = s;
        }
    };
    PhaseState work = z0;
    verlet_integrate(work, dt, plan.total_steps, force, capture, "meanfield_flow");
    return snapshots;
}

Vec3 DensityGrid::center(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return {origin.x + (static_cast<double>(ix) + 0.5) * h, origin.y + (static_cast<double>(iy) + 0.5) * h,
            origin.z + (static_cast<double>(iz) + 0.5) * h};
}

double DensityGrid::total_mass() const {
    double s = 0.0;
    for (double m : mass) s += m;
    return s;
}

double DensityGrid::max_density() const {
    const double peak = mass.empty() ? 0.0 : *std::max_element(mass.begin(), mass.end());
    return peak / (h * h * h);
}

DensityGrid density_grid(std::span<const Vec3> positions, double h) {
    if (!(h > 0.0)) throw DomainError("density_grid: h must be positive");
    if (positions.empty()) throw DomainError("density_grid: no points");
    Vec3 lo = positions[0], hi = positions[0];
    for (const Vec3& q : positions) {
        if (!is_finite(q)) throw DomainError("density_grid: non-finite position");
        lo = {std::min(lo.x, q.x), std::min(lo.y, q.y), std::min(lo.z, q.z)};
        hi = {std::max(hi.x, q.x), std::max(hi.y, q.y), std::max(hi.z, q.z)};
    }
    DensityGrid g;
    g.h = h;
    g.origin = lo - Vec3{h, h, h};
    auto count = [h](double a, double b) { return static_cast<std::size_t>(std::floor((b - a) / h)) + 3; };
    g.nx = count(lo.x, hi.x);
    g.ny = count(lo.y, hi.y);
    g.nz = count(lo.z, hi.z);
    const double cells = static_cast<double>(g.nx) * static_cast<double>(g.ny) * static_cast<double>(g.nz);
    if (cells > 2e8) throw DomainError("density_grid: h too small for the support (more than 2e8 cells)");
    g.mass.assign(g.nx * g.ny * g.nz, 0.0);
    // Counts first, then one division, so the total is exactly n/n.
    std::vector<std::size_t> counts(g.mass.size(), 0);
    auto index = [&](double v, double o, std::size_t cap) {
        const auto k = static_cast<std::size_t>(std::floor((v - o) / h));
        return std::min(k, cap - 1);
    };
    for (const Vec3& q : positions) {
        const std::size_t ix = index(q.x, g.origin.x, g.nx);
        const std::size_t iy = index(q.y, g.origin.y, g.ny);
        const std::size_t iz = index(q.z, g.origin.z, g.nz);
        ++counts[(iz * g.ny + iy) * g.nx + ix];
    }
    const double inv = 1.0 / static_cast<double>(positions.size());
    for (std::size_t c = 0; c < counts.size(); ++c) g.mass[c] = static_cast<double>(counts[c]) * inv;
    return g;
}

ForceBoundCheck force_bound_check(const DensityGrid& grid, const KernelSpec& spec, std::span<const Vec3> sources,
                                  const Execution& exec) {
    if (grid.cells() == 0) throw DomainError("force_bound_check: empty grid");
    std::vector<Vec3> nodes;
    nodes.reserve(grid.cells());
    for (std::size_t iz = 0; iz < grid.nz; ++iz) {
        for (std::size_t iy = 0; iy < grid.ny; ++iy) {
            for (std::size_t ix = 0; ix < grid.nx; ++ix) nodes.push_back(grid.center(ix, iy, iz));
        }
    }
    const std::vector<Vec3> field = meanfield_force(spec, sources, nodes, exec);
    ForceBoundCheck out;
    for (const Vec3& f : field) out.lhs = std::max(out.lhs, norm(f));
    out.rhs = 2.0 * std::pow(4.0 * std::numbers::pi, 2.0 / 3.0) * std::cbrt(grid.l1_norm()) *
              std::pow(grid.max_density(), 2.0 / 3.0);
    out.holds = out.lhs <= out.rhs;
    return out;
}

double default_lambda(double c_rho, double delta) {
    constexpr double pi = std::numbers::pi;
    return 2.0 * c_rho * (4.0 * pi * 54.0 * delta + 4.0 * pi / 3.0 + 54.0);
}

}  // namespace vplab

#pragma once

#include <span>
#include <vector>

#include "vplab/kernels.hpp"
#include "vplab/parallel.hpp"
#include "vplab/rng.hpp"
#include "vplab/sampling.hpp"
#include "vplab/types.hpp"

namespace vplab {

/// Particle approximation of the regularized Vlasov solution f^N_t: m
/// self-interacting members with weight 1/m, driven by the kernel of the
/// N-particle system (cutoff N^-delta, not m^-delta).
struct ReferenceEnsemble {
    PhaseState state;
    StreamKey lineage{};

    std::size_t size() const { return state.size(); }
};

/// i.i.d. draw of m members; the stream must be disjoint from the Z stream.
ReferenceEnsemble draw_reference_ensemble(const InitialDistribution& dist, std::size_t m, const StreamKey& key);

/// For each target x: (1/m) sum_j k(x - q_j).
std::vector<Vec3> meanfield_force(const KernelSpec& spec, std::span<const Vec3> sources,
                                  std::span<const Vec3> targets, const Execution& exec = {});
std::vector<Vec3> meanfield_force(const KernelSpec& spec, const ReferenceEnsemble& ensemble,
                                  std::span<const Vec3> targets, const Execution& exec = {});

/// Self-consistent velocity-Verlet evolution of the ensemble to t_final.
ReferenceEnsemble vlasov_evolve(const KernelSpec& spec, const ReferenceEnsemble& ensemble, double t_final, double dt,
                                const Execution& exec = {});

/// Ensemble positions stored at every step t0 + k dt, k = 0..steps, shared
/// read-only by tracer integrations. Full states are kept at `keep_steps`.
class EnsembleTimeline {
  public:
    EnsembleTimeline(const KernelSpec& spec, const ReferenceEnsemble& initial, double t_final, double dt,
                     std::span<const std::size_t> keep_steps = {}, const Execution& exec = {});

    double t0() const { return t0_; }
    double dt() const { return dt_; }
    std::size_t steps() const { return positions_.size() - 1; }
    double t_final() const { return t0_ + static_cast<double>(steps()) * dt_; }
    std::size_t members() const { return positions_.front().size(); }
    const StreamKey& lineage() const { return lineage_; }

    const SourceCloud& positions(std::size_t step) const { return positions_.at(step); }
    /// Full ensemble state at a kept step; throws if the step was not kept.
    const PhaseState& state(std::size_t step) const;
    bool has_state(std::size_t step) const;
    std::size_t step_of(double t) const;

  private:
    double t0_;
    double dt_;
    StreamKey lineage_;
    std::vector<SourceCloud> positions_;
    std::vector<std::pair<std::size_t, PhaseState>> kept_;
};

/// Evolves z0 as passive tracers in the field of the timeline. Tracers do not
/// interact; particle i's trajectory depends only on (z0_i, timeline).
/// An empty `snapshot_times` returns only the final state.
std::vector<PhaseState> meanfield_flow(const KernelSpec& spec, const EnsembleTimeline& timeline, const PhaseState& z0,
                                       double dt, double t_final, std::span<const double> snapshot_times,
                                       const Execution& exec = {});

/// Histogram estimate of the spatial marginal.
struct DensityGrid {
    double h = 0.0;
    Vec3 origin{};  ///< lower corner of cell (0,0,0)
    std::size_t nx = 0, ny = 0, nz = 0;
    std::vector<double> mass;  ///< per-cell mass, x fastest

    std::size_t cells() const { return mass.size(); }
    Vec3 center(std::size_t ix, std::size_t iy, std::size_t iz) const;
    double total_mass() const;
    /// max cell mass / h^3: the estimate of sup rho.
    double max_density() const;
    /// total mass (the L1 norm of the estimate).
    double l1_norm() const { return total_mass(); }
};

/// Bounding box fitted to the points and padded by one cell on every side.
DensityGrid density_grid(std::span<const Vec3> positions, double h);

struct ForceBoundCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// lhs = max over grid cell centres of |k * rho_hat| with rho_hat the
/// empirical law of `sources`; rhs = 2 (4 pi)^{2/3} |rho|_1^{1/3} |rho|_inf^{2/3}.
ForceBoundCheck force_bound_check(const DensityGrid& grid, const KernelSpec& spec, std::span<const Vec3> sources,
                                  const Execution& exec = {});

/// Default rate for the J process: 2 C_rho (4 pi 54 delta + 4 pi/3 + 54).
double default_lambda(double c_rho, double delta);

}  // namespace vplab

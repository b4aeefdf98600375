#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vplab/parallel.hpp"
#include "vplab/types.hpp"

namespace vplab {

/// Optimal permutation coupling between two equal-size point sets.
struct Matching {
    std::vector<std::size_t> assignment;  ///< row i is matched to column assignment[i]
    std::vector<double> pair_cost;        ///< cost of each matched pair
    double total_cost = 0.0;
    /// Dual potentials: row_potential[i] + column_potential[j] <= cost(i, j),
    /// with equality on matched pairs.
    std::vector<double> row_potential;
    std::vector<double> column_potential;
};

/// Dense linear assignment (Jonker-Volgenant shortest augmenting path) on an
/// n x n row-major cost matrix. Among optimal assignments the
/// lexicographically smallest `assignment` is returned.
Matching solve_assignment(std::span<const double> cost, std::size_t n);

enum class WassersteinMode { exact, sliced };

struct WassersteinOptions {
    /// Largest point count handled by the exact solver.
    std::size_t exact_max_n = 2048;
    std::size_t projections = 256;
    std::uint64_t seed = 0;
};

struct WassersteinResult {
    double value = 0.0;
    bool approximate = false;
};

/// W_p between equal-weight measures with Euclidean ground distance on R^6.
/// Exact mode requires equal point counts and n <= exact_max_n; sliced mode
/// averages |.|^p one-dimensional costs over random directions.
WassersteinResult wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                                WassersteinMode mode, const WassersteinOptions& options = {});

/// Sliced estimate over the given unit directions (exposed for convergence checks).
double sliced_wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                          std::span<const Point6> directions);

/// Bottleneck distance: least tau admitting a perfect matching with all pair
/// distances <= tau.
double wasserstein_inf(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

/// Maximum bipartite matching size on an adjacency list (Hopcroft-Karp).
std::size_t hopcroft_karp(std::size_t n_left, std::size_t n_right, const std::vector<std::vector<std::uint32_t>>& adj);

/// sqrt(log n) max|q_psi - q_phi|_inf + max|p_psi - p_phi|_inf over all 3n coordinates.
double delta_metric(const PhaseState& psi, const PhaseState& phi, std::size_t n_for_weight);

/// max_i |q_i - q'_i|_inf and max_i |p_i - p'_i|_inf over all coordinates.
double position_deviation(const PhaseState& a, const PhaseState& b);
double momentum_deviation(const PhaseState& a, const PhaseState& b);

/// max_i |z_i - z'_i| with the Euclidean norm of R^6: the cost of the
/// identity coupling under the W_inf criterion.
double matched_sup_distance(const PhaseState& a, const PhaseState& b);

struct MatchedBound {
    double w = 0.0;
    double bound = 0.0;
    bool holds = true;
};

/// W_p(mu[psi], mu[phi]) against the identity-coupling bound max_i |psi_i - phi_i|.
MatchedBound matched_bound_check(const PhaseState& psi, const PhaseState& phi, double p,
                                 const WassersteinOptions& options = {});

}  // namespace vplab

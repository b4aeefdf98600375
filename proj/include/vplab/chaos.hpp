#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "vplab/kernels.hpp"
#include "vplab/meanfield.hpp"
#include "vplab/parallel.hpp"
#include "vplab/rng.hpp"
#include "vplab/sampling.hpp"
#include "vplab/transport.hpp"
#include "vplab/types.hpp"

namespace vplab {

// ---------------------------------------------------------------------------
// Deviation functionals

struct DeltaSeries {
    std::vector<double> t;
    std::vector<double> delta;
    std::vector<double> running_sup;
    std::vector<double> position_dev;  ///< |Psi^1 - Phi^1|_inf
    std::vector<double> momentum_dev;  ///< |Psi^2 - Phi^2|_inf
};

DeltaSeries delta_series(std::span<const PhaseState> psi, std::span<const PhaseState> phi, std::size_t n);

struct JProcessParams {
    double lambda = 1.0;
    double horizon = 1.0;  ///< T
    std::size_t n = 4;
    double delta = 0.25;
};

/// min(1, e^{lambda sqrt(log n) T} n^{3 delta - 1}).
double j_initial(const JProcessParams& params);

/// J(t_k) = min(1, max_{s <= t_k} e^{lambda sqrt(log n)(T - s)} (n^delta Delta(s) + n^{3 delta - 1})).
std::vector<double> j_process(std::span<const double> delta, std::span<const double> times,
                              const JProcessParams& params);

/// N_0 = exp(((lambda T + 1)/(1 - 3 delta))^2); for n >= N_0, J(0) <= 1/2.
double n0_threshold(double lambda, double horizon, double delta);

// ---------------------------------------------------------------------------
// Law-of-large-numbers sets

struct LlnDeviation {
    double b = 0.0;  ///< |K(Phi) - Kbar(Phi)|_inf
    double c = 0.0;  ///< |L(Phi) - Lbar(Phi)|_inf
};

/// Deviations of the microscopic sums on the mean-field configuration `phi`
/// from their convolutions against the reference positions.
LlnDeviation lln_deviation(const KernelSpec& spec, const PhaseState& phi, const SourceCloud& reference,
                           const Execution& exec = {});

/// n^{2 delta - 1}, recomputed from (n, delta).
double b_threshold(const KernelSpec& spec);

struct Membership {
    bool in_a = false;
    bool in_b = false;
    bool in_c = false;
    double b_deviation = 0.0;
    double c_deviation = 0.0;
};

Membership set_membership(const KernelSpec& spec, const PhaseState& phi, const SourceCloud& reference, double j_value,
                          const Execution& exec = {});

// ---------------------------------------------------------------------------
// Trials

/// Stream keys: Z draws, reference ensembles and proxy draws never collide.
StreamKey micro_stream(std::uint64_t master_seed, std::size_t n, std::size_t trial);
StreamKey reference_stream(std::uint64_t master_seed, std::size_t n);

struct TrialSettings {
    int sigma = 1;
    double alpha = 2.0;
    double delta = 0.3;
    std::size_t n = 64;
    std::size_t kappa = 8;
    double horizon = 0.5;
    double dt = 2e-3;
    std::size_t snapshots = 50;  ///< intervals; snapshots + 1 sample times including t = 0
    std::optional<double> lambda;  ///< default_lambda(C_rho(0), delta) when empty
    double wasserstein_p = 2.0;
    std::size_t exact_max_n = 2048;
    bool microscopic = true;       ///< integrate Psi (off: membership-only trials)
    bool membership = true;
    bool wasserstein = true;       ///< W_p(mu[Psi], mu[Phi]) at every snapshot
    bool reference_distance = true;  ///< W_p(mu[Phi], ensemble subsample) at the final snapshot
    bool energy = true;
    double density_h = 0.25;  ///< histogram cell for C_rho(t)

    KernelSpec kernel() const { return {sigma, alpha, delta, n}; }
    std::vector<double> snapshot_times() const;
};

struct SnapshotRecord {
    double t = 0.0;
    double delta = 0.0;
    double position_dev = 0.0;
    double momentum_dev = 0.0;
    double sup_dev = 0.0;      ///< max-norm on R^{6N}
    double matched_dev = 0.0;  ///< max_i |Psi_i - Phi_i| (Euclidean in R^6)
    double j = 1.0;
    Membership membership;
    double w_psi_phi = std::numeric_limits<double>::quiet_NaN();
    double w_phi_reference = std::numeric_limits<double>::quiet_NaN();
    double energy = std::numeric_limits<double>::quiet_NaN();
    double c_rho = 0.0;
};

struct TrialRecord {
    std::size_t trial = 0;
    StreamKey lineage{};
    TrialSettings settings;
    std::size_t reference_members = 0;
    double lambda = 0.0;
    std::vector<SnapshotRecord> snapshots;

    double sup_delta() const;
    double sup_dev() const;
    double energy_drift() const;
};

/// Shared per-(n, settings) state: the reference ensemble timeline, computed
/// once and read by every trial.
class TrialBatch {
  public:
    TrialBatch(InitialDistribution dist, TrialSettings settings, std::uint64_t master_seed, const Execution& exec = {});

    const TrialSettings& settings() const { return settings_; }
    const EnsembleTimeline& timeline() const { return *timeline_; }
    double lambda() const { return lambda_; }
    double c_rho_initial() const { return c_rho_.front(); }
    const std::vector<double>& c_rho() const { return c_rho_; }
    const std::vector<std::size_t>& snapshot_steps() const { return snapshot_steps_; }

    TrialRecord run(std::size_t trial, const Execution& exec = {}) const;
    /// Trials [first, first + count), in parallel over trials; ordered by index.
    std::vector<TrialRecord> run_many(std::size_t first, std::size_t count, const Execution& exec = {}) const;

  private:
    InitialDistribution dist_;
    TrialSettings settings_;
    std::uint64_t master_seed_;
    std::vector<double> times_;
    std::vector<std::size_t> snapshot_steps_;
    std::unique_ptr<EnsembleTimeline> timeline_;
    std::vector<double> c_rho_;
    double lambda_ = 0.0;
};

// ---------------------------------------------------------------------------
// Aggregation

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Wilson score interval at normal quantile z.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct RateRow {
    std::size_t n = 0;
    std::size_t trials = 0;
    std::size_t delta_exceed = 0;  ///< trials with sup_t Delta >= n^-delta
    double delta_prob = 0.0;
    Interval delta_ci;
    std::size_t dev_exceed = 0;  ///< trials with sup_t |Psi - Phi|_inf >= n^-delta
    double dev_prob = 0.0;
    Interval dev_ci;
    double median_scaled_sup_delta = 0.0;  ///< median of n^delta sup_t Delta
    bool delta_zero = false;  ///< no exceedances: report "< 3/trials"
};

struct RateTable {
    std::vector<RateRow> rows;
    std::optional<double> delta_slope;  ///< d log P / d log n over nonzero rows
    std::optional<double> dev_slope;
};

RateRow rate_row(std::span<const TrialRecord> records);
RateTable rate_table(std::vector<RateRow> rows);

struct SweepConfig {
    InitialDistribution dist = InitialDistribution::thermal(SpatialProfile::uniform_ball(1.0), 1.0);
    TrialSettings base;  ///< n is overwritten from the grid
    std::vector<std::size_t> n_grid;
    std::size_t trials = 100;
    std::uint64_t master_seed = 0;
};

struct SweepResult {
    RateTable table;
    std::vector<std::vector<TrialRecord>> records;  ///< per grid entry
};

/// Concentration sweep over the n grid. `on_batch` (optional) sees each
/// grid entry's records as soon as they finish.
SweepResult concentration_sweep(const SweepConfig& config, const Execution& exec = {},
                                const std::function<void(std::size_t, const std::vector<TrialRecord>&)>& on_batch = {});

struct SamplingRateConfig {
    InitialDistribution dist = InitialDistribution::uniform_ball(1.0, 1.0);
    double p = 1.0;
    std::vector<std::size_t> n_grid;
    std::size_t trials = 50;
    std::uint64_t master_seed = 0;
    std::size_t proxy_factor = 64;
    std::size_t exact_max_n = 2048;
    std::size_t projections = 256;
    std::size_t bootstrap = 1000;
};

struct SamplingRateFit {
    double exponent = 0.0;
    Interval ci;
    std::vector<std::size_t> n;
    std::vector<double> median;
    std::vector<std::vector<double>> samples;
    std::vector<bool> approximate;
};

/// Median W_p(mu^n_0, proxy subsample) per n and its log-log slope with a
/// bootstrap CI. The proxy is one draw of proxy_factor * max(n) points; each
/// trial compares against n distinct proxy points.
SamplingRateFit sampling_rate_fit(const SamplingRateConfig& config, const Execution& exec = {});

/// Least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

struct RightDerivativeReport {
    bool holds = true;
    double worst_margin = 0.0;  ///< min of max(0, dg) + tol - dh
    std::size_t violations = 0;
    std::vector<double> running_max;
};

/// h = running max of g; checks forward-diff(h) <= max(0, forward-diff(g)) + 1e-12.
RightDerivativeReport right_derivative_check(std::span<const double> g);

}  // namespace vplab

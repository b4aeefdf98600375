#include "vplab/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vplab/dynamics.hpp"

namespace vplab {

DeltaSeries delta_series(std::span<const PhaseState> psi, std::span<const PhaseState> phi, std::size_t n) {
    if (psi.size() != phi.size()) throw DomainError("delta_series: snapshot counts differ");
    DeltaSeries out;
    double sup = 0.0;
    for (std::size_t k = 0; k < psi.size(); ++k) {
        if (psi[k].t != phi[k].t) {
            std::ostringstream msg;
            msg << "delta_series: snapshot " << k << " has t = " << psi[k].t << " and " << phi[k].t;
            throw DomainError(msg.str());
        }
        const double d = delta_metric(psi[k], phi[k], n);
        sup = std::max(sup, d);
        out.t.push_back(psi[k].t);
        out.delta.push_back(d);
        out.running_sup.push_back(sup);
        out.position_dev.push_back(position_deviation(psi[k], phi[k]));
        out.momentum_dev.push_back(momentum_deviation(psi[k], phi[k]));
    }
    return out;
}

namespace {

double j_term(const JProcessParams& prm, double s, double delta_value) {
    const double nd = static_cast<double>(prm.n);
    const double rate = prm.lambda * std::sqrt(std::log(nd));
    return std::exp(rate * (prm.horizon - s)) * (std::pow(nd, prm.delta) * delta_value + std::pow(nd, 3.0 * prm.delta - 1.0));
}

}  // namespace

double j_initial(const JProcessParams& params) { return std::min(1.0, j_term(params, 0.0, 0.0)); }

std::vector<double> j_process(std::span<const double> delta, std::span<const double> times,
                              const JProcessParams& params) {
    if (delta.size() != times.size()) throw DomainError("j_process: series and time grid differ in length");
    std::vector<double> out(delta.size());
    double sup = 0.0;
    for (std::size_t k = 0; k < delta.size(); ++k) {
        sup = std::max(sup, j_term(params, times[k], delta[k]));
        out[k] = std::min(1.0, sup);
    }
    return out;
}

double n0_threshold(double lambda, double horizon, double delta) {
    const double e = (lambda * horizon + 1.0) / (1.0 - 3.0 * delta);
    return std::exp(e * e);
}

LlnDeviation lln_deviation(const KernelSpec& spec, const PhaseState& phi, const SourceCloud& reference,
                           const Execution& exec) {
    const std::size_t n = phi.size();
    if (n != spec.n()) throw DomainError("lln_deviation: configuration size differs from the kernel's n");
    if (reference.size() == 0) throw DomainError("lln_deviation: empty reference");
    const SourceCloud self(phi.q);
    std::vector<Vec3> k_self(n), k_ref(n);
    std::vector<double> l_self(n), l_ref(n);
    const double wn = 1.0 / static_cast<double>(n);
    accumulate_field_and_majorant(spec, self, phi.q, wn, k_self, l_self, exec);
    accumulate_field_and_majorant(spec, reference, phi.q, 1.0 / static_cast<double>(reference.size()), k_ref, l_ref,
                                  exec);
    // k(0) = 0 drops out by itself; l(0) = n^{3 delta} must be removed.
    const double l_diag = wn * spec.majorant_inner();
    LlnDeviation out;
    for (std::size_t i = 0; i < n; ++i) {
        out.b = std::max(out.b, max_norm(k_self[i] - k_ref[i]));
        out.c = std::max(out.c, std::abs((l_self[i] - l_diag) - l_ref[i]));
    }
    return out;
}

double b_threshold(const KernelSpec& spec) {
    return std::pow(static_cast<double>(spec.n()), 2.0 * spec.delta() - 1.0);
}

Membership set_membership(const KernelSpec& spec, const PhaseState& phi, const SourceCloud& reference, double j_value,
                          const Execution& exec) {
    const LlnDeviation d = lln_deviation(spec, phi, reference, exec);
    Membership m;
    m.b_deviation = d.b;
    m.c_deviation = d.c;
    m.in_a = j_value < 1.0;
    m.in_b = d.b < b_threshold(spec);
    m.in_c = d.c < 1.0;
    return m;
}

StreamKey micro_stream(std::uint64_t master_seed, std::size_t n, std::size_t trial) {
    return {master_seed, (static_cast<std::uint64_t>(n) << 20) | static_cast<std::uint64_t>(trial),
            StreamPurpose::micro_initial};
}

StreamKey reference_stream(std::uint64_t master_seed, std::size_t n) {
    return {master_seed, static_cast<std::uint64_t>(n) << 20, StreamPurpose::reference_ensemble};
}

std::vector<double> TrialSettings::snapshot_times() const {
    if (snapshots == 0) throw ConfigError("snapshots must be at least 1");
    std::vector<double> t(snapshots + 1);
    for (std::size_t k = 0; k <= snapshots; ++k) {
        t[k] = horizon * static_cast<double>(k) / static_cast<double>(snapshots);
    }
    return t;
}

double TrialRecord::sup_delta() const {
    double s = 0.0;
    for (const auto& r : snapshots) s = std::max(s, r.delta);
    return s;
}

double TrialRecord::sup_dev() const {
    double s = 0.0;
    for (const auto& r : snapshots) s = std::max(s, r.sup_dev);
    return s;
}

double TrialRecord::energy_drift() const {
    if (snapshots.empty() || !std::isfinite(snapshots.front().energy)) return std::numeric_limits<double>::quiet_NaN();
    const double e0 = snapshots.front().energy;
    double d = 0.0;
    for (const auto& r : snapshots) d = std::max(d, std::abs(r.energy - e0));
    return e0 != 0.0 ? d / std::abs(e0) : d;
}

namespace {

void validate(const TrialSettings& s) {
    if (!(s.horizon > 0.0)) throw ConfigError("horizon T must be positive");
    if (!(s.dt > 0.0)) throw ConfigError("dt must be positive");
    if (s.kappa == 0) throw ConfigError("kappa must be at least 1");
    if (s.snapshots == 0) throw ConfigError("snapshots must be at least 1");
    if (!(s.density_h > 0.0)) throw ConfigError("density_h must be positive");
    const double steps = s.horizon / s.dt;
    const double per = steps / static_cast<double>(s.snapshots);
    if (std::abs(per - std::round(per)) > 1e-6 || std::round(per) < 1.0) {
        std::ostringstream msg;
        msg << "snapshot spacing T/snapshots = " << s.horizon / static_cast<double>(s.snapshots)
            << " is not a whole number of steps of dt = " << s.dt;
        throw ConfigError(msg.str());
    }
}

std::vector<Vec3> to_points(const SourceCloud& c) {
    std::vector<Vec3> q(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) q[j] = c.at(j);
    return q;
}

WassersteinResult distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p, std::size_t exact_max_n,
                           std::uint64_t seed) {
    WassersteinOptions opt;
    opt.exact_max_n = exact_max_n;
    opt.seed = seed;
    const bool exact = a.size() == b.size() && a.size() <= exact_max_n;
    return wasserstein_p(a, b, p, exact ? WassersteinMode::exact : WassersteinMode::sliced, opt);
}

}  // namespace

TrialBatch::TrialBatch(InitialDistribution dist, TrialSettings settings, std::uint64_t master_seed,
                       const Execution& exec)
    : dist_(std::move(dist)), settings_(std::move(settings)), master_seed_(master_seed) {
    validate(settings_);
    const KernelSpec spec = settings_.kernel();
    times_ = settings_.snapshot_times();
    snapshot_steps_ = plan_steps(0.0, settings_.horizon, settings_.dt, times_).snapshot_steps;
    const std::size_t m = settings_.kappa * settings_.n;
    const ReferenceEnsemble ensemble =
        draw_reference_ensemble(dist_, m, reference_stream(master_seed_, settings_.n));
    timeline_ = std::make_unique<EnsembleTimeline>(spec, ensemble, settings_.horizon, settings_.dt, snapshot_steps_,
                                                   exec);
    for (const std::size_t step : snapshot_steps_) {
        const DensityGrid g = density_grid(to_points(timeline_->positions(step)), settings_.density_h);
        c_rho_.push_back(g.max_density() + g.l1_norm());
    }
    lambda_ = settings_.lambda ? *settings_.lambda : default_lambda(c_rho_.front(), settings_.delta);
}

TrialRecord TrialBatch::run(std::size_t trial, const Execution& exec) const {
    const KernelSpec spec = settings_.kernel();
    const std::size_t n = settings_.n;
    TrialRecord rec;
    rec.trial = trial;
    rec.lineage = micro_stream(master_seed_, n, trial);
    rec.settings = settings_;
    rec.reference_members = timeline_->members();
    rec.lambda = lambda_;

    const PhaseState z = sample(dist_, n, rec.lineage);
    std::vector<PhaseState> phi, psi;
    try {
        phi = meanfield_flow(spec, *timeline_, z, settings_.dt, settings_.horizon, times_, exec);
        if (settings_.microscopic) psi = evolve(spec, z, settings_.horizon, settings_.dt, times_, exec);
    } catch (const NumericalError& e) {
        throw NumericalError("n = " + std::to_string(n) + ", trial " + std::to_string(trial) + ": " + e.what(),
                             e.particle(), e.coordinate(), e.step());
    }

    const std::size_t count = times_.size();
    rec.snapshots.resize(count);
    std::vector<double> j(count, std::numeric_limits<double>::quiet_NaN());
    if (settings_.microscopic) {
        const DeltaSeries ds = delta_series(psi, phi, n);
        const JProcessParams prm{lambda_, settings_.horizon, n, settings_.delta};
        j = j_process(ds.delta, ds.t, prm);
        for (std::size_t k = 0; k < count; ++k) {
            SnapshotRecord& r = rec.snapshots[k];
            r.delta = ds.delta[k];
            r.position_dev = ds.position_dev[k];
            r.momentum_dev = ds.momentum_dev[k];
            r.sup_dev = std::max(r.position_dev, r.momentum_dev);
            r.matched_dev = matched_sup_distance(psi[k], phi[k]);
            r.j = j[k];
            if (settings_.wasserstein) {
                r.w_psi_phi = distance(EmpiricalMeasure::from_state(psi[k]), EmpiricalMeasure::from_state(phi[k]),
                                       settings_.wasserstein_p, settings_.exact_max_n, rec.lineage.index)
                                  .value;
            }
            if (settings_.energy) r.energy = total_energy(spec, psi[k]);
        }
    }
    for (std::size_t k = 0; k < count; ++k) {
        SnapshotRecord& r = rec.snapshots[k];
        r.t = phi[k].t;
        r.c_rho = c_rho_[k];
        if (!settings_.microscopic) {
            r.delta = r.position_dev = r.momentum_dev = r.sup_dev = r.matched_dev = r.j =
                std::numeric_limits<double>::quiet_NaN();
        }
        if (settings_.membership) {
            r.membership = set_membership(spec, phi[k], timeline_->positions(snapshot_steps_[k]),
                                          settings_.microscopic ? j[k] : 1.0, exec);
        }
    }
    if (settings_.reference_distance) {
        // n distinct ensemble members, chosen per trial.
        const PhaseState& ens = timeline_->state(snapshot_steps_.back());
        RandomStream rng({master_seed_, rec.lineage.index, StreamPurpose::monte_carlo});
        std::vector<std::size_t> idx(ens.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        PhaseState sub(n, ens.t);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t pick = i + static_cast<std::size_t>(rng.below(idx.size() - i));
            std::swap(idx[i], idx[pick]);
            sub.q[i] = ens.q[idx[i]];
            sub.p[i] = ens.p[idx[i]];
        }
        rec.snapshots.back().w_phi_reference =
            distance(EmpiricalMeasure::from_state(phi.back()), EmpiricalMeasure::from_state(sub),
                     settings_.wasserstein_p, settings_.exact_max_n, rec.lineage.index)
                .value;
    }
    return rec;
}

std::vector<TrialRecord> TrialBatch::run_many(std::size_t first, std::size_t count, const Execution& exec) const {
    std::vector<TrialRecord> out(count);
    parallel_for(count, exec, [&](std::size_t begin, std::size_t end) {
        for (std::size_t k = begin; k < end; ++k) out[k] = run(first + k, Execution{1});
    });
    return out;
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double nt = static_cast<double>(trials);
    const double ph = static_cast<double>(successes) / nt;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nt;
    const double centre = (ph + z2 / (2.0 * nt)) / denom;
    const double half = z * std::sqrt(ph * (1.0 - ph) / nt + z2 / (4.0 * nt * nt)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

namespace {

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::optional<double> log_slope(const std::vector<RateRow>& rows, bool use_delta) {
    std::vector<double> x, y;
    for (const auto& r : rows) {
        const double pr = use_delta ? r.delta_prob : r.dev_prob;
        if (pr > 0.0) {
            x.push_back(std::log(static_cast<double>(r.n)));
            y.push_back(std::log(pr));
        }
    }
    if (x.size() < 2) return std::nullopt;
    return ols_slope(x, y);
}

}  // namespace

RateRow rate_row(std::span<const TrialRecord> records) {
    if (records.empty()) throw DomainError("rate_row: no records");
    RateRow row;
    row.n = records.front().settings.n;
    row.trials = records.size();
    const double threshold = std::pow(static_cast<double>(row.n), -records.front().settings.delta);
    std::vector<double> scaled;
    for (const auto& r : records) {
        const double sd = r.sup_delta();
        if (sd >= threshold) ++row.delta_exceed;
        if (r.sup_dev() >= threshold) ++row.dev_exceed;
        scaled.push_back(sd / threshold);
    }
    const double nt = static_cast<double>(row.trials);
    row.delta_prob = static_cast<double>(row.delta_exceed) / nt;
    row.dev_prob = static_cast<double>(row.dev_exceed) / nt;
    row.delta_ci = wilson_interval(row.delta_exceed, row.trials);
    row.dev_ci = wilson_interval(row.dev_exceed, row.trials);
    row.delta_zero = row.delta_exceed == 0;
    row.median_scaled_sup_delta = median(std::move(scaled));
    return row;
}

RateTable rate_table(std::vector<RateRow> rows) {
    RateTable t;
    t.rows = std::move(rows);
    t.delta_slope = log_slope(t.rows, true);
    t.dev_slope = log_slope(t.rows, false);
    return t;
}

SweepResult concentration_sweep(const SweepConfig& config, const Execution& exec,
                                const std::function<void(std::size_t, const std::vector<TrialRecord>&)>& on_batch) {
    if (config.n_grid.empty()) throw ConfigError("concentration_sweep: empty n grid");
    if (!std::is_sorted(config.n_grid.begin(), config.n_grid.end()) ||
        std::adjacent_find(config.n_grid.begin(), config.n_grid.end()) != config.n_grid.end()) {
        throw ConfigError("concentration_sweep: n grid must be strictly ascending");
    }
    if (config.trials < 50) {
        throw ConfigError("concentration_sweep: trials = " + std::to_string(config.trials) +
                          " per n, at least 50 required");
    }
    if (!config.base.microscopic) throw ConfigError("concentration_sweep: microscopic integration is required");
    SweepResult out;
    std::vector<RateRow> rows;
    for (std::size_t g = 0; g < config.n_grid.size(); ++g) {
        TrialSettings s = config.base;
        s.n = config.n_grid[g];
        const TrialBatch batch(config.dist, s, config.master_seed, exec);
        std::vector<TrialRecord> recs = batch.run_many(0, config.trials, exec);
        rows.push_back(rate_row(recs));
        if (on_batch) on_batch(g, recs);
        out.records.push_back(std::move(recs));
    }
    out.table = rate_table(std::move(rows));
    return out;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("ols_slope: need two or more paired values");
    const double nx = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / nx;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / nx;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw DomainError("ols_slope: x values are all equal");
    return sxy / sxx;
}

SamplingRateFit sampling_rate_fit(const SamplingRateConfig& config, const Execution& exec) {
    const auto& grid = config.n_grid;
    if (grid.size() < 3) {
        throw DomainError("sampling_rate_fit: regression needs at least 3 n values, got " +
                          std::to_string(grid.size()));
    }
    if (!std::is_sorted(grid.begin(), grid.end()) || grid.front() == 0) {
        throw DomainError("sampling_rate_fit: n grid must be ascending and positive");
    }
    if (config.trials == 0) throw DomainError("sampling_rate_fit: trials must be positive");
    if (config.proxy_factor == 0) throw DomainError("sampling_rate_fit: proxy_factor must be positive");

    const std::size_t proxy_size = config.proxy_factor * grid.back();
    const PhaseState proxy = sample(config.dist, proxy_size, {config.master_seed, 0, StreamPurpose::proxy});

    SamplingRateFit fit;
    for (const std::size_t n : grid) {
        std::vector<double> values(config.trials);
        std::vector<char> approx(config.trials, 0);
        parallel_for(config.trials, exec, [&](std::size_t begin, std::size_t end) {
            std::vector<std::uint32_t> idx(proxy_size);
            for (std::size_t t = begin; t < end; ++t) {
                const StreamKey key = micro_stream(config.master_seed, n, t);
                const PhaseState mu = sample(config.dist, n, key);
                RandomStream rng({config.master_seed, key.index, StreamPurpose::monte_carlo});
                std::iota(idx.begin(), idx.end(), std::uint32_t{0});
                PhaseState nu(n);
                for (std::size_t i = 0; i < n; ++i) {
                    const std::size_t pick = i + static_cast<std::size_t>(rng.below(proxy_size - i));
                    std::swap(idx[i], idx[pick]);
                    nu.q[i] = proxy.q[idx[i]];
                    nu.p[i] = proxy.p[idx[i]];
                }
                WassersteinOptions opt;
                opt.exact_max_n = config.exact_max_n;
                opt.projections = config.projections;
                opt.seed = key.index;
                const bool exact = n <= config.exact_max_n;
                const WassersteinResult w =
                    wasserstein_p(EmpiricalMeasure::from_state(mu), EmpiricalMeasure::from_state(nu), config.p,
                                  exact ? WassersteinMode::exact : WassersteinMode::sliced, opt);
                values[t] = w.value;
                approx[t] = w.approximate;
            }
        });
        fit.n.push_back(n);
        fit.median.push_back(median(values));
        fit.approximate.push_back(std::any_of(approx.begin(), approx.end(), [](char c) { return c != 0; }));
        fit.samples.push_back(std::move(values));
    }

    std::vector<double> lx(grid.size()), ly(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        lx[g] = std::log(static_cast<double>(grid[g]));
        ly[g] = std::log(fit.median[g]);
    }
    fit.exponent = ols_slope(lx, ly);

    if (config.bootstrap > 0) {
        RandomStream rng({config.master_seed, 0, StreamPurpose::bootstrap});
        std::vector<double> slopes;
        slopes.reserve(config.bootstrap);
        std::vector<double> resample(config.trials);
        for (std::size_t b = 0; b < config.bootstrap; ++b) {
            for (std::size_t g = 0; g < grid.size(); ++g) {
                for (double& v : resample) v = fit.samples[g][rng.below(config.trials)];
                ly[g] = std::log(median(resample));
            }
            slopes.push_back(ols_slope(lx, ly));
        }
        std::sort(slopes.begin(), slopes.end());
        auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(slopes.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const std::size_t hi = std::min(lo + 1, slopes.size() - 1);
            return slopes[lo] + (pos - static_cast<double>(lo)) * (slopes[hi] - slopes[lo]);
        };
        fit.ci = {quantile(0.025), quantile(0.975)};
    } else {
        fit.ci = {fit.exponent, fit.exponent};
    }
    return fit;
}

RightDerivativeReport right_derivative_check(std::span<const double> g) {
    RightDerivativeReport rep;
    rep.running_max.resize(g.size());
    double h = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.size(); ++k) {
        h = std::max(h, g[k]);
        rep.running_max[k] = h;
    }
    rep.worst_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < g.size(); ++k) {
        const double dh = rep.running_max[k + 1] - rep.running_max[k];
        const double dg = g[k + 1] - g[k];
        const double margin = std::max(0.0, dg) + 1e-12 - dh;
        rep.worst_margin = std::min(rep.worst_margin, margin);
        if (margin < 0.0) ++rep.violations;
    }
    if (g.size() < 2) rep.worst_margin = 0.0;
    rep.holds = rep.violations == 0;
    return rep;
}

}  // namespace vplab

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "vplab/dynamics.hpp"
#include "vplab/experiments.hpp"
#include "vplab/meanfield.hpp"

#ifndef VPLAB_VERSION
#define VPLAB_VERSION "0.0.0"
#endif

namespace vplab {

const char* version_string() { return VPLAB_VERSION; }

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string num(std::size_t v) { return std::to_string(v); }
std::string flag(bool b) { return b ? "1" : "0"; }

json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct Column {
    const char* name;
    const char* description;
};

class CsvFile {
  public:
    CsvFile(const fs::path& path, std::initializer_list<Column> cols)
        : out_(path, std::ios::binary | std::ios::trunc), width_(cols.size()) {
        if (!out_) throw Error("cannot open " + path.string() + " for writing");
        std::size_t i = 0;
        for (const auto& c : cols) out_ << (i++ ? "," : "") << c.name;
        out_ << '\n';
    }
    void row(const std::vector<std::string>& cells) {
        if (cells.size() != width_) throw Error("internal: CSV row width mismatch");
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

  private:
    std::ofstream out_;
    std::size_t width_;
};

/// Per-subcommand output directory; records every file for the manifest and
/// every CSV layout for schema.json.
class Output {
  public:
    Output(fs::path dir, std::string subcommand) : dir_(std::move(dir)), subcommand_(std::move(subcommand)) {
        fs::create_directories(dir_);
    }

    std::unique_ptr<CsvFile> csv(const std::string& name, std::initializer_list<Column> cols) {
        files_.push_back(name);
        json c = json::array();
        for (const auto& col : cols) c.push_back({{"name", col.name}, {"description", col.description}});
        schema_[name] = {{"format", "csv"}, {"columns", c}};
        return std::make_unique<CsvFile>(dir_ / name, cols);
    }

    std::ofstream jsonl(const std::string& name, const std::string& description) {
        files_.push_back(name);
        schema_[name] = {{"format", "jsonl"}, {"description", description}};
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + (dir_ / name).string() + " for writing");
        return out;
    }

    fs::path binary(const std::string& name) {
        files_.push_back(name);
        return dir_ / name;
    }

    void finish(const ExperimentConfig& config, double wall_seconds) {
        json manifest = {{"subcommand", subcommand_},
                         {"config_hash", hex64(config.hash())},
                         {"seed", config.seed},
                         {"version", version_string()},
                         {"files", files_},
                         {"config", config.canonical()},
                         {"wall_time_seconds", wall_seconds}};
        std::ofstream(dir_ / "manifest.json", std::ios::binary | std::ios::trunc) << manifest.dump(2) << '\n';
        json schema = {{"subcommand", subcommand_}, {"files", schema_}};
        std::ofstream(dir_ / "schema.json", std::ios::binary | std::ios::trunc) << schema.dump(2) << '\n';
    }

    const fs::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

  private:
    fs::path dir_;
    std::string subcommand_;
    std::vector<std::string> files_;
    json schema_ = json::object();
};

Execution exec_of(const ExperimentConfig& c) {
    return c.threads ? Execution{static_cast<unsigned>(c.threads)} : Execution::hardware();
}

KernelSpec kernel_of(const ExperimentConfig& c, std::size_t n) { return {c.sigma, c.alpha, c.delta, n}; }

std::string tag(std::size_t n, std::size_t trial) {
    return "n" + std::to_string(n) + "_trial" + std::to_string(trial);
}

// ---------------------------------------------------------------------------

void run_sample(const ExperimentConfig& c, Output& out, RunResult& res) {
    const InitialDistribution dist = c.distribution.build();
    auto csv = out.csv("samples.csv", {{"n", "particle count"},
                                       {"trial", "trial index"},
                                       {"mean_q2", "mean of |q_i|^2"},
                                       {"mean_p2", "mean of |p_i|^2"},
                                       {"max_abs_q", "largest |q_i| component"},
                                       {"max_abs_p", "largest |p_i| component"},
                                       {"file", "snapshot file with the drawn state"}});
    for (const std::size_t n : c.n_grid) {
        for (std::size_t t = 0; t < c.trials; ++t) {
            const PhaseState z = sample(dist, n, micro_stream(c.seed, n, t));
            double q2 = 0.0, p2 = 0.0, mq = 0.0, mp = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                q2 += dot(z.q[i], z.q[i]);
                p2 += dot(z.p[i], z.p[i]);
                mq = std::max(mq, max_norm(z.q[i]));
                mp = std::max(mp, max_norm(z.p[i]));
            }
            const std::string file = "sample_" + tag(n, t) + ".vpsnap";
            write_snapshot(out.binary(file), {SnapshotKind::micro, z, c.delta, double(c.sigma), c.alpha});
            csv->row({num(n), num(t), num(q2 / double(n)), num(p2 / double(n)), num(mq), num(mp), file});
        }
    }
    res.summary.push_back("drew " + std::to_string(c.n_grid.size() * c.trials) + " initial states");
}

void run_evolve(const ExperimentConfig& c, Output& out, RunResult& res) {
    const InitialDistribution dist = c.distribution.build();
    const Execution exec = exec_of(c);
    const std::vector<double> times = c.trial_settings(c.n_grid.front()).snapshot_times();
    auto csv = out.csv("evolve.csv", {{"n", "particle count"},
                                      {"trial", "trial index"},
                                      {"snapshot", "snapshot index"},
                                      {"t", "time"},
                                      {"energy", "total energy per particle"},
                                      {"energy_drift", "|E(t) - E(0)| / |E(0)|"},
                                      {"momentum_x", "total momentum, x"},
                                      {"momentum_y", "total momentum, y"},
                                      {"momentum_z", "total momentum, z"}});
    double worst = 0.0;
    for (const std::size_t n : c.n_grid) {
        const KernelSpec spec = kernel_of(c, n);
        for (std::size_t t = 0; t < c.trials; ++t) {
            const PhaseState z = sample(dist, n, micro_stream(c.seed, n, t));
            std::vector<PhaseState> traj;
            try {
                traj = evolve(spec, z, c.horizon, c.dt, times, exec);
            } catch (const NumericalError& e) {
                throw NumericalError("n = " + std::to_string(n) + ", trial " + std::to_string(t) + ": " + e.what(),
                                     e.particle(), e.coordinate(), e.step());
            }
            const double e0 = total_energy(spec, traj.front());
            for (std::size_t k = 0; k < traj.size(); ++k) {
                const double e = total_energy(spec, traj[k]);
                const double drift = e0 != 0.0 ? std::abs(e - e0) / std::abs(e0) : std::abs(e - e0);
                worst = std::max(worst, drift);
                const Vec3 m = total_momentum(traj[k]);
                csv->row({num(n), num(t), num(k), num(traj[k].t), num(e), num(drift), num(m.x), num(m.y), num(m.z)});
            }
            write_snapshot(out.binary("evolve_" + tag(n, t) + ".vpsnap"),
                           {SnapshotKind::micro, traj.back(), c.delta, double(c.sigma), c.alpha});
        }
    }
    res.summary.push_back("largest relative energy drift " + num(worst));
}

void run_meanfield(const ExperimentConfig& c, Output& out, RunResult& res) {
    const InitialDistribution dist = c.distribution.build();
    const Execution exec = exec_of(c);
    auto csv = out.csv("meanfield.csv", {{"n", "particle count setting the cutoff n^-delta"},
                                         {"members", "reference ensemble size kappa * n"},
                                         {"snapshot", "snapshot index"},
                                         {"t", "time"},
                                         {"c_rho", "histogram estimate of sup rho + |rho|_1"},
                                         {"kinetic", "mean p^2 / 2 over members"},
                                         {"momentum_x", "mean momentum, x"},
                                         {"momentum_y", "mean momentum, y"},
                                         {"momentum_z", "mean momentum, z"}});
    for (const std::size_t n : c.n_grid) {
        const TrialSettings s = c.trial_settings(n);
        const std::vector<double> times = s.snapshot_times();
        const std::vector<std::size_t> steps = plan_steps(0.0, c.horizon, c.dt, times).snapshot_steps;
        const KernelSpec spec = kernel_of(c, n);
        const ReferenceEnsemble ens = draw_reference_ensemble(dist, c.kappa * n, reference_stream(c.seed, n));
        const EnsembleTimeline tl(spec, ens, c.horizon, c.dt, steps, exec);
        for (std::size_t k = 0; k < steps.size(); ++k) {
            const PhaseState& st = tl.state(steps[k]);
            const DensityGrid g = density_grid(st.q, c.density_h);
            double kin = 0.0;
            for (const Vec3& p : st.p) kin += 0.5 * dot(p, p);
            const double m = static_cast<double>(st.size());
            const Vec3 mom = total_momentum(st);
            csv->row({num(n), num(st.size()), num(k), num(st.t), num(g.max_density() + g.l1_norm()), num(kin / m),
                      num(mom.x / m), num(mom.y / m), num(mom.z / m)});
        }
        write_snapshot(out.binary("reference_n" + std::to_string(n) + ".vpsnap"),
                       {SnapshotKind::reference, tl.state(tl.steps()), c.delta, double(c.sigma), c.alpha});
    }
    res.summary.push_back("evolved " + std::to_string(c.n_grid.size()) + " reference ensembles");
}

std::unique_ptr<CsvFile> trial_csv(Output& out) {
    return out.csv("trials.csv",
                   {{"n", "particle count"},
                    {"trial", "trial index"},
                    {"snapshot", "snapshot index"},
                    {"t", "time"},
                    {"delta", "sqrt(log n) |dq|_inf + |dp|_inf between the microscopic and mean-field flows"},
                    {"j", "stopped process J(t)"},
                    {"position_dev", "|Psi^1 - Phi^1|_inf"},
                    {"momentum_dev", "|Psi^2 - Phi^2|_inf"},
                    {"sup_dev", "|Psi - Phi|_inf on R^{6n}"},
                    {"matched_dev", "max_i |Psi_i - Phi_i| (Euclidean in R^6)"},
                    {"in_a", "J(t) < 1"},
                    {"in_b", "b_deviation < n^(2 delta - 1)"},
                    {"in_c", "c_deviation < 1"},
                    {"b_deviation", "max deviation of the kernel sum from its mean-field convolution"},
                    {"c_deviation", "max deviation of the majorant sum from its mean-field convolution"},
                    {"b_threshold", "n^(2 delta - 1)"},
                    {"w_psi_phi", "W_p(mu[Psi], mu[Phi]) with p the first metrics.p entry"},
                    {"w_phi_reference", "W_p(mu[Phi], ensemble subsample); final snapshot only"},
                    {"energy", "microscopic energy per particle"},
                    {"c_rho", "reference ensemble estimate of sup rho + |rho|_1"}});
}

void write_trial(CsvFile& csv, std::ofstream& jl, const TrialRecord& r) {
    const double thr = b_threshold(r.settings.kernel());
    bool all_bc = true;
    for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
        const SnapshotRecord& s = r.snapshots[k];
        all_bc = all_bc && s.membership.in_b && s.membership.in_c;
        csv.row({num(r.settings.n), num(r.trial), num(k), num(s.t), num(s.delta), num(s.j), num(s.position_dev),
                 num(s.momentum_dev), num(s.sup_dev), num(s.matched_dev), flag(s.membership.in_a),
                 flag(s.membership.in_b), flag(s.membership.in_c), num(s.membership.b_deviation),
                 num(s.membership.c_deviation), num(thr), num(s.w_psi_phi), num(s.w_phi_reference), num(s.energy),
                 num(s.c_rho)});
    }
    json j = {{"n", r.settings.n},
              {"trial", r.trial},
              {"lineage", {{"master_seed", r.lineage.master_seed}, {"index", r.lineage.index},
                           {"purpose", static_cast<std::uint32_t>(r.lineage.purpose)}}},
              {"delta", r.settings.delta},
              {"sigma", r.settings.sigma},
              {"alpha", r.settings.alpha},
              {"dt", r.settings.dt},
              {"T", r.settings.horizon},
              {"members", r.reference_members},
              {"lambda", r.lambda},
              {"sup_delta", jnum(r.sup_delta())},
              {"sup_dev", jnum(r.sup_dev())},
              {"energy_drift", jnum(r.energy_drift())},
              {"always_in_b_and_c", all_bc}};
    jl << j.dump() << '\n';
}

void run_compare(const ExperimentConfig& c, Output& out, RunResult& res) {
    const std::size_t n = c.n_grid.front();
    const Execution exec = exec_of(c);
    const TrialBatch batch(c.distribution.build(), c.trial_settings(n), c.seed, exec);
    const auto records = batch.run_many(0, c.trials, exec);
    auto csv = trial_csv(out);
    auto jl = out.jsonl("trial_summary.jsonl", "one object per trial: lineage, settings and sup statistics");
    for (const auto& r : records) write_trial(*csv, jl, r);
    res.summary.push_back("n = " + std::to_string(n) + ", lambda = " + num(batch.lambda()) + ", " +
                          std::to_string(records.size()) + " trials");
    for (const auto& r : records) {
        res.summary.push_back("trial " + std::to_string(r.trial) + ": Delta(0) = " + num(r.snapshots.front().delta) +
                              ", sup Delta = " + num(r.sup_delta()) + ", J(T) = " + num(r.snapshots.back().j));
    }
}

void run_chaos(const ExperimentConfig& c, Output& out, RunResult& res) {
    SweepConfig sc;
    sc.dist = c.distribution.build();
    sc.base = c.trial_settings(c.n_grid.front());
    sc.n_grid = c.n_grid;
    sc.trials = c.trials;
    sc.master_seed = c.seed;
    auto csv = trial_csv(out);
    auto jl = out.jsonl("trial_summary.jsonl", "one object per trial: lineage, settings and sup statistics");
    const SweepResult sweep = concentration_sweep(sc, exec_of(c), [&](std::size_t, const std::vector<TrialRecord>& recs) {
        for (const auto& r : recs) write_trial(*csv, jl, r);
    });
    auto rates = out.csv("rates.csv", {{"n", "particle count"},
                                       {"trials", "trials at this n"},
                                       {"delta_exceed", "trials with sup_t Delta >= n^-delta"},
                                       {"delta_prob", "empirical probability, or <3/trials when zero"},
                                       {"delta_ci_lo", "Wilson 95% lower bound"},
                                       {"delta_ci_hi", "Wilson 95% upper bound"},
                                       {"dev_exceed", "trials with sup_t |Psi - Phi|_inf >= n^-delta"},
                                       {"dev_prob", "empirical probability, or <3/trials when zero"},
                                       {"dev_ci_lo", "Wilson 95% lower bound"},
                                       {"dev_ci_hi", "Wilson 95% upper bound"},
                                       {"median_scaled_sup_delta", "median of n^delta sup_t Delta"}});
    auto prob = [](std::size_t count, double p, std::size_t trials) {
        return count == 0 ? "<3/" + std::to_string(trials) : num(p);
    };
    for (const auto& r : sweep.table.rows) {
        rates->row({num(r.n), num(r.trials), num(r.delta_exceed), prob(r.delta_exceed, r.delta_prob, r.trials),
                    num(r.delta_ci.lo), num(r.delta_ci.hi), num(r.dev_exceed), prob(r.dev_exceed, r.dev_prob, r.trials),
                    num(r.dev_ci.lo), num(r.dev_ci.hi), num(r.median_scaled_sup_delta)});
        res.summary.push_back("n = " + std::to_string(r.n) + ": P(sup Delta >= n^-delta) = " +
                              prob(r.delta_exceed, r.delta_prob, r.trials) + " [" + num(r.delta_ci.lo) + ", " +
                              num(r.delta_ci.hi) + "], median n^delta sup Delta = " + num(r.median_scaled_sup_delta));
    }
    auto fit = out.jsonl("slopes.jsonl", "log-probability vs log n slopes over rows with nonzero counts");
    fit << json{{"event", "sup_delta"}, {"slope", sweep.table.delta_slope ? json(*sweep.table.delta_slope) : json(nullptr)}}
               .dump()
        << '\n';
    fit << json{{"event", "sup_dev"}, {"slope", sweep.table.dev_slope ? json(*sweep.table.dev_slope) : json(nullptr)}}
               .dump()
        << '\n';
    res.summary.push_back("slope of log P vs log n: " +
                          (sweep.table.delta_slope ? num(*sweep.table.delta_slope) : std::string("n/a")));
}

void run_rate(const ExperimentConfig& c, Output& out, RunResult& res) {
    auto csv = out.csv("rate.csv", {{"p", "Wasserstein order"},
                                    {"n", "sample size"},
                                    {"trials", "trials at this n"},
                                    {"median", "median W_p(mu^n, proxy subsample)"},
                                    {"approximate", "1 when the sliced estimator was used"}});
    auto jl = out.jsonl("rate_fit.jsonl", "fitted log-log exponent with bootstrap 95% interval, per p");
    for (const double p : c.p_list) {
        SamplingRateConfig rc;
        rc.dist = c.distribution.build();
        rc.p = p;
        rc.n_grid = c.n_grid;
        rc.trials = c.trials;
        rc.master_seed = c.seed;
        rc.proxy_factor = c.proxy_factor;
        rc.exact_max_n = c.exact_max_n;
        rc.projections = c.projections;
        rc.bootstrap = c.bootstrap;
        const SamplingRateFit f = sampling_rate_fit(rc, exec_of(c));
        for (std::size_t g = 0; g < f.n.size(); ++g) {
            csv->row({num(p), num(f.n[g]), num(c.trials), num(f.median[g]), flag(f.approximate[g])});
        }
        jl << json{{"p", p}, {"exponent", f.exponent}, {"ci_lo", f.ci.lo}, {"ci_hi", f.ci.hi}}.dump() << '\n';
        res.summary.push_back("p = " + num(p) + ": exponent " + num(f.exponent) + " [" + num(f.ci.lo) + ", " +
                              num(f.ci.hi) + "]");
    }
}

void run_wasserstein(const ExperimentConfig& c, Output& out, RunResult& res) {
    if (c.input_a.empty() || c.input_b.empty()) {
        throw ConfigError("config: fields inputs.a and inputs.b must name the two snapshot files");
    }
    const Snapshot a = read_snapshot(c.input_a);
    const Snapshot b = read_snapshot(c.input_b);
    const EmpiricalMeasure mu = EmpiricalMeasure::from_state(a.state);
    const EmpiricalMeasure nu = EmpiricalMeasure::from_state(b.state);
    const bool exact = mu.size() == nu.size() && mu.size() <= c.exact_max_n;
    auto csv = out.csv("wasserstein.csv", {{"metric", "W_p or W_inf"},
                                           {"p", "order (inf for the bottleneck distance)"},
                                           {"value", "distance"},
                                           {"approximate", "1 when the sliced estimator was used"}});
    WassersteinOptions opt;
    opt.exact_max_n = c.exact_max_n;
    opt.projections = c.projections;
    opt.seed = c.seed;
    for (const double p : c.p_list) {
        const WassersteinResult w =
            wasserstein_p(mu, nu, p, exact ? WassersteinMode::exact : WassersteinMode::sliced, opt);
        csv->row({"W_p", num(p), num(w.value), flag(w.approximate)});
        res.summary.push_back("W_" + num(p) + " = " + num(w.value) + (w.approximate ? " (sliced)" : ""));
    }
    if (exact) {
        const double w = wasserstein_inf(mu, nu);
        csv->row({"W_inf", "inf", num(w), "0"});
        res.summary.push_back("W_inf = " + num(w));
    }
}

void run_audit(const ExperimentConfig& c, Output& out, RunResult& res) {
    auto csv = out.csv("audit.csv", {{"n", "particle count (0 for checks independent of n)"},
                                     {"check", "check name"},
                                     {"passed", "1 when the check holds on every sample"},
                                     {"worst_margin", "smallest bound minus observed value"},
                                     {"samples", "number of samples"}});
    std::size_t failures = 0;
    auto record = [&](std::size_t n, const std::string& name, bool ok, double margin, std::size_t samples) {
        csv->row({num(n), name, flag(ok), num(margin), num(samples)});
        if (!ok) {
            ++failures;
            res.summary.push_back("FAILED " + name + " at n = " + std::to_string(n) + " (margin " + num(margin) + ")");
        }
    };
    for (const std::size_t n : c.n_grid) {
        const KernelSpec spec = kernel_of(c, n);
        const AuditReport rep = s_alpha_delta_audit(spec, c.audit_samples, c.seed);
        for (const auto& cond : rep.conditions) {
            record(n, "kernel_condition_" + cond.name, cond.passed, cond.worst_margin, cond.samples);
        }
        // Lipschitz majorant on random admissible pairs: |q| <= 10, |xi|_inf < 2 n^-delta.
        RandomStream rng({c.seed, n, StreamPurpose::audit});
        const double rc = spec.cutoff_radius();
        double worst = std::numeric_limits<double>::infinity();
        std::size_t bad = 0;
        for (std::size_t s = 0; s < c.audit_samples; ++s) {
            const Vec3 q = rng.in_ball(10.0);
            Vec3 xi;
            do {
                xi = {(2.0 * rng.uniform() - 1.0) * 2.0 * rc, (2.0 * rng.uniform() - 1.0) * 2.0 * rc,
                      (2.0 * rng.uniform() - 1.0) * 2.0 * rc};
            } while (!(max_norm(xi) < 2.0 * rc));
            const LipschitzCheck lc = lipschitz_check(spec, q, xi);
            worst = std::min(worst, lc.rhs + 1e-12 - lc.lhs);
            if (!lc.holds) ++bad;
        }
        record(n, "lipschitz_majorant", bad == 0, worst, c.audit_samples);
    }
    const DecayCriterion dc = decay_criterion_check(c.distribution.build());
    record(0, "initial_decay_criterion", dc.satisfied, 0.0, 1);
    std::vector<double> g(10000);
    for (std::size_t k = 0; k < g.size(); ++k) {
        g[k] = std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(g.size() - 1));
    }
    const RightDerivativeReport rd = right_derivative_check(g);
    record(0, "running_max_right_derivative", rd.holds, rd.worst_margin, g.size());
    res.summary.insert(res.summary.begin(), failures == 0 ? "all audit checks passed"
                                                          : std::to_string(failures) + " audit checks failed");
    if (failures) throw DomainError("audit: " + std::to_string(failures) + " checks failed, see audit.csv");
}

}  // namespace

RunResult run_experiment(const std::string& subcommand, const ExperimentConfig& config) {
    using Fn = void (*)(const ExperimentConfig&, Output&, RunResult&);
    static const std::pair<const char*, Fn> table[] = {
        {"sample", run_sample}, {"evolve", run_evolve}, {"meanfield", run_meanfield},     {"compare", run_compare},
        {"chaos", run_chaos},   {"rate", run_rate},     {"wasserstein", run_wasserstein}, {"audit", run_audit},
    };
    Fn fn = nullptr;
    for (const auto& [name, f] : table) {
        if (subcommand == name) fn = f;
    }
    if (!fn) throw ConfigError("unknown subcommand '" + subcommand + "'");
    const auto start = std::chrono::steady_clock::now();
    RunResult res;
    Output out(config.output_root() / subcommand, subcommand);
    res.directory = out.dir();
    std::exception_ptr failure;
    try {
        fn(config, out, res);
    } catch (const DomainError&) {
        // Audit failures still leave a complete manifest behind.
        if (subcommand != "audit") throw;
        failure = std::current_exception();
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.finish(config, wall);
    res.files = out.files();
    res.files.push_back("manifest.json");
    res.files.push_back("schema.json");
    if (failure) std::rethrow_exception(failure);
    return res;
}

}  // namespace vplab

#include "vplab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vplab/rng.hpp"

namespace vplab {

KernelSpec::KernelSpec(int sigma, double alpha, double delta, std::size_t n)
    : sigma_(sigma), alpha_(alpha), delta_(delta), n_(n) {
    if (sigma != 1 && sigma != -1) throw DomainError("kernel: sigma must be +1 or -1");
    if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("kernel: alpha must lie in (0, 2]");
    if (!(delta >= 0.0 && delta < 1.0 / (1.0 + alpha))) {
        std::ostringstream msg;
        msg << "kernel: delta must lie in [0, 1/(1+alpha)) = [0, " << 1.0 / (1.0 + alpha) << "), got " << delta;
        throw DomainError(msg.str());
    }
    if (n < 1) throw DomainError("kernel: n must be positive");
}

double KernelSpec::cutoff_radius() const { return std::pow(static_cast<double>(n_), -delta_); }
double KernelSpec::inner_slope() const { return std::pow(static_cast<double>(n_), delta_ * (alpha_ + 1.0)); }
double KernelSpec::majorant_inner() const { return std::pow(static_cast<double>(n_), 3.0 * delta_); }
double KernelSpec::log_n() const { return std::log(static_cast<double>(n_)); }

namespace {

void require_finite(const Vec3& q, const char* what) {
    if (!is_finite(q)) throw DomainError(std::string(what) + ": non-finite input");
}

// Radial factor f(r) with k(q) = sigma * f(|q|) * q. Shared by the scalar and
// the bulk paths so both see the same branch decision.
template <bool Coulomb>
inline double radial_factor(double r2, double r, double rc, double slope, double exponent) {
    if (r < rc) return slope;
    if constexpr (Coulomb) {
        return 1.0 / (r2 * r);
    } else {
        return std::pow(r, exponent);
    }
}

}  // namespace

Vec3 kernel_eval(const KernelSpec& spec, const Vec3& q) {
    require_finite(q, "kernel_eval");
    const double r2 = dot(q, q);
    if (r2 == 0.0) return {};
    const double r = std::sqrt(r2);
    const double f = spec.coulomb()
                         ? radial_factor<true>(r2, r, spec.cutoff_radius(), spec.inner_slope(), -3.0)
                         : radial_factor<false>(r2, r, spec.cutoff_radius(), spec.inner_slope(), -(spec.alpha() + 1.0));
    return (spec.sigma() * f) * q;
}

double majorant_eval(const KernelSpec& spec, const Vec3& q) {
    require_finite(q, "majorant_eval");
    const double r2 = dot(q, q);
    const double r = std::sqrt(r2);
    if (r >= 3.0 * spec.cutoff_radius()) return 54.0 / (r2 * r);
    return spec.majorant_inner();
}

double potential_eval(const KernelSpec& spec, double r) {
    const double a = spec.alpha();
    auto outer = [a](double s) { return a == 1.0 ? -std::log(s) : std::pow(s, 1.0 - a) / (a - 1.0); };
    const double rc = spec.cutoff_radius();
    if (r >= rc) return outer(r);
    const double slope = spec.inner_slope();
    return outer(rc) + 0.5 * slope * (rc * rc - r * r);
}

LipschitzCheck lipschitz_check(const KernelSpec& spec, const Vec3& q, const Vec3& xi) {
    require_finite(q, "lipschitz_check");
    require_finite(xi, "lipschitz_check");
    const double step = max_norm(xi);
    if (!(step < 2.0 * spec.cutoff_radius())) {
        throw DomainError("lipschitz_check: |xi|_inf must be < 2 n^-delta");
    }
    LipschitzCheck out;
    out.lhs = max_norm(kernel_eval(spec, q) - kernel_eval(spec, q + xi));
    out.rhs = majorant_eval(spec, q) * step;
    out.holds = out.lhs <= out.rhs + 1e-12;
    return out;
}

bool AuditReport::all_passed() const {
    return std::all_of(conditions.begin(), conditions.end(), [](const ConditionResult& c) { return c.passed; });
}

AuditReport s_alpha_delta_audit(const KernelSpec& spec, std::size_t sample_count, std::uint64_t seed) {
    return s_alpha_delta_audit(spec, sample_count, seed, [&spec](const Vec3& q) { return kernel_eval(spec, q); });
}

AuditReport s_alpha_delta_audit(const KernelSpec& spec, std::size_t sample_count, std::uint64_t seed,
                                const KernelFunction& kernel) {
    if (sample_count < 1) throw DomainError("s_alpha_delta_audit: sample_count must be >= 1");

    const double alpha = spec.alpha();
    const double rc = spec.cutoff_radius();
    const double inner_bound = std::pow(static_cast<double>(spec.n()), spec.delta() * alpha);
    const double grad_bound = spec.inner_slope();
    const double fd_step = 1e-6 * rc;
    constexpr double kRelSlack = 1e-9;

    ConditionResult decay{"(i) |k(q)| <= c/|q|^alpha outside cutoff, c = 1", true, std::numeric_limits<double>::infinity(), 0};
    ConditionResult agree{"(ii) k equals the unregularized kernel outside cutoff", true, std::numeric_limits<double>::infinity(), 0};
    ConditionResult inner{"(iii) |k(q)| <= n^(delta alpha) inside cutoff", true, std::numeric_limits<double>::infinity(), 0};
    ConditionResult grad{"(iv) |grad k(q)| <= n^(delta(alpha+1)) inside cutoff", true, std::numeric_limits<double>::infinity(), 0};
    double c_hat = 0.0;

    RandomStream rng(StreamKey{seed, 0, StreamPurpose::audit});
    const double log_lo = std::log(1e-6);
    const double log_hi = std::log(10.0);
    auto record = [](ConditionResult& c, double bound, double observed) {
        const double margin = bound - observed;
        ++c.samples;
        c.worst_margin = std::min(c.worst_margin, margin);
        if (observed > bound * (1.0 + kRelSlack) + 1e-300) c.passed = false;
    };

    for (std::size_t s = 0; s < sample_count; ++s) {
        const double r = std::exp(log_lo + (log_hi - log_lo) * rng.uniform());
        const Vec3 q = r * rng.unit_vector();
        const Vec3 kq = kernel(q);
        const double mag = norm(kq);
        if (r >= rc) {
            record(decay, std::pow(r, -alpha), mag);
            c_hat = std::max(c_hat, mag * std::pow(r, alpha));
            const Vec3 pure = (spec.sigma() * std::pow(r, -(alpha + 1.0))) * q;
            const double diff = norm(kq - pure);
            record(agree, 1e-12 * norm(pure), diff);
        } else {
            record(inner, inner_bound, mag);
            if (r + fd_step < rc) {
                // Largest column norm of the central-difference Jacobian.
                double g = 0.0;
                for (int axis = 0; axis < 3; ++axis) {
                    Vec3 e{};
                    (axis == 0 ? e.x : axis == 1 ? e.y : e.z) = fd_step;
                    const Vec3 col = (1.0 / (2.0 * fd_step)) * (kernel(q + e) - kernel(q - e));
                    g = std::max(g, norm(col));
                }
                // Central differences of a linear map carry O(eps/h) rounding noise.
                record(grad, grad_bound * (1.0 + 1e-6), g);
            }
        }
    }

    AuditReport report;
    for (ConditionResult* c : {&decay, &agree, &inner, &grad}) {
        if (c->samples == 0) c->worst_margin = 0.0;
        report.conditions.push_back(*c);
    }
    report.estimated_c = c_hat;
    return report;
}

SourceCloud::SourceCloud(std::span<const Vec3> positions) {
    x.resize(positions.size());
    y.resize(positions.size());
    z.resize(positions.size());
    for (std::size_t j = 0; j < positions.size(); ++j) {
        x[j] = positions[j].x;
        y[j] = positions[j].y;
        z[j] = positions[j].z;
    }
}

namespace {

constexpr std::size_t kLanes = 8;

template <bool Coulomb, bool WithMajorant>
void field_rows(const KernelSpec& spec, const SourceCloud& src, std::span<const Vec3> targets, double weight,
                std::span<Vec3> field, std::span<double> majorant, std::size_t begin, std::size_t end) {
    const double rc = spec.cutoff_radius();
    const double slope = spec.inner_slope();
    const double exponent = -(spec.alpha() + 1.0);
    const double rc3 = 3.0 * rc;
    const double l_inner = spec.majorant_inner();
    const double scale = spec.sigma() * weight;
    const std::size_t m = src.size();
    const double* sx = src.x.data();
    const double* sy = src.y.data();
    const double* sz = src.z.data();
    const std::size_t blocked = m - m % kLanes;

    for (std::size_t i = begin; i < end; ++i) {
        const double tx = targets[i].x;
        const double ty = targets[i].y;
        const double tz = targets[i].z;
        double ax[kLanes] = {}, ay[kLanes] = {}, az[kLanes] = {}, al[kLanes] = {};

        auto body = [&](std::size_t j, std::size_t lane) {
            const double dx = tx - sx[j];
            const double dy = ty - sy[j];
            const double dz = tz - sz[j];
            const double r2 = dx * dx + dy * dy + dz * dz;
            const double r = std::sqrt(r2);
            const double f = radial_factor<Coulomb>(r2, r, rc, slope, exponent);
            ax[lane] += f * dx;
            ay[lane] += f * dy;
            az[lane] += f * dz;
            if constexpr (WithMajorant) al[lane] += r >= rc3 ? 54.0 / (r2 * r) : l_inner;
        };

        for (std::size_t j = 0; j < blocked; j += kLanes) {
            for (std::size_t lane = 0; lane < kLanes; ++lane) body(j + lane, lane);
        }
        for (std::size_t j = blocked; j < m; ++j) body(j, j - blocked);

        double sx_acc = 0.0, sy_acc = 0.0, sz_acc = 0.0, sl_acc = 0.0;
        for (std::size_t lane = 0; lane < kLanes; ++lane) {
            sx_acc += ax[lane];
            sy_acc += ay[lane];
            sz_acc += az[lane];
            sl_acc += al[lane];
        }
        field[i] = {scale * sx_acc, scale * sy_acc, scale * sz_acc};
        if constexpr (WithMajorant) majorant[i] = weight * sl_acc;
    }
}

template <bool WithMajorant>
void dispatch_field(const KernelSpec& spec, const SourceCloud& sources, std::span<const Vec3> targets, double weight,
                    std::span<Vec3> field, std::span<double> majorant, const Execution& exec) {
    if (field.size() != targets.size()) throw DomainError("accumulate_field: output size mismatch");
    if (WithMajorant && majorant.size() != targets.size()) throw DomainError("accumulate_field: output size mismatch");
    for (const Vec3& t : targets) require_finite(t, "accumulate_field");
    parallel_for(targets.size(), exec, [&](std::size_t begin, std::size_t end) {
        if (spec.coulomb()) {
            field_rows<true, WithMajorant>(spec, sources, targets, weight, field, majorant, begin, end);
        } else {
            field_rows<false, WithMajorant>(spec, sources, targets, weight, field, majorant, begin, end);
        }
    });
}

}  // namespace

void accumulate_field(const KernelSpec& spec, const SourceCloud& sources, std::span<const Vec3> targets, double weight,
                      std::span<Vec3> out, const Execution& exec) {
    dispatch_field<false>(spec, sources, targets, weight, out, {}, exec);
}

void accumulate_field_and_majorant(const KernelSpec& spec, const SourceCloud& sources, std::span<const Vec3> targets,
                                   double weight, std::span<Vec3> field, std::span<double> majorant,
                                   const Execution& exec) {
    dispatch_field<true>(spec, sources, targets, weight, field, majorant, exec);
}

}  // namespace vplab

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vplab/parallel.hpp"
#include "vplab/types.hpp"

namespace vplab {

/// Interaction definition: sign, singularity exponent, cutoff exponent and
/// particle count. The cutoff radius is always n^-delta.
class KernelSpec {
  public:
    KernelSpec(int sigma, double alpha, double delta, std::size_t n);

    int sigma() const { return sigma_; }
    double alpha() const { return alpha_; }
    double delta() const { return delta_; }
    std::size_t n() const { return n_; }
    bool coulomb() const { return alpha_ == 2.0; }

    double cutoff_radius() const;
    /// n^{delta(alpha+1)}: slope of the linear branch inside the cutoff.
    double inner_slope() const;
    /// n^{3 delta}: value of the Lipschitz majorant inside 3 n^-delta.
    double majorant_inner() const;
    double log_n() const;

    /// Same (sigma, alpha, delta) with a different particle count.
    KernelSpec with_n(std::size_t n) const { return {sigma_, alpha_, delta_, n}; }

  private:
    int sigma_;
    double alpha_;
    double delta_;
    std::size_t n_;
};

/// Regularized kernel k^N_delta. k(0) = 0.
Vec3 kernel_eval(const KernelSpec& spec, const Vec3& q);

/// Lipschitz majorant l^N_delta: 54/|q|^3 for |q| >= 3 n^-delta, else n^{3 delta}.
double majorant_eval(const KernelSpec& spec, const Vec3& q);

/// Radial potential V with -grad V = sigma^-1 k (sigma applied by the caller
/// through `potential_eval`), continuous, V -> 0 at infinity for alpha > 1.
double potential_eval(const KernelSpec& spec, double r);

struct LipschitzCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = true;
};

LipschitzCheck lipschitz_check(const KernelSpec& spec, const Vec3& q, const Vec3& xi);

struct ConditionResult {
    std::string name;
    bool passed = true;
    /// Smallest (bound - observed) over the samples; negative on failure.
    double worst_margin = 0.0;
    std::size_t samples = 0;
};

struct AuditReport {
    std::vector<ConditionResult> conditions;
    /// Estimated constant c in |k(q)| <= c/|q|^alpha outside the cutoff.
    double estimated_c = 0.0;
    bool all_passed() const;
};

/// Any kernel q -> R^3; used to audit user supplied or corrupted kernels.
using KernelFunction = std::function<Vec3(const Vec3&)>;

/// Sweeps radii log-uniformly in [1e-6, 10] and checks the S^alpha_delta
/// structural conditions: outer decay, inner bound n^{delta alpha} and the
/// finite-difference gradient bound n^{delta(alpha+1)} inside the cutoff.
AuditReport s_alpha_delta_audit(const KernelSpec& spec, std::size_t sample_count, std::uint64_t seed = 0);
AuditReport s_alpha_delta_audit(const KernelSpec& spec, std::size_t sample_count, std::uint64_t seed,
                                const KernelFunction& kernel);

/// Structure-of-arrays copy of positions for the O(N M) summation loops.
struct SourceCloud {
    std::vector<double> x, y, z;

    SourceCloud() = default;
    explicit SourceCloud(std::span<const Vec3> positions);
    std::size_t size() const { return x.size(); }
    Vec3 at(std::size_t j) const { return {x[j], y[j], z[j]}; }
};

/// out[i] = weight * sum_j k(targets[i] - source_j), j accumulated in a fixed
/// lane-blocked order so results are bitwise independent of `exec`.
void accumulate_field(const KernelSpec& spec, const SourceCloud& sources, std::span<const Vec3> targets,
                      double weight, std::span<Vec3> out, const Execution& exec = {});

/// Same loop, also returning weight * sum_j l(targets[i] - source_j).
void accumulate_field_and_majorant(const KernelSpec& spec, const SourceCloud& sources,
                                   std::span<const Vec3> targets, double weight, std::span<Vec3> field,
                                   std::span<double> majorant, const Execution& exec = {});

}  // namespace vplab

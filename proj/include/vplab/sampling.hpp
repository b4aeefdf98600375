#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "vplab/rng.hpp"
#include "vplab/types.hpp"

namespace vplab {

/// Bounded spatial density rho(q) with unit mass.
struct SpatialProfile {
    enum class Kind { uniform_ball, truncated_gaussian };

    Kind kind = Kind::uniform_ball;
    double radius = 1.0;  ///< ball radius, or truncation radius for the Gaussian
    double width = 1.0;   ///< Gaussian standard deviation per axis

    static SpatialProfile uniform_ball(double radius);
    static SpatialProfile truncated_gaussian(double width, double truncation_radius);

    double density(const Vec3& q) const;
    double sup_norm() const;
    /// Integral of |q|^2 rho(q).
    double second_moment() const;
    Vec3 draw(RandomStream& rng) const;
};

/// A density f0 supplied by the caller. `draw` must produce i.i.d. samples.
struct CustomDistribution {
    std::string name;
    std::function<void(RandomStream&, Vec3& q, Vec3& p)> draw;
    std::function<double(const Vec3& q, const Vec3& p)> density;
    /// Optional certificate f0(q,p) <= rho_bar(q) * theta(|p|).
    std::function<double(const Vec3& q)> rho_bar;
    std::function<double(double)> theta;
    /// Radius beyond which the dominance check does not sample.
    double certificate_range = 10.0;
};

class InitialDistribution {
  public:
    enum class Kind { thermal, uniform_ball, product_custom };

    /// rho(q) * (beta/pi)^{3/2} e^{-beta p^2}.
    static InitialDistribution thermal(SpatialProfile profile, double beta);
    /// Uniform on {|q| <= r_q} x {|p| <= p_max}.
    static InitialDistribution uniform_ball(double r_q, double p_max);
    static InitialDistribution custom(std::shared_ptr<const CustomDistribution> custom,
                                      double moment_order = 0.0);

    Kind kind() const { return kind_; }
    const SpatialProfile& spatial() const { return spatial_; }
    double beta() const { return beta_; }
    double p_max() const { return p_max_; }
    const CustomDistribution* custom_distribution() const { return custom_.get(); }
    /// Largest k with a certified finite moment; infinity for the built-ins.
    double moment_order() const { return moment_order_; }

    /// Sup norm of f0 (infinity when unknown).
    double sup_norm() const;
    double density(const Vec3& q, const Vec3& p) const;
    /// Exact integral of |z|^2 f0 for built-ins.
    std::optional<double> exact_second_moment() const;
    void draw(RandomStream& rng, Vec3& q, Vec3& p) const;

    std::string describe() const;

  private:
    Kind kind_ = Kind::thermal;
    SpatialProfile spatial_{};
    double beta_ = 1.0;
    double p_max_ = 1.0;
    double moment_order_ = std::numeric_limits<double>::infinity();
    std::shared_ptr<const CustomDistribution> custom_;
};

/// n i.i.d. draws of f0 in draw order; deterministic in (dist, n, key).
PhaseState sample(const InitialDistribution& dist, std::size_t n, const StreamKey& key);

struct DecayCriterion {
    bool satisfied = false;
    std::string witness;
};

/// Checks f0(q,p) <= rho_bar(q) theta(|p|) with theta decreasing and
/// integrable against d^3p. Built-in kinds are certified in closed form.
DecayCriterion decay_criterion_check(const InitialDistribution& dist);

struct MomentEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
};

/// Monte Carlo estimate of the integral of |z|^k df0 with z = (q, p) in R^6.
MomentEstimate moment_estimate(const InitialDistribution& dist, double k, std::size_t n_mc, const StreamKey& key);

}  // namespace vplab

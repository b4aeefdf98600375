#include "vplab/sampling.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace vplab {

namespace {

// P(|X| <= a) for X standard normal in R^3.
double chi3_cdf(double a) {
    return std::erf(a / std::numbers::sqrt2) - std::sqrt(2.0 / std::numbers::pi) * a * std::exp(-0.5 * a * a);
}

// E[|X|^2 ; |X| <= a] for X standard normal in R^3.
double chi3_truncated_second(double a) {
    return 3.0 * std::erf(a / std::numbers::sqrt2) -
           std::sqrt(2.0 / std::numbers::pi) * (3.0 * a + a * a * a) * std::exp(-0.5 * a * a);
}

double ball_volume(double r) { return 4.0 / 3.0 * std::numbers::pi * r * r * r; }

}  // namespace

SpatialProfile SpatialProfile::uniform_ball(double radius) {
    if (!(radius > 0.0)) throw DomainError("uniform_ball profile: radius must be positive");
    return {Kind::uniform_ball, radius, 1.0};
}

SpatialProfile SpatialProfile::truncated_gaussian(double width, double truncation_radius) {
    if (!(width > 0.0) || !(truncation_radius > 0.0)) {
        throw DomainError("truncated_gaussian profile: width and truncation radius must be positive");
    }
    return {Kind::truncated_gaussian, truncation_radius, width};
}

double SpatialProfile::density(const Vec3& q) const {
    const double r = norm(q);
    if (r > radius) return 0.0;
    if (kind == Kind::uniform_ball) return 1.0 / ball_volume(radius);
    return sup_norm() * std::exp(-0.5 * r * r / (width * width));
}

double SpatialProfile::sup_norm() const {
    if (kind == Kind::uniform_ball) return 1.0 / ball_volume(radius);
    const double mass = std::pow(2.0 * std::numbers::pi * width * width, 1.5) * chi3_cdf(radius / width);
    return 1.0 / mass;
}

double SpatialProfile::second_moment() const {
    if (kind == Kind::uniform_ball) return 0.6 * radius * radius;
    const double a = radius / width;
    return width * width * chi3_truncated_second(a) / chi3_cdf(a);
}

Vec3 SpatialProfile::draw(RandomStream& rng) const {
    if (kind == Kind::uniform_ball) return rng.in_ball(radius);
    for (;;) {
        const Vec3 q = width * rng.normal3();
        if (norm(q) <= radius) return q;
    }
}

InitialDistribution InitialDistribution::thermal(SpatialProfile profile, double beta) {
    if (!(beta > 0.0)) throw DomainError("thermal distribution: beta must be positive");
    InitialDistribution d;
    d.kind_ = Kind::thermal;
    d.spatial_ = profile;
    d.beta_ = beta;
    return d;
}

InitialDistribution InitialDistribution::uniform_ball(double r_q, double p_max) {
    if (!(p_max > 0.0)) throw DomainError("uniform_ball distribution: p_max must be positive");
    InitialDistribution d;
    d.kind_ = Kind::uniform_ball;
    d.spatial_ = SpatialProfile::uniform_ball(r_q);
    d.p_max_ = p_max;
    return d;
}

InitialDistribution InitialDistribution::custom(std::shared_ptr<const CustomDistribution> custom, double moment_order) {
    if (!custom || !custom->draw) throw ConfigError("custom distribution: a draw function is required");
    InitialDistribution d;
    d.kind_ = Kind::product_custom;
    d.custom_ = std::move(custom);
    d.moment_order_ = moment_order;
    return d;
}

double InitialDistribution::sup_norm() const {
    switch (kind_) {
        case Kind::thermal:
            return spatial_.sup_norm() * std::pow(beta_ / std::numbers::pi, 1.5);
        case Kind::uniform_ball:
            return spatial_.sup_norm() / ball_volume(p_max_);
        case Kind::product_custom:
            break;
    }
    return std::numeric_limits<double>::infinity();
}

double InitialDistribution::density(const Vec3& q, const Vec3& p) const {
    switch (kind_) {
        case Kind::thermal:
            return spatial_.density(q) * std::pow(beta_ / std::numbers::pi, 1.5) * std::exp(-beta_ * dot(p, p));
        case Kind::uniform_ball:
            return norm(p) <= p_max_ ? spatial_.density(q) / ball_volume(p_max_) : 0.0;
        case Kind::product_custom:
            if (custom_->density) return custom_->density(q, p);
            break;
    }
    throw ConfigError("density: distribution '" + describe() + "' has no density");
}

std::optional<double> InitialDistribution::exact_second_moment() const {
    switch (kind_) {
        case Kind::thermal:
            return spatial_.second_moment() + 1.5 / beta_;
        case Kind::uniform_ball:
            return spatial_.second_moment() + 0.6 * p_max_ * p_max_;
        case Kind::product_custom:
            break;
    }
    return std::nullopt;
}

void InitialDistribution::draw(RandomStream& rng, Vec3& q, Vec3& p) const {
    switch (kind_) {
        case Kind::thermal:
            q = spatial_.draw(rng);
            // e^{-beta p^2}: independent N(0, 1/(2 beta)) components.
            p = std::sqrt(0.5 / beta_) * rng.normal3();
            return;
        case Kind::uniform_ball:
            q = spatial_.draw(rng);
            p = rng.in_ball(p_max_);
            return;
        case Kind::product_custom:
            custom_->draw(rng, q, p);
            return;
    }
    throw ConfigError("sample: unsupported distribution kind");
}

std::string InitialDistribution::describe() const {
    std::ostringstream out;
    auto profile = [&] {
        if (spatial_.kind == SpatialProfile::Kind::uniform_ball) {
            out << "uniform_ball(R=" << spatial_.radius << ")";
        } else {
            out << "truncated_gaussian(s=" << spatial_.width << ",R=" << spatial_.radius << ")";
        }
    };
    switch (kind_) {
        case Kind::thermal:
            out << "thermal(rho=";
            profile();
            out << ",beta=" << beta_ << ")";
            break;
        case Kind::uniform_ball:
            out << "uniform_ball(R_q=" << spatial_.radius << ",P_max=" << p_max_ << ")";
            break;
        case Kind::product_custom:
            out << "custom(" << custom_->name << ")";
            break;
    }
    return out.str();
}

PhaseState sample(const InitialDistribution& dist, std::size_t n, const StreamKey& key) {
    if (n < 1) throw DomainError("sample: n must be >= 1");
    RandomStream rng(key);
    PhaseState state(n);
    for (std::size_t i = 0; i < n; ++i) dist.draw(rng, state.q[i], state.p[i]);
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_finite(state.q[i]) || !is_finite(state.p[i])) {
            throw NumericalError("sample: non-finite draw", i, -1, 0);
        }
    }
    return state;
}

DecayCriterion decay_criterion_check(const InitialDistribution& dist) {
    std::ostringstream w;
    switch (dist.kind()) {
        case InitialDistribution::Kind::thermal:
            w << "rho_bar = rho (sup " << dist.spatial().sup_norm() << "), theta(r) = (beta/pi)^{3/2} e^{-beta r^2}"
              << " with beta = " << dist.beta() << ": decreasing and integrable";
            return {true, w.str()};
        case InitialDistribution::Kind::uniform_ball:
            w << "rho_bar = rho (sup " << dist.spatial().sup_norm() << "), theta(r) = 1{r <= " << dist.p_max()
              << "}/|B_p|: compact momentum support";
            return {true, w.str()};
        case InitialDistribution::Kind::product_custom:
            break;
    }

    const CustomDistribution& c = *dist.custom_distribution();
    if (!c.rho_bar || !c.theta) return {false, "no dominating pair supplied"};
    if (!c.density) return {false, "dominating pair supplied but no density to verify it against"};

    const double range = c.certificate_range;
    constexpr int kGrid = 4096;
    double previous = c.theta(0.0);
    for (int g = 1; g <= 4 * kGrid; ++g) {
        const double r = 4.0 * range * g / (4.0 * kGrid);
        const double value = c.theta(r);
        if (!(value <= previous) || value < 0.0) {
            w << "theta is not monotone decreasing near r = " << r;
            return {false, w.str()};
        }
        previous = value;
    }
    // Radial integral of theta over [0, R] against [0, 4R]: the tail must be negligible.
    auto radial_mass = [&](double upper) {
        double acc = 0.0;
        const int steps = 8 * kGrid;
        const double h = upper / steps;
        for (int s = 0; s < steps; ++s) {
            const double r = (s + 0.5) * h;
            acc += 4.0 * std::numbers::pi * r * r * c.theta(r) * h;
        }
        return acc;
    };
    const double inner = radial_mass(range);
    const double outer = radial_mass(4.0 * range);
    if (!std::isfinite(outer) || outer > inner * 1.01 + 1e-12) {
        w << "theta does not appear integrable: mass(0.." << range << ") = " << inner << ", mass(0.." << 4 * range
          << ") = " << outer;
        return {false, w.str()};
    }
    RandomStream rng(StreamKey{0, 0, StreamPurpose::audit});
    constexpr int kChecks = 20000;
    for (int s = 0; s < kChecks; ++s) {
        Vec3 q, p;
        if (s % 2 == 0) {
            c.draw(rng, q, p);
        } else {
            q = rng.in_ball(range);
            p = rng.in_ball(range);
        }
        const double f = c.density(q, p);
        const double bound = c.rho_bar(q) * c.theta(norm(p));
        if (f > bound * (1.0 + 1e-9)) {
            w << "f0 exceeds rho_bar*theta at q=(" << q.x << "," << q.y << "," << q.z << ")";
            return {false, w.str()};
        }
    }
    w << "supplied pair verified: theta decreasing on [0," << 4 * range << "], radial mass " << outer
      << ", dominance on " << kChecks << " points";
    return {true, w.str()};
}

MomentEstimate moment_estimate(const InitialDistribution& dist, double k, std::size_t n_mc, const StreamKey& key) {
    if (!(k >= 0.0)) throw DomainError("moment_estimate: k must be >= 0");
    if (n_mc < 2) throw DomainError("moment_estimate: need at least two samples");
    RandomStream rng(key);
    double mean = 0.0, m2 = 0.0;
    for (std::size_t s = 0; s < n_mc; ++s) {
        Vec3 q, p;
        dist.draw(rng, q, p);
        const double value = std::pow(dot(q, q) + dot(p, p), 0.5 * k);
        // Welford update.
        const double d = value - mean;
        mean += d / static_cast<double>(s + 1);
        m2 += d * (value - mean);
    }
    const double variance = m2 / static_cast<double>(n_mc - 1);
    return {mean, std::sqrt(variance / static_cast<double>(n_mc)), n_mc};
}

}  // namespace vplab

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace vplab {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    constexpr double operator[](std::size_t k) const { return k == 0 ? x : (k == 1 ? y : z); }
    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline double max_norm(const Vec3& a) { return std::max({std::abs(a.x), std::abs(a.y), std::abs(a.z)}); }
inline bool is_finite(const Vec3& a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }

/// A point of phase space R^6, position first.
using Point6 = std::array<double, 6>;

/// Ordered N-particle configuration Z = (q_i, p_i). Index i is stable for
/// the whole lifetime of a trajectory.
struct PhaseState {
    double t = 0.0;
    std::vector<Vec3> q;
    std::vector<Vec3> p;

    PhaseState() = default;
    explicit PhaseState(std::size_t n, double t0 = 0.0) : t(t0), q(n), p(n) {}

    std::size_t size() const { return q.size(); }
    Point6 point(std::size_t i) const { return {q[i].x, q[i].y, q[i].z, p[i].x, p[i].y, p[i].z}; }
};

/// Equal-weight atomic measure on phase-space points.
struct EmpiricalMeasure {
    std::vector<Point6> points;

    std::size_t size() const { return points.size(); }
    double weight() const { return points.empty() ? 0.0 : 1.0 / static_cast<double>(points.size()); }

    static EmpiricalMeasure from_state(const PhaseState& s);
    /// Positions scaled by `q_scale` before measuring (the anisotropic
    /// sqrt(log N)|dq| + |dp| geometry uses q_scale = sqrt(log N)).
    static EmpiricalMeasure from_state(const PhaseState& s, double q_scale);
};

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Precondition violations and invalid arguments.
class DomainError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Non-finite values produced during time integration.
class NumericalError : public Error {
  public:
    NumericalError(const std::string& what, std::size_t particle, int coordinate, std::size_t step)
        : Error(what), particle_(particle), coordinate_(coordinate), step_(step) {}

    std::size_t particle() const { return particle_; }
    int coordinate() const { return coordinate_; }
    std::size_t step() const { return step_; }

  private:
    std::size_t particle_;
    int coordinate_;
    std::size_t step_;
};

class FormatError : public Error {
  public:
    FormatError(const std::string& what, std::size_t offset) : Error(what), offset_(offset) {}
    std::size_t offset() const { return offset_; }

  private:
    std::size_t offset_;
};

}  // namespace vplab

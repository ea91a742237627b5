#pragma once

#include <cmath>
#include <span>

#include "jcas/linalg.hpp"

namespace jcas {

inline constexpr double kSpeedOfLight = 2.99792458e8;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Far-field direction. Azimuth in [-pi, pi], elevation in [0, pi] measured
/// from the +z axis; at the poles (elevation 0 or pi) azimuth is defined as 0.
struct Direction {
    double azimuth = 0.0;
    double elevation = 0.0;
};

/// Uniform planar array: p_count x q_count elements on a rectangular grid
/// with uniform spacing `element_spacing`, operating at `wavelength`.
struct UpaSpec {
    int p_count = 1;
    int q_count = 1;
    double element_spacing = 0.0;  // meters
    double wavelength = 0.0;       // meters
    int size() const { return p_count * q_count; }
};

struct Location3D {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline Location3D operator-(const Location3D& a, const Location3D& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}
inline Location3D operator+(const Location3D& a, const Location3D& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
}
inline double norm(const Location3D& a) {
    return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z);
}
inline double squared_distance(const Location3D& a, const Location3D& b) {
    const Location3D d = a - b;
    return d.x * d.x + d.y * d.y + d.z * d.z;
}
inline Eigen::Vector3d as_vector(const Location3D& a) {
    return {a.x, a.y, a.z};
}

/// Per-element phase argument of the steering vector: the (p, q) element of
/// the array contributes exp(-j * 2pi/lambda * d * (p cos(az) + q sin(az)) * sin(el)).
double steering_phase(const UpaSpec& array, const Direction& dir, int p, int q);

/// Steering vector of length p_count * q_count. Flattening order is p-major:
/// flat index = p * q_count + q. Every module in this library relies on this
/// one ordering.
ComplexVector steering_vector(const UpaSpec& array, const Direction& dir);

/// PQ x L matrix whose column l is steering_vector(array, dirs[l]).
/// Throws std::invalid_argument on an empty direction list.
ComplexMatrix steering_matrix(const UpaSpec& array, std::span<const Direction> dirs);

/// Polar-to-Cartesian mapping in the sensing node's local frame:
/// (r sin(el) cos(az), r sin(el) sin(az), r cos(el)). Requires r >= 0.
Location3D location_from_polar(double range, const Direction& dir);

struct PolarCoords {
    double range = 0.0;
    Direction direction;
};

/// Inverse of location_from_polar. Throws std::invalid_argument on a zero
/// offset (degenerate direction).
PolarCoords polar_from_offset(const Location3D& offset);

/// Closing speed between two moving points: positive when the distance
/// between them is shrinking.
double closing_speed(const Location3D& pos_a, const Eigen::Vector3d& vel_a,
                     const Location3D& pos_b, const Eigen::Vector3d& vel_b);

}  // namespace jcas

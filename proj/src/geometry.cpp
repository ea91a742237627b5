#include "jcas/geometry.hpp"

namespace jcas {

double steering_phase(const UpaSpec& array, const Direction& dir, int p, int q) {
    const double scale = 2.0 * kPi / array.wavelength * array.element_spacing;
    const double se = std::sin(dir.elevation);
    return -scale * (p * std::cos(dir.azimuth) + q * std::sin(dir.azimuth)) * se;
}

ComplexVector steering_vector(const UpaSpec& array, const Direction& dir) {
    ComplexVector a(array.size());
    for (int p = 0; p < array.p_count; ++p) {
        for (int q = 0; q < array.q_count; ++q) {
            const double phase = steering_phase(array, dir, p, q);
            a(p * array.q_count + q) = Complex(std::cos(phase), std::sin(phase));
        }
    }
    return a;
}

ComplexMatrix steering_matrix(const UpaSpec& array, std::span<const Direction> dirs) {
    if (dirs.empty()) {
        throw std::invalid_argument("steering_matrix: empty direction list");
    }
    ComplexMatrix a(array.size(), static_cast<Eigen::Index>(dirs.size()));
    for (size_t l = 0; l < dirs.size(); ++l) {
        a.col(static_cast<Eigen::Index>(l)) = steering_vector(array, dirs[l]);
    }
    return a;
}

Location3D location_from_polar(double range, const Direction& dir) {
    if (range < 0.0) {
        throw std::invalid_argument("location_from_polar: negative range");
    }
    const double se = std::sin(dir.elevation);
    return {range * se * std::cos(dir.azimuth),
            range * se * std::sin(dir.azimuth),
            range * std::cos(dir.elevation)};
}

PolarCoords polar_from_offset(const Location3D& offset) {
    const double r = norm(offset);
    if (r == 0.0) {
        throw std::invalid_argument("polar_from_offset: zero offset has no direction");
    }
    PolarCoords out;
    out.range = r;
    out.direction.elevation = std::acos(std::clamp(offset.z / r, -1.0, 1.0));
    const double lateral = std::hypot(offset.x, offset.y);
    out.direction.azimuth = lateral == 0.0 ? 0.0 : std::atan2(offset.y, offset.x);
    return out;
}

double closing_speed(const Location3D& pos_a, const Eigen::Vector3d& vel_a,
                     const Location3D& pos_b, const Eigen::Vector3d& vel_b) {
    const Eigen::Vector3d d = as_vector(pos_a) - as_vector(pos_b);
    const double r = d.norm();
    if (r == 0.0) {
        throw std::invalid_argument("closing_speed: coincident endpoints");
    }
    return -d.dot(vel_a - vel_b) / r;
}

}  // namespace jcas

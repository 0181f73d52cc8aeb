#pragma once

#include <cmath>

namespace rfpose {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }

    Vec3 normalized() const {
        double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{0.0, 0.0, 0.0};
    }
};

// Spherical convention used throughout: theta is the angle toward +x,
// phi the angle toward +y, boresight along +z.
//   x = r sin(theta), y = r cos(theta) sin(phi), z = r cos(theta) cos(phi)
inline Vec3 spherical_to_cartesian(double theta, double phi, double r) {
    return {r * std::sin(theta), r * std::cos(theta) * std::sin(phi),
            r * std::cos(theta) * std::cos(phi)};
}

struct Spherical {
    double theta = 0.0, phi = 0.0, r = 0.0;
};

inline Spherical cartesian_to_spherical(const Vec3& p) {
    Spherical s;
    s.r = p.norm();
    s.theta = s.r > 0.0 ? std::asin(p.x / s.r) : 0.0;
    s.phi = (p.y == 0.0 && p.z == 0.0) ? 0.0 : std::atan2(p.y, p.z);
    return s;
}

struct Box3 {
    Vec3 lo, hi;
    bool contains(const Vec3& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
               p.z <= hi.z;
    }
};

constexpr double kDegree = 0.017453292519943295;

}  // namespace rfpose

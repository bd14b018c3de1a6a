#pragma once

#include <cmath>
#include <complex>

namespace rytov {

using cplx = std::complex<double>;

/// Position vector in 3-D, coordinates in meters. The x axis is the
/// propagation axis wherever a propagation direction matters.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Point3 operator+(const Point3& a, const Point3& b) {
        return {a.x + b.x, a.y + b.y, a.z + b.z};
    }
    friend Point3 operator-(const Point3& a, const Point3& b) {
        return {a.x - b.x, a.y - b.y, a.z - b.z};
    }
    friend Point3 operator*(double s, const Point3& p) {
        return {s * p.x, s * p.y, s * p.z};
    }
    friend bool operator==(const Point3& a, const Point3& b) {
        return a.x == b.x && a.y == b.y && a.z == b.z;
    }
};

inline double norm(const Point3& p) {
    return std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
}

inline double distance(const Point3& a, const Point3& b) {
    return norm(a - b);
}

/// Transverse vector (y, z) in the plane orthogonal to the propagation axis.
struct TransversePoint {
    double y = 0.0;
    double z = 0.0;

    friend TransversePoint operator-(const TransversePoint& a, const TransversePoint& b) {
        return {a.y - b.y, a.z - b.z};
    }
    friend TransversePoint operator-(const TransversePoint& a) { return {-a.y, -a.z}; }
    friend bool operator==(const TransversePoint& a, const TransversePoint& b) {
        return a.y == b.y && a.z == b.z;
    }
};

inline double norm2(const TransversePoint& p) { return p.y * p.y + p.z * p.z; }
inline double norm(const TransversePoint& p) { return std::sqrt(norm2(p)); }
inline double dot(const TransversePoint& a, const TransversePoint& b) {
    return a.y * b.y + a.z * b.z;
}

}  // namespace rytov

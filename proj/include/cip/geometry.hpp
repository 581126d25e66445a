#pragma once

#include <array>
#include <cmath>

namespace cip {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }

// Signed area of triangle (a,b,c); positive for counter-clockwise orientation.
inline double signed_area(Vec2 a, Vec2 b, Vec2 c) {
    return 0.5 * cross(b - a, c - a);
}

// Circumradius / inradius ratio, the shape-regularity measure.
inline double shape_ratio(Vec2 a, Vec2 b, Vec2 c) {
    const double la = norm(b - c);
    const double lb = norm(c - a);
    const double lc = norm(a - b);
    const double area = std::abs(signed_area(a, b, c));
    const double circum = la * lb * lc / (4.0 * area);
    const double inr = 2.0 * area / (la + lb + lc);
    return circum / inr;
}

} // namespace cip

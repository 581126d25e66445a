#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cip {

// Quadrature on the reference triangle {(0,0),(1,0),(0,1)}, points stored in
// barycentric coordinates (l0,l1,l2). Weights sum to the reference area 1/2.
struct QuadratureRule {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    int exactness = 0;
};

// Quadrature on the reference segment [0,1]. Weights sum to 1.
struct EdgeQuadratureRule {
    std::vector<double> points;
    std::vector<double> weights;
    int exactness = 0;
};

// Gauss-Legendre nodes/weights on [0,1], by Newton iteration on P_n.
inline void gauss_legendre_01(int n, std::vector<double>& points, std::vector<double>& weights) {
    points.assign(n, 0.0);
    weights.assign(n, 0.0);
    const double pi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double r = std::cos(pi * (4 * i + 3) / (4 * n + 2));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 0.0, p2 = 1.0;
            for (int j = 0; j < n; ++j) {
                const double p0 = p1;
                p1 = p2;
                p2 = ((2 * j + 1) * r * p1 - j * p0) / (j + 1);
            }
            dp = n * (r * p2 - p1) / (r * r - 1.0);
            const double dr = p2 / dp;
            r -= dr;
            if (std::abs(dr) < 1e-16 * (1.0 + std::abs(r))) {
                break;
            }
        }
        const double w = 1.0 / ((1.0 - r * r) * dp * dp);
        points[i] = 0.5 - r / 2.0;
        points[n - 1 - i] = 0.5 + r / 2.0;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

inline EdgeQuadratureRule edge_quadrature(int degree) {
    if (degree < 0 || degree > 10) {
        throw std::invalid_argument("edge_quadrature: unsupported degree " + std::to_string(degree));
    }
    EdgeQuadratureRule rule;
    const int n = (degree + 2) / 2;
    gauss_legendre_01(n, rule.points, rule.weights);
    rule.exactness = degree;
    return rule;
}

// Collapsed (Duffy) product rule: x = u(1-v), y = uv, jacobian u. A polynomial
// of total degree d becomes degree <= d+1 in u and <= d in v, so the tensor
// Gauss rule below is exact for total degree <= d.
inline QuadratureRule triangle_quadrature(int degree) {
    if (degree < 0 || degree > 10) {
        throw std::invalid_argument("triangle_quadrature: unsupported degree " + std::to_string(degree));
    }
    const int nu = (degree + 3) / 2;
    const int nv = (degree + 2) / 2;
    std::vector<double> up, uw, vp, vw;
    gauss_legendre_01(nu, up, uw);
    gauss_legendre_01(nv, vp, vw);
    QuadratureRule rule;
    rule.exactness = degree;
    for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nv; ++j) {
            const double u = up[i], v = vp[j];
            const double x = u * (1.0 - v);
            const double y = u * v;
            rule.points.push_back({1.0 - x - y, x, y});
            rule.weights.push_back(uw[i] * vw[j] * u);
        }
    }
    return rule;
}

} // namespace cip

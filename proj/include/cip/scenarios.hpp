#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "cip/analysis.hpp"
#include "cip/mesh.hpp"
#include "cip/operators.hpp"
#include "cip/timestepper.hpp"

namespace cip {

// One of the canonical experiments: domain, velocity, data, final time, and
// the exact solution via the backward characteristic flow.
struct Scenario {
    std::string name;
    DomainKind domain = DomainKind::square;
    VelocityField velocity;
    std::function<double(Vec2, double)> initial;  // u0(x); time argument unused
    std::function<double(Vec2, double)> source;   // empty: f = 0
    std::function<double(Vec2, double)> inflow;   // empty: no inflow datum
    double final_time = 1.0;
    std::function<Vec2(Vec2, double)> backward_flow; // X(x,t), X(.,0) = id
    // Default focus of the weighted norm (the smooth bump, where present).
    Vec2 weight_center{0.0, 0.0};
    double weight_r0 = 0.2;

    bool periodic() const { return domain == DomainKind::periodic_square; }

    double exact(Vec2 x, double t) const { return initial(backward_flow(x, t), 0.0); }

    Mesh make_mesh(int nele) const {
        switch (domain) {
            case DomainKind::disc: return generate_disc(nele);
            case DomainKind::square: return generate_square(nele, false);
            case DomainKind::periodic_square: return generate_square(nele, true);
        }
        throw std::logic_error("Scenario::make_mesh");
    }

    double nominal_h(int nele) const {
        return domain == DomainKind::disc ? 2.0 * 3.14159265358979323846 / nele : 1.0 / nele;
    }
};

namespace detail {

inline double gaussian_bump(Vec2 x, Vec2 c) {
    const Vec2 d = x - c;
    return std::exp(-30.0 * (d.x * d.x + d.y * d.y));
}

inline double cylinder(Vec2 x, Vec2 c, double r) {
    return norm(x - c) < r ? 1.0 : 0.0;
}

} // namespace detail

enum class DiscData { smooth, rough, combined };

// Solid-body rotation in the unit disc, beta = (y,-x), one full turn.
inline Scenario make_rotating_disc(DiscData variant) {
    Scenario sc;
    sc.domain = DomainKind::disc;
    switch (variant) {
        case DiscData::smooth: sc.name = "rotating_disc_smooth"; break;
        case DiscData::rough: sc.name = "rotating_disc_rough"; break;
        case DiscData::combined: sc.name = "rotating_disc_combined"; break;
    }
    sc.velocity.eval = [](Vec2 x, double) { return Vec2{x.y, -x.x}; };
    sc.velocity.divergence_free = true;
    sc.velocity.beta_inf = 1.0;
    sc.initial = [variant](Vec2 x, double) {
        double v = 0.0;
        if (variant != DiscData::rough) {
            v += detail::gaussian_bump(x, {0.5, 0.0});
        }
        if (variant != DiscData::smooth) {
            v += detail::cylinder(x, {-0.5, 0.0}, 0.2);
        }
        return v;
    };
    sc.final_time = 2.0 * 3.14159265358979323846;
    sc.backward_flow = [](Vec2 x, double t) {
        const double c = std::cos(t), s = std::sin(t);
        return Vec2{x.x * c - x.y * s, x.x * s + x.y * c};
    };
    sc.weight_center = {0.5, 0.0};
    return sc;
}

// Transport through the unit square, beta = (1,0): cylinder in the middle,
// Gaussian centered on the left boundary, exact trace as inflow datum.
inline Scenario make_square_transport(double final_time) {
    if (final_time != 1.0 && final_time != 3.0) {
        throw std::invalid_argument("make_square_transport: T must be 1 or 3");
    }
    Scenario sc;
    sc.name = final_time == 1.0 ? "square_transport" : "square_longterm";
    sc.domain = DomainKind::square;
    sc.velocity.eval = [](Vec2, double) { return Vec2{1.0, 0.0}; };
    sc.velocity.divergence_free = true;
    sc.velocity.beta_inf = 1.0;
    sc.initial = [](Vec2 x, double) {
        return detail::cylinder(x, {0.5, 0.5}, 0.2) + detail::gaussian_bump(x, {0.0, 0.5});
    };
    sc.backward_flow = [](Vec2 x, double t) { return Vec2{x.x - t, x.y}; };
    sc.inflow = [sc_initial = sc.initial, flow = sc.backward_flow](Vec2 x, double t) {
        return sc_initial(flow(x, t), 0.0);
    };
    sc.final_time = final_time;
    sc.weight_center = {0.5, 0.5};
    return sc;
}

// Periodic testbed: cylinder data advected once around the periodic square.
inline Scenario make_periodic_cylinder() {
    Scenario sc;
    sc.name = "periodic_cylinder";
    sc.domain = DomainKind::periodic_square;
    sc.velocity.eval = [](Vec2, double) { return Vec2{1.0, 0.0}; };
    sc.velocity.divergence_free = true;
    sc.velocity.beta_inf = 1.0;
    sc.initial = [](Vec2 x, double) { return detail::cylinder(x, {0.5, 0.5}, 0.2); };
    sc.backward_flow = [](Vec2 x, double t) {
        const double xs = x.x - t;
        return Vec2{xs - std::floor(xs), x.y};
    };
    sc.final_time = 1.0;
    sc.weight_center = {0.5, 0.5};
    return sc;
}

inline Scenario make_scenario(const std::string& name) {
    if (name == "rotating_disc_smooth") {
        return make_rotating_disc(DiscData::smooth);
    }
    if (name == "rotating_disc_rough") {
        return make_rotating_disc(DiscData::rough);
    }
    if (name == "rotating_disc_combined") {
        return make_rotating_disc(DiscData::combined);
    }
    if (name == "square_transport") {
        return make_square_transport(1.0);
    }
    if (name == "square_longterm") {
        return make_square_transport(3.0);
    }
    if (name == "periodic_cylinder") {
        return make_periodic_cylinder();
    }
    throw std::invalid_argument("unknown scenario '" + name + "'");
}

} // namespace cip

#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <utility>

#include "mpcb/sim/world.hpp"

namespace mpcb {

struct OrientedRect {
    double cx{0.0}, cy{0.0}, heading{0.0}, length{5.0}, width{2.0};

    std::array<std::array<double, 2>, 4> corners() const {
        const double c = std::cos(heading), s = std::sin(heading);
        const double hl = 0.5 * length, hw = 0.5 * width;
        std::array<std::array<double, 2>, 4> out{};
        const double sl[4] = {hl, hl, -hl, -hl}, sw[4] = {hw, -hw, -hw, hw};
        for (int i = 0; i < 4; ++i) out[i] = {cx + sl[i] * c - sw[i] * s, cy + sl[i] * s + sw[i] * c};
        return out;
    }
};

/// Separating-axis test. Touching within `tol` counts as separated.
inline bool rects_overlap(const OrientedRect& a, const OrientedRect& b, double tol = 1e-9) {
    const auto ca = a.corners(), cb = b.corners();
    const double axes[4][2] = {{std::cos(a.heading), std::sin(a.heading)},
                               {-std::sin(a.heading), std::cos(a.heading)},
                               {std::cos(b.heading), std::sin(b.heading)},
                               {-std::sin(b.heading), std::cos(b.heading)}};
    for (const auto& ax : axes) {
        double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
        for (int i = 0; i < 4; ++i) {
            const double pa = ca[i][0] * ax[0] + ca[i][1] * ax[1];
            const double pb = cb[i][0] * ax[0] + cb[i][1] * ax[1];
            amin = std::min(amin, pa), amax = std::max(amax, pa);
            bmin = std::min(bmin, pb), bmax = std::max(bmax, pb);
        }
        if (amax <= bmin + tol || bmax <= amin + tol) return false;
    }
    return true;
}

inline OrientedRect ego_footprint(const WorldState& w) {
    return {w.ego.x, w.ego.y, w.ego.theta, w.geometry.length, w.geometry.width};
}

inline OrientedRect vehicle_footprint(const WorldState& w, const Vehicle& v) {
    const double heading = (v.vx == 0.0 && v.vy == 0.0) ? 0.0 : std::atan2(v.vy, v.vx);
    return {v.x, v.y, heading, w.geometry.length, w.geometry.width};
}

inline constexpr int kEgoId = -1;

/// First ego/vehicle overlap in vehicle order, as (ego id, vehicle id).
inline std::optional<std::pair<int, int>> detect_collision(const WorldState& w) {
    const auto e = ego_footprint(w);
    for (const auto& v : w.vehicles) {
        if (std::abs(v.x - w.ego.x) > 2.0 * w.geometry.length + 1.0) continue;
        if (rects_overlap(e, vehicle_footprint(w, v))) return std::make_pair(kEgoId, v.id);
    }
    return std::nullopt;
}

}  // namespace mpcb

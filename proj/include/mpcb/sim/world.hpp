#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpcb/primitives/params.hpp"

namespace mpcb {

/// Symbolic command from the planner. MPC pipelines use the first three.
enum class TaskCommand { LANE_LEFT, IDLE, LANE_RIGHT, FASTER, SLOWER };

inline const char* to_string(TaskCommand c) {
    switch (c) {
        case TaskCommand::LANE_LEFT: return "LANE_LEFT";
        case TaskCommand::IDLE: return "IDLE";
        case TaskCommand::LANE_RIGHT: return "LANE_RIGHT";
        case TaskCommand::FASTER: return "FASTER";
        case TaskCommand::SLOWER: return "SLOWER";
    }
    return "?";
}

inline std::optional<TaskCommand> command_from_string(const std::string& s) {
    for (auto c : {TaskCommand::LANE_LEFT, TaskCommand::IDLE, TaskCommand::LANE_RIGHT, TaskCommand::FASTER,
                   TaskCommand::SLOWER})
        if (s == to_string(c)) return c;
    return std::nullopt;
}

inline bool is_mpc_command(TaskCommand c) {
    return c == TaskCommand::LANE_LEFT || c == TaskCommand::IDLE || c == TaskCommand::LANE_RIGHT;
}
inline bool is_lane_change(TaskCommand c) { return c == TaskCommand::LANE_LEFT || c == TaskCommand::LANE_RIGHT; }

/// Straight multi-lane road; lane 0 is the leftmost and sits at y = 0, y grows to the right.
struct RoadGeometry {
    int lanes{3};
    double lane_width{4.0};

    double center(int lane) const { return lane * lane_width; }
    double left_edge() const { return -0.5 * lane_width; }
    double right_edge() const { return center(lanes - 1) + 0.5 * lane_width; }
    int lane_of(double y) const {
        return std::clamp(static_cast<int>(std::lround(y / lane_width)), 0, lanes - 1);
    }
    bool valid_lane(int lane) const { return lane >= 0 && lane < lanes; }
};

struct VehicleGeometry {
    double length{5.0};
    double width{2.0};
};

struct EgoState {
    double x{0.0}, y{0.0}, theta{0.0}, v{0.0};

    friend bool operator==(const EgoState&, const EgoState&) = default;
};

struct Vehicle {
    int id{0};
    int lane{0};
    double x{0.0}, y{0.0}, vx{0.0}, vy{0.0};
    double desired_speed{20.0};

    PvState pv() const { return {x, y, vx, vy}; }
    friend bool operator==(const Vehicle&, const Vehicle&) = default;
};

struct IdmParams {
    double a_max{3.0};
    double b_comfort{5.0};
    double s0{5.0};        ///< minimum bumper gap
    double headway{1.5};
    double delta{4.0};
    double decel_limit{9.0};
};

struct WorldState {
    EgoState ego;
    std::vector<Vehicle> vehicles;
    RoadGeometry road;
    VehicleGeometry geometry;
    double time{0.0};
    std::int64_t step{0};

    int ego_lane() const { return road.lane_of(ego.y); }
    const Vehicle* find(int id) const {
        for (const auto& v : vehicles)
            if (v.id == id) return &v;
        return nullptr;
    }

    /// Nearest vehicle in `lane` strictly ahead of (or, with ahead=false, behind or level with) the ego.
    const Vehicle* neighbor(int lane, bool ahead) const {
        const Vehicle* best = nullptr;
        for (const auto& v : vehicles) {
            if (v.lane != lane) continue;
            const double dx = v.x - ego.x;
            if (ahead ? dx <= 0.0 : dx > 0.0) continue;
            if (!best || std::abs(dx) < std::abs(best->x - ego.x) ||
                (std::abs(dx) == std::abs(best->x - ego.x) && v.id < best->id))
                best = &v;
        }
        return best;
    }
};

namespace detail {

inline double idm_accel(const IdmParams& p, double v, double v0, std::optional<double> gap, double lead_v) {
    double a = 1.0 - std::pow(v / std::max(v0, 0.1), p.delta);
    if (gap) {
        const double s_star = p.s0 + std::max(0.0, v * p.headway + v * (v - lead_v) / (2.0 * std::sqrt(p.a_max * p.b_comfort)));
        const double s = std::max(*gap, 0.1);
        a -= (s_star / s) * (s_star / s);
    }
    return std::clamp(p.a_max * a, -p.decel_limit, p.a_max);
}

}  // namespace detail

/// IDM acceleration of vehicle `i`; the ego counts as a leader in any lane it laterally overlaps.
inline double idm_acceleration(const WorldState& w, std::size_t i, const IdmParams& p) {
    const auto& me = w.vehicles[i];
    std::optional<double> gap;
    double lead_v = 0.0;
    auto consider = [&](double x, double v) {
        const double g = x - me.x - w.geometry.length;
        if (x > me.x && (!gap || g < *gap)) {
            gap = g;
            lead_v = v;
        }
    };
    for (std::size_t j = 0; j < w.vehicles.size(); ++j)
        if (j != i && w.vehicles[j].lane == me.lane) consider(w.vehicles[j].x, w.vehicles[j].vx);
    const double overlap = 0.5 * w.road.lane_width + 0.5 * w.geometry.width;
    if (std::abs(w.ego.y - w.road.center(me.lane)) < overlap) consider(w.ego.x, w.ego.v * std::cos(w.ego.theta));
    return detail::idm_accel(p, me.vx, me.desired_speed, gap, lead_v);
}

/// One control step: ego by explicit-Euler kinematic bicycle (speed clamped at 0),
/// surrounding vehicles by IDM in their lanes (accelerations computed from the pre-step world).
inline WorldState step_world(const WorldState& w, ControlInput u, double dt, const EgoParams& ego = {},
                             const IdmParams& idm = {}) {
    if (!(dt > 0.0)) throw InvalidParams("dt must be > 0");
    WorldState next = w;
    std::vector<double> acc(w.vehicles.size());
    for (std::size_t i = 0; i < w.vehicles.size(); ++i) acc[i] = idm_acceleration(w, i, idm);
    for (std::size_t i = 0; i < w.vehicles.size(); ++i) {
        auto& v = next.vehicles[i];
        v.x += v.vx * dt;
        v.vx = std::max(0.0, v.vx + acc[i] * dt);
    }
    u = ego.input_box().clamp(u);
    const auto& e = w.ego;
    next.ego.x = e.x + e.v * std::cos(e.theta) * dt;
    next.ego.y = e.y + e.v * std::sin(e.theta) * dt;
    next.ego.theta = e.theta + e.v / ego.wheelbase * std::tan(u.delta) * dt;
    next.ego.v = std::max(0.0, e.v + u.a * dt);
    next.time = w.time + dt;
    next.step = w.step + 1;
    return next;
}

}  // namespace mpcb

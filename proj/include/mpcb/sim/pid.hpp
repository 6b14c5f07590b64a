#pragma once

// Baseline controller in the style of HighwayEnv's ControlledVehicle: a
// lateral position -> heading -> heading-rate cascade and a proportional speed
// loop. It enforces no safety constraints.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mpcb/sim/world.hpp"

namespace mpcb {

struct PidGains {
    double tau_lateral{0.6};   ///< s, lateral offset -> lateral speed
    double tau_heading{0.2};   ///< s, heading error -> heading rate
    double tau_speed{0.6};     ///< s, speed error -> acceleration
    double speed_step{5.0};    ///< FASTER / SLOWER setpoint change
    double speed_min{0.0};
    double speed_max{40.0};

    void validate() const {
        if (!(tau_lateral > 0.0) || !(tau_heading > 0.0) || !(tau_speed > 0.0))
            throw InvalidParams("pid time constants must be > 0");
        if (!(speed_step > 0.0) || speed_min > speed_max) throw InvalidParams("invalid pid speed settings");
    }
};

struct PidState {
    int target_lane{0};
    double speed_setpoint{25.0};
};

/// Applies one command to the controller setpoints.
inline void apply_command(PidState& s, TaskCommand cmd, const RoadGeometry& road, const PidGains& g = {}) {
    switch (cmd) {
        case TaskCommand::LANE_LEFT: s.target_lane = std::max(0, s.target_lane - 1); break;
        case TaskCommand::LANE_RIGHT: s.target_lane = std::min(road.lanes - 1, s.target_lane + 1); break;
        case TaskCommand::FASTER: s.speed_setpoint = std::min(g.speed_max, s.speed_setpoint + g.speed_step); break;
        case TaskCommand::SLOWER: s.speed_setpoint = std::max(g.speed_min, s.speed_setpoint - g.speed_step); break;
        case TaskCommand::IDLE: break;
    }
}

inline ControlInput pid_control(const PidState& s, const WorldState& w, const PidGains& g = {},
                                const EgoParams& ego = {}) {
    const double v = std::max(w.ego.v, 1.0);
    const double offset = w.ego.y - w.road.center(s.target_lane);
    const double v_lat = -offset / g.tau_lateral;
    const double heading_ref = std::clamp(std::asin(std::clamp(v_lat / v, -1.0, 1.0)), -std::numbers::pi / 4,
                                          std::numbers::pi / 4);
    const double heading_err = std::remainder(heading_ref - w.ego.theta, 2.0 * std::numbers::pi);
    const double rate = heading_err / g.tau_heading;
    const double delta = std::atan(rate * ego.wheelbase / v);
    const double a = (s.speed_setpoint - w.ego.v) / g.tau_speed;
    return ego.input_box().clamp({a, delta});
}

}  // namespace mpcb

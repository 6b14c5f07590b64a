#pragma once

// Primitive pool for highway driving:
//
//   KBM  ego dynamics     X = (x, y, theta, v), J = 0
//   LK   lane keep        J on lateral offset to the lane centre, heading, yaw rate, steering
//   LC   lane change      LK with y_ref plus a gap constraint to the target-lane neighbours
//   CS   constant speed   J on speed error, acceleration, jerk
//   ACC  adaptive cruise  J on gap error, acceleration, jerk plus a hard gap constraint
//   PV   parallel vehicle own constant-velocity state plus a circular keep-out constraint
//
// Yaw rate is evaluated from the model, (v / L) tan(delta). Steering rate and jerk are
// finite differences against the previous stage's input.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mpcb/core/primitive.hpp"
#include "mpcb/primitives/params.hpp"

namespace mpcb {

namespace names {
inline constexpr const char* x = "x";
inline constexpr const char* y = "y";
inline constexpr const char* theta = "theta";
inline constexpr const char* v = "v";

inline std::string pv(int id, const char* component) { return "pv" + std::to_string(id) + "." + component; }
}  // namespace names

inline StateSchema ego_schema() {
    return {{names::x, "m"}, {names::y, "m"}, {names::theta, "rad"}, {names::v, "m/s"}};
}

inline double yaw_rate(double v, double delta, double wheelbase) { return v / wheelbase * std::tan(delta); }

inline MpcPrimitive make_kbm(const EgoParams& ego) {
    ego.validate();
    PrimitiveTerm t;
    t.name = "KBM";
    t.kind = PrimitiveKind::ego_dynamics;
    t.own_state = ego_schema();
    const double L = ego.wheelbase;
    t.dynamics = [L](const StageArgs& s, std::span<double> dx) {
        const double th = s.x[2], v = s.x[3];
        dx[0] = v * std::cos(th);
        dx[1] = v * std::sin(th);
        dx[2] = yaw_rate(v, s.u.delta, L);
        dx[3] = s.u.a;
    };
    return {std::move(t), ego.input_box()};
}

namespace detail {

inline PrimitiveTerm lateral_term(const char* name, const EgoParams& ego, const std::array<double, 5>& q,
                                  double y_target) {
    PrimitiveTerm t;
    t.name = name;
    t.kind = PrimitiveKind::lateral_task;
    t.reads = {names::y, names::theta, names::v};
    t.cost_terms = 5;
    const double L = ego.wheelbase;
    t.cost = [q, y_target, L](const StageArgs& s) {
        const double ey = s.x[0] - y_target;
        const double th = s.x[1];
        const double thdot = yaw_rate(s.x[2], s.u.delta, L);
        const double ddot = (s.u.delta - s.u_prev.delta) / s.dt;
        return q[0] * ey * ey + q[1] * th * th + q[2] * thdot * thdot + q[3] * s.u.delta * s.u.delta +
               q[4] * ddot * ddot;
    };
    t.ineq_labels = {"y_min", "y_max", "delta_min", "delta_max"};
    const double y_min = ego.y_min, y_max = ego.y_max, d_min = ego.delta_min, d_max = ego.delta_max;
    t.ineq = [y_min, y_max, d_min, d_max](const StageArgs& s, std::span<double> g) {
        g[0] = y_min - s.x[0];
        g[1] = s.x[0] - y_max;
        g[2] = d_min - s.u.delta;
        g[3] = s.u.delta - d_max;
    };
    return t;
}

inline double longitudinal_cost(const std::array<double, 3>& q, double error, const StageArgs& s) {
    const double jerk = (s.u.a - s.u_prev.a) / s.dt;
    return q[0] * error * error + q[1] * s.u.a * s.u.a + q[2] * jerk * jerk;
}

}  // namespace detail

/// Lane keep around `lane_center` (the ordinate of the lane being kept).
inline MpcPrimitive make_lane_keep(const EgoParams& ego, const TaskParams& task, double lane_center) {
    ego.validate();
    task.validate();
    return {detail::lateral_term("LK", ego, task.q_lk, lane_center), ego.input_box()};
}

/// Lane change towards `y_ref`. The gap term keeps the ego at least d_safe_lc longitudinally
/// away from every listed target-lane neighbour (lead and/or follower), each extrapolated at
/// constant velocity from `stamp`. One constraint component regardless of neighbour count.
inline MpcPrimitive make_lane_change(const EgoParams& ego, const TaskParams& task, double y_ref,
                                     std::vector<PvState> neighbors, double stamp = 0.0,
                                     bool gap_enabled = true) {
    ego.validate();
    task.validate();
    if (gap_enabled && neighbors.empty())
        throw MissingTarget("lane change gap constraint enabled but no target-lane vehicle given");
    auto t = detail::lateral_term("LC", ego, task.q_lc, y_ref);
    if (gap_enabled) {
        t.reads.push_back(names::x);  // slot 3
        t.ineq_labels.push_back("gap");
        const double y_min = ego.y_min, y_max = ego.y_max, d_min = ego.delta_min, d_max = ego.delta_max;
        const double d_safe = task.d_safe_lc;
        t.ineq = [=, nb = std::move(neighbors)](const StageArgs& s, std::span<double> g) {
            g[0] = y_min - s.x[0];
            g[1] = s.x[0] - y_max;
            g[2] = d_min - s.u.delta;
            g[3] = s.u.delta - d_max;
            double nearest = std::numeric_limits<double>::infinity();
            for (const auto& pv : nb) nearest = std::min(nearest, std::abs(s.x[3] - pv.predict(s.t - stamp).x));
            g[4] = d_safe - nearest;
        };
    }
    return {std::move(t), ego.input_box()};
}

inline MpcPrimitive make_constant_speed(const EgoParams& ego, const TaskParams& task) {
    ego.validate();
    task.validate();
    PrimitiveTerm t;
    t.name = "CS";
    t.kind = PrimitiveKind::longitudinal_task;
    t.reads = {names::v};
    t.cost_terms = 3;
    t.cost = [q = task.q_cs, v_ref = task.v_ref](const StageArgs& s) {
        return detail::longitudinal_cost(q, s.x[0] - v_ref, s);
    };
    t.ineq_labels = {"a_min", "a_max"};
    t.ineq = [a_min = ego.a_min, a_max = ego.a_max](const StageArgs& s, std::span<double> g) {
        g[0] = a_min - s.u.a;
        g[1] = s.u.a - a_max;
    };
    return {std::move(t), ego.input_box()};
}

/// Adaptive cruise behind `lead` (predicted at constant velocity from `stamp`).
inline MpcPrimitive make_acc(const EgoParams& ego, const TaskParams& task, std::optional<PvState> lead,
                             double stamp = 0.0) {
    ego.validate();
    task.validate();
    if (!lead) throw MissingTarget("ACC requires a lead vehicle");
    PrimitiveTerm t;
    t.name = "ACC";
    t.kind = PrimitiveKind::longitudinal_task;
    t.reads = {names::x};
    t.cost_terms = 3;
    const PvState pv = *lead;
    t.cost = [q = task.q_acc, d_acc = task.d_acc, pv, stamp](const StageArgs& s) {
        const double gap = pv.predict(s.t - stamp).x - s.x[0];
        return detail::longitudinal_cost(q, gap - d_acc, s);
    };
    t.ineq_labels = {"a_min", "a_max", "gap"};
    t.ineq = [a_min = ego.a_min, a_max = ego.a_max, d_safe = task.d_safe_acc, pv, stamp](const StageArgs& s,
                                                                                          std::span<double> g) {
        g[0] = a_min - s.u.a;
        g[1] = s.u.a - a_max;
        g[2] = d_safe - std::abs(s.x[0] - pv.predict(s.t - stamp).x);
    };
    return {std::move(t), ego.input_box()};
}

/// Safety primitive for one surrounding vehicle; owns its constant-velocity state pv<id>.{x,y,vx,vy}.
inline MpcPrimitive make_pv_safety(const EgoParams& ego, const TaskParams& task, const PvState& pv0, int id = 0) {
    ego.validate();
    task.validate();
    PrimitiveTerm t;
    t.name = "PV" + std::to_string(id);
    t.kind = PrimitiveKind::safety;
    t.own_state = {{names::pv(id, "x"), "m"}, {names::pv(id, "y"), "m"}, {names::pv(id, "vx"), "m/s"},
                   {names::pv(id, "vy"), "m/s"}};
    t.reads = {names::x, names::y};  // slots 4, 5
    t.dynamics = [](const StageArgs& s, std::span<double> dx) {
        dx[0] = s.x[2];
        dx[1] = s.x[3];
        dx[2] = 0.0;
        dx[3] = 0.0;
    };
    t.ineq_labels = {"keep_out"};
    t.ineq = [d_safe = task.d_safe_pv](const StageArgs& s, std::span<double> g) {
        g[0] = d_safe - std::hypot(s.x[4] - s.x[0], s.x[5] - s.x[1]);
    };
    t.initial_state = {pv0.x, pv0.y, pv0.vx, pv0.vy};
    return {std::move(t), ego.input_box()};
}

}  // namespace mpcb

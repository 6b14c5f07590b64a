#pragma once

// Randomised driving scenes plus a hand-written roll-and-check used as an
// independent oracle for check_feasibility. Nothing here goes through
// StageProgram: dynamics and constraints are spelled out directly.

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "mpcb/builder/switcher.hpp"
#include "mpcb/primitives/library.hpp"

namespace mpcb::testing {

struct Scene {
    double ego[4];  // x, y, theta, v
    bool lane_change{false};
    double lateral_ref{4.0};
    std::vector<PvState> neighbors;  // LC gap targets
    std::optional<PvState> lead;     // ACC target
    std::vector<PvState> pvs;        // safety primitives
    double time{0.0};
    double stamp{0.0};
    ControlInput previous{};
    InputSequence shifted;  // N - 1 entries
};

inline Scene random_scene(std::mt19937_64& rng, int horizon = 20) {
    std::uniform_real_distribution<double> U01(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * U01(rng); };
    Scene s;
    s.ego[0] = uni(-20.0, 20.0);
    s.ego[1] = uni(-2.5, 10.5);
    s.ego[2] = uni(-0.15, 0.15);
    s.ego[3] = uni(10.0, 30.0);
    s.time = uni(0.0, 40.0);
    s.stamp = s.time - uni(0.0, 0.2);
    s.lane_change = U01(rng) < 0.5;
    s.lateral_ref = 4.0 * std::floor(uni(0.0, 3.0));
    auto vehicle = [&](double dx_lo, double dx_hi, double y) {
        return PvState{s.ego[0] + uni(dx_lo, dx_hi), y, uni(10.0, 30.0), 0.0};
    };
    if (s.lane_change) {
        if (U01(rng) < 0.8) s.neighbors.push_back(vehicle(8.0, 60.0, s.lateral_ref));
        if (U01(rng) < 0.8 || s.neighbors.empty()) s.neighbors.push_back(vehicle(-60.0, -8.0, s.lateral_ref));
    }
    if (U01(rng) < 0.5) s.lead = vehicle(8.0, 60.0, s.ego[1]);
    const int npv = static_cast<int>(uni(0.0, 4.0));
    for (int i = 0; i < npv; ++i) s.pvs.push_back(vehicle(-30.0, 30.0, 4.0 * std::floor(uni(0.0, 3.0))));
    s.previous = {uni(-5.0, 5.0), uni(-0.4, 0.4)};
    for (int k = 0; k < horizon - 1; ++k) {
        // mostly in the box, occasionally on or just past an edge
        const double r = U01(rng);
        ControlInput u{uni(-5.0, 5.0), uni(-0.4, 0.4)};
        if (r < 0.05) u.delta = 0.4;
        else if (r < 0.08) u.a = -5.0;
        else if (r < 0.10) u.delta = 0.41;
        s.shifted.push_back(u);
    }
    return s;
}

inline std::vector<MpcPrimitive> scene_primitives(const Scene& s) {
    EgoParams ego;
    TaskParams task;
    std::vector<MpcPrimitive> ps{make_kbm(ego)};
    if (s.lane_change) ps.push_back(make_lane_change(ego, task, s.lateral_ref, s.neighbors, s.stamp));
    else ps.push_back(make_lane_keep(ego, task, s.lateral_ref));
    if (s.lead) ps.push_back(make_acc(ego, task, s.lead, s.stamp));
    else ps.push_back(make_constant_speed(ego, task));
    for (std::size_t i = 0; i < s.pvs.size(); ++i)
        ps.push_back(make_pv_safety(ego, task, s.pvs[i], static_cast<int>(i)));
    return ps;
}

inline Ocp scene_ocp(const Scene& s, int horizon = 20, double dt = 0.05) {
    return build_ocp(scene_primitives(s), horizon, dt, EgoParams{}.input_box());
}

/// Initial state of `ocp` for the scene, filled by component name.
inline StateVector scene_state(const Ocp& ocp, const Scene& s) {
    StateVector x{ocp.schema(), std::vector<double>(ocp.state_dim(), 0.0)};
    const char* ego_names[] = {"x", "y", "theta", "v"};
    for (int i = 0; i < 4; ++i) x.values[*ocp.schema().index_of(ego_names[i])] = s.ego[i];
    for (std::size_t i = 0; i < s.pvs.size(); ++i) {
        const auto id = static_cast<int>(i);
        x.values[*ocp.schema().index_of(names::pv(id, "x"))] = s.pvs[i].x;
        x.values[*ocp.schema().index_of(names::pv(id, "y"))] = s.pvs[i].y;
        x.values[*ocp.schema().index_of(names::pv(id, "vx"))] = s.pvs[i].vx;
        x.values[*ocp.schema().index_of(names::pv(id, "vy"))] = s.pvs[i].vy;
    }
    return x;
}

/// Independent roll-and-check over stages 0..N-2 with default parameters.
inline bool brute_force_feasible(const Scene& s, int horizon = 20, double dt = 0.05) {
    const double L = 2.5, a_lim = 5.0, d_lim = 0.4, y_lo = -2.0, y_hi = 10.0;
    const double d_lc = 10.0, d_acc = 10.0, d_pv = 6.0;
    double x = s.ego[0], y = s.ego[1], th = s.ego[2], v = s.ego[3];
    std::vector<double> px, py;
    for (const auto& p : s.pvs) {
        px.push_back(p.x);
        py.push_back(p.y);
    }
    for (int k = 0; k < horizon - 1; ++k) {
        const auto& u = s.shifted[static_cast<std::size_t>(k)];
        const double t = s.time + k * dt;
        if (y < y_lo || y > y_hi) return false;
        if (u.delta < -d_lim || u.delta > d_lim) return false;
        if (s.lane_change) {
            double nearest = 1e300;
            for (const auto& n : s.neighbors) nearest = std::min(nearest, std::abs(x - (n.x + n.vx * (t - s.stamp))));
            if (nearest < d_lc) return false;
        }
        if (u.a < -a_lim || u.a > a_lim) return false;
        if (s.lead && std::abs(x - (s.lead->x + s.lead->vx * (t - s.stamp))) < d_acc) return false;
        for (std::size_t i = 0; i < px.size(); ++i)
            if (std::hypot(px[i] - x, py[i] - y) < d_pv) return false;
        const double nx = x + v * std::cos(th) * dt, ny = y + v * std::sin(th) * dt;
        const double nth = th + v * std::tan(u.delta) / L * dt, nv = v + u.a * dt;
        x = nx, y = ny, th = nth, v = nv;
        for (std::size_t i = 0; i < px.size(); ++i) {
            px[i] += s.pvs[i].vx * dt;
            py[i] += s.pvs[i].vy * dt;
        }
    }
    return true;
}

}  // namespace mpcb::testing

#pragma once

// Rule-based primitive assignment: command + world -> primitive set -> target OCP.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "mpcb/builder/iocp.hpp"
#include "mpcb/core/ocp.hpp"
#include "mpcb/primitives/library.hpp"
#include "mpcb/sim/world.hpp"

namespace mpcb {

struct AssignerParams {
    double vicinity{60.0};     ///< longitudinal window for safety primitives
    int max_pvs{6};
    double acc_factor{2.0};    ///< ACC when the same-lane lead is within acc_factor * d_acc

    void validate() const {
        if (!(vicinity > 0.0) || max_pvs < 0 || !(acc_factor > 0.0)) throw InvalidParams("invalid assigner params");
    }
};

struct Assignment {
    std::vector<MpcPrimitive> primitives;
    int target_lane{0};
    double y_ref{0.0};
    std::optional<int> lead_id;          ///< ACC reference
    std::vector<int> neighbor_ids;       ///< LC gap references
    std::vector<int> pv_ids;
};

/// Vehicles within the vicinity window, nearest first by Euclidean distance (ties by id), at most max_pvs.
inline std::vector<int> select_pvs(const WorldState& w, const AssignerParams& ap) {
    std::vector<std::pair<double, int>> c;
    for (const auto& v : w.vehicles)
        if (std::abs(v.x - w.ego.x) <= ap.vicinity) c.emplace_back(std::hypot(v.x - w.ego.x, v.y - w.ego.y), v.id);
    std::sort(c.begin(), c.end());
    std::vector<int> out;
    for (std::size_t i = 0; i < c.size() && static_cast<int>(i) < ap.max_pvs; ++i) out.push_back(c[i].second);
    return out;
}

/// `origin_lane` is the ego lane when the current command was issued. IDLE keeps that lane (and follows
/// its lead), so a transient drift across a lane boundary does not retarget the task; lane changes
/// target origin +/- 1.
inline Assignment assign(TaskCommand cmd, const WorldState& w, int origin_lane, const EgoParams& ego = {},
                         const TaskParams& task = {}, const AssignerParams& ap = {}) {
    ap.validate();
    if (!is_mpc_command(cmd)) throw InvalidParams(std::string("command ") + to_string(cmd) + " is not an MPC task");
    if (!w.road.valid_lane(origin_lane)) throw InvalidParams("origin lane out of range");
    Assignment a;
    a.primitives.push_back(make_kbm(ego));

    if (cmd == TaskCommand::IDLE) {
        a.target_lane = origin_lane;
        a.y_ref = w.road.center(a.target_lane);
        a.primitives.push_back(make_lane_keep(ego, task, a.y_ref));
    } else {
        a.target_lane = origin_lane + (cmd == TaskCommand::LANE_LEFT ? -1 : 1);
        if (!w.road.valid_lane(a.target_lane))
            throw NoAdjacentLane(std::string(to_string(cmd)) + " from lane " + std::to_string(origin_lane));
        a.y_ref = w.road.center(a.target_lane);
        std::vector<PvState> nb;
        for (bool ahead : {true, false})
            if (const auto* v = w.neighbor(a.target_lane, ahead)) {
                nb.push_back(v->pv());
                a.neighbor_ids.push_back(v->id);
            }
        const bool gap = !nb.empty();
        a.primitives.push_back(make_lane_change(ego, task, a.y_ref, std::move(nb), w.time, gap));
    }

    const int lead_lane = cmd == TaskCommand::IDLE ? origin_lane : w.ego_lane();
    const auto* lead = w.neighbor(lead_lane, true);
    if (lead && lead->x - w.ego.x <= ap.acc_factor * task.d_acc) {
        a.lead_id = lead->id;
        a.primitives.push_back(make_acc(ego, task, lead->pv(), w.time));
    } else {
        a.primitives.push_back(make_constant_speed(ego, task));
    }

    a.pv_ids = select_pvs(w, ap);
    for (int id : a.pv_ids) a.primitives.push_back(make_pv_safety(ego, task, w.find(id)->pv(), id));
    return a;
}

inline Ocp target_ocp(const Assignment& a, int horizon, double dt, const EgoParams& ego = {}) {
    return build_ocp(a.primitives, horizon, dt, ego.input_box());
}

/// State vector for `schema` read off the world; "target/" copies read the same quantities.
inline StateVector observe(const StateSchema& schema, const WorldState& w) {
    StateVector out{schema, std::vector<double>(schema.size(), 0.0)};
    const std::string prefix = kTargetPrefix;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        std::string n = schema[i].name;
        if (n.rfind(prefix, 0) == 0) n = n.substr(prefix.size());
        double value = 0.0;
        if (n == names::x) value = w.ego.x;
        else if (n == names::y) value = w.ego.y;
        else if (n == names::theta) value = w.ego.theta;
        else if (n == names::v) value = w.ego.v;
        else if (n.rfind("pv", 0) == 0 && n.find('.') != std::string::npos) {
            const auto dot = n.find('.');
            const Vehicle* veh = nullptr;
            try {
                veh = w.find(std::stoi(n.substr(2, dot - 2)));
            } catch (const std::exception&) {
            }
            if (!veh) throw UnresolvedRead("no vehicle for state component '" + schema[i].name + "'");
            const auto comp = n.substr(dot + 1);
            if (comp == "x") value = veh->x;
            else if (comp == "y") value = veh->y;
            else if (comp == "vx") value = veh->vx;
            else if (comp == "vy") value = veh->vy;
            else throw UnresolvedRead("unknown vehicle component '" + schema[i].name + "'");
        } else {
            throw UnresolvedRead("cannot observe state component '" + schema[i].name + "'");
        }
        out.values[i] = value;
    }
    return out;
}

}  // namespace mpcb

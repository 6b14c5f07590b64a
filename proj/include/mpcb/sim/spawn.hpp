#pragma once

#include <cstdint>
#include <random>

#include "mpcb/sim/world.hpp"

namespace mpcb {

struct EpisodeConfig {
    std::uint64_t seed{0};
    int vehicle_count{12};
    double duration{50.0};
    double dt{0.05};
    int lanes{3};
    double lane_width{4.0};
    double spawn_x_min{-40.0};
    double spawn_x_max{200.0};
    double min_gap{25.0};  ///< same-lane centre distance at spawn, including to the ego
    double speed_min{20.0};
    double speed_max{24.0};
    double ego_speed_min{22.0};
    double ego_speed_max{25.0};
    int max_attempts{2000};
    VehicleGeometry geometry{};

    int steps() const { return static_cast<int>(std::lround(duration / dt)); }

    void validate() const {
        if (!(duration > 0.0) || !(dt > 0.0)) throw InvalidParams("episode duration and dt must be > 0");
        if (vehicle_count < 0 || lanes < 1 || !(lane_width > 0.0)) throw InvalidParams("invalid road or vehicle count");
        if (min_gap < geometry.length) throw InvalidParams("spawn min_gap must be >= vehicle length");
        if (spawn_x_max <= spawn_x_min || speed_max < speed_min || ego_speed_max < ego_speed_min)
            throw InvalidParams("invalid spawn ranges");
    }
};

/// Seeded initial world: ego at x = 0 in a random lane, vehicles placed by rejection sampling.
inline WorldState spawn_episode(const EpisodeConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> U01(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * U01(rng); };
    auto pick_lane = [&] { return std::min(cfg.lanes - 1, static_cast<int>(U01(rng) * cfg.lanes)); };

    WorldState w;
    w.road = {cfg.lanes, cfg.lane_width};
    w.geometry = cfg.geometry;
    const int ego_lane = pick_lane();
    w.ego = {0.0, w.road.center(ego_lane), 0.0, uni(cfg.ego_speed_min, cfg.ego_speed_max)};

    for (int id = 0; id < cfg.vehicle_count; ++id) {
        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
            const int lane = pick_lane();
            const double x = uni(cfg.spawn_x_min, cfg.spawn_x_max);
            bool ok = !(lane == ego_lane && std::abs(x - w.ego.x) < cfg.min_gap);
            for (const auto& v : w.vehicles) ok = ok && !(v.lane == lane && std::abs(v.x - x) < cfg.min_gap);
            if (!ok) continue;
            const double speed = uni(cfg.speed_min, cfg.speed_max);
            w.vehicles.push_back({id, lane, x, w.road.center(lane), speed, 0.0, speed});
            placed = true;
        }
        if (!placed) throw SpawnFailure("could not place vehicle " + std::to_string(id) + " after " +
                                        std::to_string(cfg.max_attempts) + " attempts");
    }
    return w;
}

}  // namespace mpcb

#pragma once

#include <array>
#include <cmath>

#include "mpcb/core/types.hpp"

namespace mpcb {

struct EgoParams {
    double wheelbase{2.5};
    double a_min{-5.0}, a_max{5.0};
    double delta_min{-0.4}, delta_max{0.4};
    double y_min{-2.0}, y_max{10.0};  ///< road edges for lane 0..2 at 4 m spacing

    InputBox input_box() const { return {{a_min, delta_min}, {a_max, delta_max}}; }

    void validate() const {
        if (!(wheelbase > 0.0)) throw InvalidParams("wheelbase must be > 0");
        if (!(a_min < a_max) || !(delta_min < delta_max) || !(y_min < y_max))
            throw InvalidParams("every min bound must be below its max bound");
    }
};

/// Weights and references of the task/safety primitives.
struct TaskParams {
    double v_ref{25.0};
    double d_acc{20.0};
    double d_safe_lc{10.0};
    double d_safe_acc{10.0};
    double d_safe_pv{6.0};
    // {lateral offset, heading, yaw rate, steering, steering rate}
    std::array<double, 5> q_lk{1.0, 1.0, 0.1, 0.1, 0.1};
    std::array<double, 5> q_lc{1.0, 1.0, 0.1, 0.1, 0.1};
    // {speed error, acceleration, jerk}
    std::array<double, 3> q_cs{1.0, 0.1, 0.1};
    // {gap error, acceleration, jerk}
    std::array<double, 3> q_acc{1.0, 0.1, 0.1};

    void validate() const {
        if (!(d_acc > 0.0 && d_safe_lc > 0.0 && d_safe_acc > 0.0 && d_safe_pv > 0.0))
            throw InvalidParams("distances must be > 0");
        auto nonneg = [](const auto& q) {
            for (double w : q)
                if (!(w >= 0.0)) return false;
            return true;
        };
        if (!nonneg(q_lk) || !nonneg(q_lc) || !nonneg(q_cs) || !nonneg(q_acc))
            throw InvalidParams("weights must be >= 0");
    }
};

/// Surrounding-vehicle kinematic state X_pv = [x, y, vx, vy].
struct PvState {
    double x{0.0}, y{0.0};
    double vx{0.0}, vy{0.0};

    /// Constant-velocity prediction `dt_ahead` seconds later.
    PvState predict(double dt_ahead) const { return {x + vx * dt_ahead, y + vy * dt_ahead, vx, vy}; }

    friend bool operator==(const PvState&, const PvState&) = default;
};

}  // namespace mpcb

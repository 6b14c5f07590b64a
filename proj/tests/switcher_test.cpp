#include <gtest/gtest.h>

#include "mpcb/builder/switcher.hpp"
#include "scene_oracle.hpp"
#include "test_support.hpp"

using namespace mpcb;
using namespace mpcb::testing;

namespace {

const int N = 20;
const double dt = 0.05;

Ocp bare_kbm() { return build_ocp({make_kbm(default_ego())}, N, dt, default_ego().input_box()); }

Ocp lk_cs() {
    auto ego = default_ego();
    auto task = default_task();
    return build_ocp({make_kbm(ego), make_lane_keep(ego, task, 4.0), make_constant_speed(ego, task)}, N, dt,
                     ego.input_box());
}

}  // namespace

TEST(Feasibility, BareKbmAlwaysFeasible) {
    std::mt19937_64 rng(1);
    auto ocp = bare_kbm();
    for (int i = 0; i < 50; ++i) {
        InputSequence u;
        for (int k = 0; k < N - 1; ++k) u.push_back({rng() % 2 ? 50.0 : -50.0, 3.0});
        EXPECT_TRUE(check_feasibility(ocp, random_ego_state(rng), u).feasible);
    }
}

TEST(Feasibility, LaneChangeIntoTightGapIsReported) {
    auto ego = default_ego();
    auto task = default_task();
    // Lead in the target lane 5 m ahead at the ego's speed: gap stays at d_safe_lc / 2.
    auto ocp = build_ocp({make_kbm(ego), make_lane_change(ego, task, 8.0, {PvState{5.0, 8.0, 20.0, 0.0}}),
                          make_constant_speed(ego, task)},
                         N, dt, ego.input_box());
    StateVector x{ego_schema(), {0.0, 4.0, 0.0, 20.0}};
    InputSequence u(N - 1);
    auto r = check_feasibility(ocp, x, u);
    EXPECT_FALSE(r.feasible);
    ASSERT_EQ(r.labels(), std::vector<std::string>{"LC.gap"});
    EXPECT_EQ(r.violations.size(), static_cast<std::size_t>(N - 1));
    EXPECT_DOUBLE_EQ(r.violations.front().value, 5.0);
    // Same scene with the lead far ahead is feasible.
    auto far = build_ocp({make_kbm(ego), make_lane_change(ego, task, 8.0, {PvState{40.0, 8.0, 20.0, 0.0}}),
                          make_constant_speed(ego, task)},
                         N, dt, ego.input_box());
    EXPECT_TRUE(check_feasibility(far, x, u).feasible);
}

TEST(Feasibility, ChecksOnlyStagesBeforeLast) {
    // y leaves the road exactly at stage N-1: not checked.
    auto ocp = lk_cs();
    const double v = 20.0;
    const double y0 = 10.0 - (N - 1) * v * dt * std::sin(0.1) + 1e-9;
    StateVector x{ego_schema(), {0.0, y0, 0.1, v}};
    InputSequence u(N - 1, ControlInput{0.0, 0.0});
    // theta fixed (delta = 0) so y_k = y0 + k v dt sin(0.1)
    auto r = check_feasibility(ocp, x, u);
    EXPECT_TRUE(r.feasible);
    StateVector x2{ego_schema(), {0.0, y0 + v * dt * std::sin(0.1), 0.1, v}};
    auto r2 = check_feasibility(ocp, x2, u);
    EXPECT_FALSE(r2.feasible);
    ASSERT_EQ(r2.violations.size(), 1u);
    EXPECT_EQ(r2.violations[0].stage, N - 2);
    EXPECT_EQ(r2.violations[0].label, "LK.y_max");
}

TEST(Feasibility, UsesShiftedInputIndexing) {
    // Entry k of the shifted sequence drives stage k; an out-of-box steer at entry 3 shows up at stage 3.
    auto ocp = lk_cs();
    InputSequence u(N - 1);
    u[3].delta = 0.5;
    auto r = check_feasibility(ocp, StateVector{ego_schema(), {0, 4, 0, 20}}, u);
    ASSERT_FALSE(r.feasible);
    EXPECT_EQ(r.violations[0].stage, 3);
    EXPECT_EQ(r.violations[0].label, "LK.delta_max");
}

TEST(Feasibility, AgreesWithBruteForce) {
    std::mt19937_64 rng(2024);
    int feasible = 0;
    for (int i = 0; i < 200; ++i) {
        auto s = random_scene(rng);
        auto ocp = scene_ocp(s);
        RolloutContext ctx{s.time, s.previous};
        const bool got = check_feasibility(ocp, scene_state(ocp, s), s.shifted, ctx).feasible;
        EXPECT_EQ(got, brute_force_feasible(s)) << "scene " << i;
        feasible += got;
    }
    EXPECT_GT(feasible, 20);
    EXPECT_LT(feasible, 180);
}

TEST(Feasibility, PureAndRepeatable) {
    std::mt19937_64 rng(9);
    auto s = random_scene(rng);
    auto ocp = scene_ocp(s);
    auto x = scene_state(ocp, s);
    auto a = check_feasibility(ocp, x, s.shifted);
    auto b = check_feasibility(ocp, x, s.shifted);
    EXPECT_EQ(a.feasible, b.feasible);
    EXPECT_EQ(a.violations.size(), b.violations.size());
}

TEST(Feasibility, Errors) {
    auto ocp = lk_cs();
    EXPECT_THROW(check_feasibility(ocp, StateVector{ego_schema(), {0, 4, 0, 20}}, InputSequence(N - 2)),
                 SchemaMismatch);
    StateSchema other{{"p", "m"}};
    EXPECT_THROW(check_feasibility(ocp, StateVector{other, {0}}, InputSequence(N - 1)), SchemaMismatch);
}

TEST(Decide, MatchesTableForAllCounts) {
    const int n_max = 50;
    for (int n = 0; n <= n_max; ++n) {
        auto f = decide(true, n, n_max);
        EXPECT_EQ(f.mode, SwitchMode::direct);
        EXPECT_FALSE(f.is_rejected);
        EXPECT_EQ(f.n_iocp, 0);
        auto g = decide(false, n, n_max);
        if (n < n_max) {
            EXPECT_EQ(g.mode, SwitchMode::intermediate);
            EXPECT_FALSE(g.is_rejected);
            EXPECT_EQ(g.n_iocp, n + 1);
        } else {
            EXPECT_EQ(g.mode, SwitchMode::reverted);
            EXPECT_TRUE(g.is_rejected);
            EXPECT_EQ(g.n_iocp, 0);
        }
    }
}

TEST(Switcher, FeasibleTargetBecomesPrevious) {
    SwitcherState s;
    s.prev = bare_kbm();
    s.n_iocp = 7;
    auto target = lk_cs();
    auto d = switch_ocp(s, target, true);
    EXPECT_EQ(d.mode, SwitchMode::direct);
    EXPECT_FALSE(d.is_rejected);
    EXPECT_EQ(d.solve_ocp.provenance(), target.provenance());
    EXPECT_EQ(s.prev->provenance(), target.provenance());
    EXPECT_EQ(s.n_iocp, 0);
}

TEST(Switcher, LastIntermediateStep) {
    SwitcherState s;
    s.prev = lk_cs();
    s.n_iocp = s.n_max - 1;
    auto d = switch_ocp(s, bare_kbm(), false);
    EXPECT_EQ(d.mode, SwitchMode::intermediate);
    EXPECT_TRUE(is_iocp(d.solve_ocp));
    EXPECT_FALSE(d.is_rejected);
    EXPECT_EQ(s.n_iocp, s.n_max);
    EXPECT_EQ(s.prev->provenance(), lk_cs().provenance());
}

TEST(Switcher, RevertsAtCap) {
    SwitcherState s;
    s.prev = lk_cs();
    s.n_iocp = s.n_max;
    auto d = switch_ocp(s, bare_kbm(), false);
    EXPECT_EQ(d.mode, SwitchMode::reverted);
    EXPECT_TRUE(d.is_rejected);
    EXPECT_EQ(s.n_iocp, 0);
    EXPECT_EQ(d.solve_ocp.provenance(), s.prev->provenance());
    EXPECT_EQ(d.solve_ocp.program().ineq_labels(), s.prev->program().ineq_labels());
}

TEST(Switcher, ZeroCapRejectsImmediately) {
    SwitcherState s;
    s.prev = lk_cs();
    s.n_max = 0;
    auto d = switch_ocp(s, bare_kbm(), false);
    EXPECT_EQ(d.mode, SwitchMode::reverted);
    EXPECT_TRUE(d.is_rejected);
}

TEST(Switcher, FullStepUsesStoredWarmStart) {
    auto ego = default_ego();
    auto task = default_task();
    SwitcherState s;
    s.prev = lk_cs();
    s.last_warm_start = InputSequence(N);
    auto tight = build_ocp({make_kbm(ego), make_lane_change(ego, task, 8.0, {PvState{5.0, 8.0, 20.0, 0.0}}),
                            make_constant_speed(ego, task)},
                           N, dt, ego.input_box());
    StateVector x{ego_schema(), {0.0, 4.0, 0.0, 20.0}};
    auto out = switch_ocp(s, tight, x);
    EXPECT_FALSE(out.report.feasible);
    EXPECT_EQ(out.decision.mode, SwitchMode::intermediate);
    EXPECT_EQ(s.n_iocp, 1);
    auto again = switch_ocp(s, lk_cs(), x);
    EXPECT_EQ(again.decision.mode, SwitchMode::direct);
    EXPECT_EQ(s.n_iocp, 0);
}

TEST(Switcher, StaticSceneStaysFeasibleAfterShift) {
    // Unchanged world, same OCP: the solved sequence is feasible, and so is its shift one step later.
    auto ocp = lk_cs();
    StateVector x{ego_schema(), {0.0, 4.0, 0.0, 25.0}};
    InputSequence u(N);
    ASSERT_TRUE(check_feasibility(ocp, x, u).feasible);
    auto traj = rollout(ocp, x, u);
    StateVector x1{ego_schema(), traj.states[1]};
    EXPECT_TRUE(check_feasibility(ocp, x1, shift_inputs(u)).feasible);
}

TEST(Switcher, Errors) {
    SwitcherState s;
    EXPECT_THROW(switch_ocp(s, bare_kbm(), true), InvalidParams);
    s.prev = bare_kbm();
    s.n_iocp = s.n_max + 1;
    EXPECT_THROW(switch_ocp(s, bare_kbm(), true), InvalidParams);
}

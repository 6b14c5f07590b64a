#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpcb/builder/assigner.hpp"
#include "mpcb/builder/switcher.hpp"
#include "mpcb/harness/config.hpp"
#include "mpcb/mppi/mppi.hpp"
#include "mpcb/planner/planner.hpp"
#include "mpcb/sim/collision.hpp"
#include "mpcb/sim/pid.hpp"
#include "mpcb/sim/spawn.hpp"
#include "mpcb/trace/trace.hpp"

namespace mpcb {

struct RunOptions {
    PipelineKind kind{PipelineKind::proposed};
    bool use_iocp{true};  ///< false: an infeasible target is rejected at once (n_max = 0)
    std::string label;    ///< group name in reports; defaults to the pipeline name
    std::optional<WorldState> initial_world;  ///< constructed scene instead of a seeded spawn

    std::string effective_label() const { return label.empty() ? std::string(to_string(kind)) : label; }
};

struct EpisodeSummary {
    std::uint64_t seed{0};
    bool success{false};
    std::optional<std::pair<int, int>> collision;
    std::optional<std::string> error;
    double travel{0.0};
    int steps{0};
};

struct EpisodeResult {
    std::vector<TraceRecord> trace;
    EpisodeSummary summary;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E5ADULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace detail {

inline nlohmann::json world_json(const WorldState& w, const std::optional<ControlInput>& u,
                                 const std::optional<std::pair<int, int>>& lc) {
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& v : w.vehicles) vs.push_back({{"id", v.id}, {"lane", v.lane}, {"x", v.x}, {"y", v.y}, {"vx", v.vx}});
    nlohmann::json j{{"ego", {{"x", w.ego.x}, {"y", w.ego.y}, {"theta", w.ego.theta}, {"v", w.ego.v}}},
                     {"lane", w.ego_lane()},
                     {"vehicles", vs}};
    j["input"] = u ? nlohmann::json{{"a", u->a}, {"delta", u->delta}} : nlohmann::json(nullptr);
    j["lc"] = lc ? nlohmann::json{{"id", lc->first}, {"target_lane", lc->second}} : nlohmann::json(nullptr);
    return j;
}

inline nlohmann::json feedback_json(const std::optional<PlannerFeedback>& fb) {
    if (!fb) return nullptr;
    return {{"last_command", to_string(fb->last_command)},
            {"feasible", fb->feasible},
            {"rejected", fb->rejected},
            {"assist_mode", fb->assist_mode ? nlohmann::json(to_string(*fb->assist_mode)) : nlohmann::json(nullptr)}};
}

/// Synchronous or mailbox-backed access to the planner.
class PlanSource {
public:
    PlanSource(Planner& p, bool async) : planner_(p) {
        if (async) async_.emplace(p);
    }
    /// Asks for a plan; returns it when available (always, in synchronous mode).
    std::optional<PlanResult> get(const WorldState& w, const std::optional<PlannerFeedback>& fb) {
        if (!async_) return planner_.plan(w, fb);
        if (!async_->busy()) async_->request(w, fb);
        return async_->poll();
    }

private:
    Planner& planner_;
    std::optional<AsyncPlanner> async_;
};

class EpisodeRecorder {
public:
    std::vector<TraceRecord> records;

    void add(const WorldState& w, RecordKind kind, nlohmann::json payload) {
        records.push_back({kTraceSchemaVersion, w.step, w.time, kind, std::move(payload)});
    }
};

}  // namespace detail

/// One closed-loop episode. The trace is a pure function of (config, seed, options, planner behaviour).
inline EpisodeResult run_episode(const HarnessConfig& cfg, std::uint64_t seed, Planner& planner, const RunOptions& opt) {
    cfg.validate();
    EpisodeConfig ec = cfg.episode;
    ec.seed = seed;
    WorldState world = opt.initial_world ? *opt.initial_world : spawn_episode(ec);
    const double x_start = world.ego.x;
    const int steps = ec.steps();

    detail::EpisodeRecorder rec;
    detail::PlanSource source(planner, cfg.planner.async);
    EpisodeResult result;
    result.summary.seed = seed;

    rec.add(world, RecordKind::event,
            {{"type", "episode_start"}, {"pipeline", to_string(opt.kind)}, {"label", opt.effective_label()},
             {"seed", seed}, {"planner", planner.name()}, {"iocp", opt.use_iocp}, {"steps", steps},
             {"d_safe_acc", cfg.task.d_safe_acc}});

    std::optional<std::pair<int, int>> lc;  // (span id, target lane)
    int lc_counter = 0;
    rec.add(world, RecordKind::world, detail::world_json(world, std::nullopt, lc));

    const bool mpc = opt.kind != PipelineKind::lvlm2pid;
    const bool feedback_loop = opt.kind == PipelineKind::proposed;

    // Planning state.
    bool plan_due = true;
    int steps_since_plan = 0;
    std::optional<PlannerFeedback> feedback;
    int plan_index = -1;
    TaskCommand planned = TaskCommand::IDLE;
    bool plan_settled = true;  // planned command accepted or rejected

    // MPC state.
    TaskCommand active = TaskCommand::IDLE, accepted = TaskCommand::IDLE;
    int active_origin = world.ego_lane(), accepted_origin = world.ego_lane();
    SwitcherState sw;
    sw.n_max = opt.use_iocp ? cfg.cadence.n_max : 0;
    InputSequence warm(static_cast<std::size_t>(cfg.horizon));
    ControlInput last_input{};
    if (mpc) {
        const auto a0 = assign(TaskCommand::IDLE, world, active_origin, cfg.ego, cfg.task, cfg.assigner);
        sw.prev = target_ocp(a0, cfg.horizon, cfg.mpc_dt, cfg.ego);
    }
    sw.last_warm_start = warm;

    // PID state.
    PidState pid{world.ego_lane(), cfg.task.v_ref};
    const int pid_period = cfg.cadence.pid_steps_per_plan(ec.dt);

    auto end_lc = [&] { lc.reset(); };
    auto start_lc = [&](int target_lane) { lc = std::pair{++lc_counter, target_lane}; };

    try {
        for (int k = 0; k < steps; ++k) {
            // --- plan ---
            if (plan_due) {
                auto r = source.get(world, feedback_loop ? feedback : std::nullopt);
                if (r) {
                    ++plan_index;
                    planned = r->command;
                    plan_due = false;
                    steps_since_plan = 0;
                    rec.add(world, RecordKind::plan,
                            {{"index", plan_index},
                             {"command", to_string(r->command)},
                             {"reasoning", r->reasoning},
                             {"fallback", r->fallback},
                             {"feedback", detail::feedback_json(feedback_loop ? feedback : std::nullopt)},
                             {"exchange", r->exchange}});
                    if (mpc) {
                        active = planned;
                        active_origin = world.ego_lane();
                        plan_settled = false;
                        feedback = PlannerFeedback{planned, true, false, std::nullopt};
                    } else {
                        const int before = pid.target_lane;
                        apply_command(pid, planned, world.road, cfg.pid);
                        if (pid.target_lane != before) start_lc(pid.target_lane);
                    }
                }
            }

            ControlInput u{};
            bool iocp_step = false;
            if (mpc) {
                // --- assign ---
                std::optional<Assignment> asg;
                bool assign_rejected = false;
                try {
                    asg = assign(active, world, active_origin, cfg.ego, cfg.task, cfg.assigner);
                } catch (const NoAdjacentLane& e) {
                    assign_rejected = true;
                    rec.add(world, RecordKind::event, {{"type", "no_adjacent_lane"}, {"command", to_string(active)}, {"what", e.what()}});
                    if (feedback_loop) {
                        rec.add(world, RecordKind::switch_,
                                {{"command", to_string(active)}, {"mode", "reverted"}, {"rejected", true},
                                 {"feasible", false}, {"n_iocp", sw.n_iocp}, {"reason", "no_adjacent_lane"},
                                 {"violations", nlohmann::json::array()}, {"target", nullptr}});
                        feedback = PlannerFeedback{planned, false, true, SwitchMode::reverted};
                        plan_settled = true;
                        active = accepted;
                        active_origin = accepted_origin;
                    } else {
                        active = TaskCommand::IDLE;
                        active_origin = world.ego_lane();
                    }
                    asg = assign(active, world, active_origin, cfg.ego, cfg.task, cfg.assigner);
                }
                const Ocp target = target_ocp(*asg, cfg.horizon, cfg.mpc_dt, cfg.ego);
                const RolloutContext ctx{world.time, last_input};

                Ocp solve_ocp = target;
                if (feedback_loop && !assign_rejected) {
                    const auto x_t = observe(target.schema(), world);
                    auto out = switch_ocp(sw, target, x_t, ctx, cfg.iocp, cfg.mppi.eps_h);
                    const auto mode = out.decision.mode;
                    iocp_step = mode == SwitchMode::intermediate;
                    rec.add(world, RecordKind::switch_,
                            {{"command", to_string(active)}, {"mode", to_string(mode)},
                             {"rejected", out.decision.is_rejected}, {"feasible", out.report.feasible},
                             {"n_iocp", sw.n_iocp}, {"violations", out.report.labels()},
                             {"target", join_provenance(target.provenance())}});
                    if (!plan_settled && active == planned) {
                        feedback = PlannerFeedback{planned, out.report.feasible, out.decision.is_rejected, mode};
                    }
                    if (mode == SwitchMode::direct) {
                        const bool newly = !plan_settled && active == planned;
                        if (newly) {
                            plan_settled = true;
                            if (is_lane_change(active)) start_lc(asg->target_lane);
                            else end_lc();
                        }
                        accepted = active;
                        accepted_origin = active_origin;
                    } else if (mode == SwitchMode::reverted) {
                        plan_settled = true;
                        active = accepted;
                        active_origin = accepted_origin;
                    }
                    solve_ocp = std::move(out.decision.solve_ocp);
                } else if (!feedback_loop && !plan_settled) {
                    plan_settled = true;
                    if (!assign_rejected && is_lane_change(active)) start_lc(asg->target_lane);
                    else end_lc();
                }

                // --- solve ---
                MppiConfig mc = cfg.mppi;
                mc.seed = mix_seed(seed, static_cast<std::uint64_t>(k));
                const StateVector x0 = observe(solve_ocp.schema(), world);
                const auto sol = solve(solve_ocp, x0, warm, mc, ctx);
                warm = sol.nominal_inputs;
                sw.last_warm_start = warm;
                u = sol.first_input;
                rec.add(world, RecordKind::solve,
                        {{"ocp", join_provenance(solve_ocp.provenance())}, {"iocp", is_iocp(solve_ocp)},
                         {"cost", sol.cost}, {"warm_cost", sol.warm_start_cost},
                         {"a", u.a}, {"delta", u.delta}});
            } else {
                u = pid_control(pid, world, cfg.pid, cfg.ego);
            }

            // --- simulate ---
            world = step_world(world, u, ec.dt, cfg.ego, cfg.idm);
            last_input = u;
            rec.add(world, RecordKind::world, detail::world_json(world, u, lc));
            if (lc && std::abs(world.ego.y - world.road.center(lc->second)) <= cfg.lc_done_tol) end_lc();
            ++result.summary.steps;

            if (auto hit = detect_collision(world)) {
                result.summary.collision = hit;
                rec.add(world, RecordKind::event, {{"type", "collision"}, {"a", hit->first}, {"b", hit->second}});
                break;
            }

            // --- cadence ---
            if (mpc) {
                if (!iocp_step) ++steps_since_plan;
                if (steps_since_plan >= cfg.cadence.steps_per_plan) plan_due = true;
            } else if (++steps_since_plan >= pid_period) {
                plan_due = true;
            }
        }
    } catch (const Error& e) {
        result.summary.error = e.what();
        rec.add(world, RecordKind::event, {{"type", "error"}, {"what", e.what()}});
    }

    result.summary.travel = world.ego.x - x_start;
    result.summary.success = !result.summary.collision && !result.summary.error;
    rec.add(world, RecordKind::event,
            {{"type", "episode_end"}, {"success", result.summary.success}, {"travel", result.summary.travel},
             {"steps", result.summary.steps}});
    result.trace = std::move(rec.records);
    return result;
}

}  // namespace mpcb

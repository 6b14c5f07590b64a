#pragma once

#include <memory>

#include "mpcb/harness/config.hpp"

namespace mpcb {

/// Planner described by `cfg.planner`. The PID baseline gets the extended command set.
inline std::unique_ptr<Planner> make_planner(const HarnessConfig& cfg, PipelineKind kind) {
    const auto& p = cfg.planner;
    if (p.kind == "scripted") {
        if (p.script.empty()) return std::make_unique<ScriptedPlanner>(std::vector<TaskCommand>{TaskCommand::IDLE});
        return std::make_unique<ScriptedPlanner>(ScriptedPlanner::load_script(p.script));
    }
    if (p.kind == "reckless") return std::make_unique<RecklessPlanner>(p.reckless_trigger);
    if (p.kind == "api" || p.kind == "replay") {
        ApiPlannerOptions o;
        o.prompt.safety_instructions = p.safety_instructions;
        o.prompt.d_safe = cfg.task.d_safe_acc;
        o.prompt.commands = kind == PipelineKind::lvlm2pid ? pid_command_set() : mpc_command_set();
        o.bev = p.bev;
        o.memory_capacity = p.memory_capacity;
        o.template_path = p.template_path;
        std::unique_ptr<Transport> t;
        if (p.kind == "api") {
            t = std::make_unique<HttpTransport>(p.http);
        } else {
            if (p.replay_dir.empty()) throw ConfigError("planner.replay_dir is required for the replay planner");
            t = std::make_unique<ReplayTransport>(p.replay_dir);
        }
        return std::make_unique<ApiPlanner>(std::move(t), std::move(o));
    }
    throw ConfigError("unknown planner kind '" + p.kind + "'");
}

}  // namespace mpcb

#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>

#include "mpcb/builder/assigner.hpp"
#include "mpcb/builder/iocp.hpp"
#include "mpcb/mppi/mppi.hpp"
#include "mpcb/planner/planner.hpp"
#include "mpcb/sim/pid.hpp"
#include "mpcb/sim/spawn.hpp"

namespace mpcb {

enum class PipelineKind { proposed, lvlm2mpc, lvlm2pid };

inline const char* to_string(PipelineKind k) {
    switch (k) {
        case PipelineKind::proposed: return "proposed";
        case PipelineKind::lvlm2mpc: return "lvlm2mpc";
        case PipelineKind::lvlm2pid: return "lvlm2pid";
    }
    return "?";
}

inline PipelineKind parse_pipeline(const std::string& s) {
    if (s == "proposed") return PipelineKind::proposed;
    if (s == "lvlm2mpc") return PipelineKind::lvlm2mpc;
    if (s == "lvlm2pid") return PipelineKind::lvlm2pid;
    throw ConfigError("unknown pipeline '" + s + "'");
}

struct CadenceConfig {
    int steps_per_plan{30};  ///< non-iOCP control steps between plans
    double pid_plan_hz{1.0};
    int n_max{50};

    int pid_steps_per_plan(double dt) const {
        return std::max(1, static_cast<int>(std::lround(1.0 / (pid_plan_hz * dt))));
    }
    void validate() const {
        if (steps_per_plan < 1 || !(pid_plan_hz > 0.0) || n_max < 0) throw ConfigError("invalid cadence settings");
    }
};

struct PlannerSettings {
    std::string kind{"scripted"};  ///< api | scripted | replay | reckless
    std::string script;            ///< path; empty means IDLE forever
    std::string replay_dir;
    HttpSettings http;
    std::size_t memory_capacity{5};
    bool safety_instructions{true};
    bool async{false};
    std::string template_path{default_template_path()};
    BevConfig bev;
    double reckless_trigger{60.0};
};

struct HarnessConfig {
    MppiConfig mppi;
    int horizon{20};
    double mpc_dt{0.05};
    // Closed-loop defaults differ from the per-module ones in three places, all measured on the
    // 12-vehicle suite: a softer iOCP penalty (rho 10 out-weighs the road-edge indicator and the ego
    // sheds speed by turning), a weak ACC gap pull (the gap term has no speed damping, so at weight
    // 1 the ego closes faster than a 1 s horizon can brake), and a PV radius that adjacent-lane
    // traffic at 4 m spacing does not violate while merely driving alongside.
    IocpParams iocp{.rho_g = 1.0, .rho_h = 1.0};
    CadenceConfig cadence;
    EpisodeConfig episode;
    PlannerSettings planner;
    TaskParams task{.d_safe_pv = 3.8, .q_acc = {0.01, 0.1, 0.1}};
    EgoParams ego;
    AssignerParams assigner;
    PidGains pid;
    IdmParams idm;
    double lc_done_tol{0.5};  ///< lane change ends when |y - target centre| is within this

    void validate() const {
        mppi.validate();
        cadence.validate();
        episode.validate();
        task.validate();
        ego.validate();
        assigner.validate();
        pid.validate();
        if (horizon < 1 || !(mpc_dt > 0.0)) throw ConfigError("mpc horizon and dt must be positive");
        if (!(iocp.rho_g > 0.0) || !(iocp.rho_h > 0.0)) throw ConfigError("iocp rho must be > 0");
        if (!(lc_done_tol > 0.0)) throw ConfigError("task.lc_done_tol must be > 0");
        const auto& k = planner.kind;
        if (k != "api" && k != "scripted" && k != "replay" && k != "reckless")
            throw ConfigError("unknown planner kind '" + k + "'");
    }
};

namespace detail {

// Binds "section.key" to a field; every key in a file must be bound.
class ConfigBinder {
public:
    template <class T>
    void bind(const std::string& key, T& field) {
        setters_[key] = [&field, key](const std::string& raw) {
            try {
                if constexpr (std::is_same_v<T, bool>) {
                    if (raw == "true" || raw == "1") field = true;
                    else if (raw == "false" || raw == "0") field = false;
                    else throw std::invalid_argument(raw);
                } else if constexpr (std::is_same_v<T, std::string>) {
                    field = raw;
                } else if constexpr (std::is_floating_point_v<T>) {
                    std::size_t used = 0;
                    field = std::stod(raw, &used);
                    if (used != raw.size()) throw std::invalid_argument(raw);
                } else {
                    std::size_t used = 0;
                    const long long v = std::stoll(raw, &used);
                    if (used != raw.size() || (v < 0 && std::is_unsigned_v<T>)) throw std::invalid_argument(raw);
                    field = static_cast<T>(v);
                }
            } catch (const std::exception&) {
                throw ConfigError("bad value '" + raw + "' for " + key);
            }
        };
    }
    void bind_custom(const std::string& key, std::function<void(const std::string&)> f) { setters_[key] = std::move(f); }

    void apply(const boost::property_tree::ptree& tree) {
        for (const auto& [section, body] : tree) {
            if (body.empty()) throw ConfigError("key '" + section + "' outside a section");
            for (const auto& [key, value] : body) {
                const auto full = section + "." + key;
                auto it = setters_.find(full);
                if (it == setters_.end()) throw ConfigError("unknown config key '" + full + "'");
                it->second(value.data());
            }
        }
    }

private:
    std::map<std::string, std::function<void(const std::string&)>> setters_;
};

template <std::size_t N>
void bind_array(ConfigBinder& b, const std::string& prefix, std::array<double, N>& a, const std::array<const char*, N>& names) {
    for (std::size_t i = 0; i < N; ++i) b.bind(prefix + names[i], a[i]);
}

}  // namespace detail

inline void apply_config(HarnessConfig& c, const boost::property_tree::ptree& tree) {
    detail::ConfigBinder b;
    b.bind("mppi.samples", c.mppi.samples);
    b.bind("mppi.lambda", c.mppi.lambda);
    b.bind("mppi.sigma_a", c.mppi.sigma_a);
    b.bind("mppi.sigma_delta", c.mppi.sigma_delta);
    b.bind("mppi.mu", c.mppi.mu);
    b.bind("mppi.eps_h", c.mppi.eps_h);
    b.bind("mppi.iterations", c.mppi.iterations);
    b.bind_custom("mppi.noise", [&](const std::string& s) { c.mppi.noise = parse_noise_model(s); });
    b.bind("mppi.horizon", c.horizon);
    b.bind("mppi.dt", c.mpc_dt);

    b.bind("iocp.rho_g", c.iocp.rho_g);
    b.bind("iocp.rho_h", c.iocp.rho_h);
    b.bind("iocp.include_target_cost", c.iocp.include_target_cost);

    b.bind("cadence.steps_per_plan", c.cadence.steps_per_plan);
    b.bind("cadence.pid_plan_hz", c.cadence.pid_plan_hz);
    b.bind("cadence.n_max", c.cadence.n_max);

    auto& e = c.episode;
    b.bind("episode.vehicle_count", e.vehicle_count);
    b.bind("episode.duration", e.duration);
    b.bind("episode.dt", e.dt);
    b.bind("episode.lanes", e.lanes);
    b.bind("episode.lane_width", e.lane_width);
    b.bind("episode.spawn_x_min", e.spawn_x_min);
    b.bind("episode.spawn_x_max", e.spawn_x_max);
    b.bind("episode.min_gap", e.min_gap);
    b.bind("episode.speed_min", e.speed_min);
    b.bind("episode.speed_max", e.speed_max);
    b.bind("episode.ego_speed_min", e.ego_speed_min);
    b.bind("episode.ego_speed_max", e.ego_speed_max);
    b.bind("episode.max_attempts", e.max_attempts);
    b.bind("episode.vehicle_length", e.geometry.length);
    b.bind("episode.vehicle_width", e.geometry.width);

    auto& p = c.planner;
    b.bind("planner.kind", p.kind);
    b.bind("planner.script", p.script);
    b.bind("planner.replay_dir", p.replay_dir);
    b.bind("planner.endpoint", p.http.endpoint);
    b.bind("planner.model", p.http.model);
    b.bind("planner.api_key_env", p.http.api_key_env);
    b.bind("planner.timeout_s", p.http.timeout_s);
    b.bind("planner.max_attempts", p.http.max_attempts);
    b.bind("planner.backoff_s", p.http.backoff_s);
    b.bind("planner.memory_capacity", p.memory_capacity);
    b.bind("planner.safety_instructions", p.safety_instructions);
    b.bind("planner.async", p.async);
    b.bind("planner.template", p.template_path);
    b.bind("planner.bev_width", p.bev.width);
    b.bind("planner.bev_height", p.bev.height);
    b.bind("planner.bev_ahead", p.bev.ahead);
    b.bind("planner.bev_behind", p.bev.behind);
    b.bind("planner.bev_ids", p.bev.draw_ids);
    b.bind("planner.reckless_trigger", p.reckless_trigger);

    auto& t = c.task;
    b.bind("task.v_ref", t.v_ref);
    b.bind("task.d_acc", t.d_acc);
    b.bind("task.d_safe_lc", t.d_safe_lc);
    b.bind("task.d_safe_acc", t.d_safe_acc);
    b.bind("task.d_safe_pv", t.d_safe_pv);
    b.bind("task.lc_done_tol", c.lc_done_tol);
    const std::array<const char*, 5> lateral{"_offset", "_heading", "_yaw_rate", "_steer", "_steer_rate"};
    const std::array<const char*, 3> longitudinal{"_error", "_accel", "_jerk"};
    detail::bind_array(b, "task.q_lk", t.q_lk, lateral);
    detail::bind_array(b, "task.q_lc", t.q_lc, lateral);
    detail::bind_array(b, "task.q_cs", t.q_cs, longitudinal);
    detail::bind_array(b, "task.q_acc", t.q_acc, longitudinal);

    b.bind("ego.wheelbase", c.ego.wheelbase);
    b.bind("ego.a_min", c.ego.a_min);
    b.bind("ego.a_max", c.ego.a_max);
    b.bind("ego.delta_min", c.ego.delta_min);
    b.bind("ego.delta_max", c.ego.delta_max);
    b.bind("ego.y_min", c.ego.y_min);
    b.bind("ego.y_max", c.ego.y_max);

    b.bind("assigner.vicinity", c.assigner.vicinity);
    b.bind("assigner.max_pvs", c.assigner.max_pvs);
    b.bind("assigner.acc_factor", c.assigner.acc_factor);

    b.bind("pid.tau_lateral", c.pid.tau_lateral);
    b.bind("pid.tau_heading", c.pid.tau_heading);
    b.bind("pid.tau_speed", c.pid.tau_speed);
    b.bind("pid.speed_step", c.pid.speed_step);
    b.bind("pid.speed_min", c.pid.speed_min);
    b.bind("pid.speed_max", c.pid.speed_max);

    b.bind("idm.a_max", c.idm.a_max);
    b.bind("idm.b_comfort", c.idm.b_comfort);
    b.bind("idm.s0", c.idm.s0);
    b.bind("idm.headway", c.idm.headway);
    b.bind("idm.delta", c.idm.delta);
    b.bind("idm.decel_limit", c.idm.decel_limit);

    b.apply(tree);
}

inline HarnessConfig parse_config(const std::string& ini_text) {
    boost::property_tree::ptree tree;
    std::istringstream in(ini_text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(e.what());
    }
    HarnessConfig c;
    apply_config(c, tree);
    c.validate();
    return c;
}

inline HarnessConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace mpcb

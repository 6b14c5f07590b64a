// Command-line front end: run episodes, rebuild reports, audit traces.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mpcb/harness/episode.hpp"
#include "mpcb/harness/metrics.hpp"
#include "mpcb/harness/planner_factory.hpp"

namespace fs = std::filesystem;
using namespace mpcb;

namespace {

std::string slurp_table(const fs::path& dir) {
    std::ifstream in(dir / "metrics.tsv");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct RunArgs {
    std::string pipeline{"proposed"};
    int episodes{1};
    std::uint64_t seed{0};
    std::string config;
    bool no_safety{false};
    bool no_iocp{false};
    std::string planner;
    std::string script;
    std::string replay_dir;
    std::string out{"runs"};
    std::string run_id{"run"};
    std::string label;
};

int cmd_run(const RunArgs& a) {
    HarnessConfig cfg = a.config.empty() ? HarnessConfig{} : load_config(a.config);
    if (!a.planner.empty()) cfg.planner.kind = a.planner;
    if (!a.script.empty()) cfg.planner.script = a.script;
    if (!a.replay_dir.empty()) cfg.planner.replay_dir = a.replay_dir;
    if (a.no_safety) cfg.planner.safety_instructions = false;
    cfg.validate();

    RunOptions opt;
    opt.kind = parse_pipeline(a.pipeline);
    opt.use_iocp = !a.no_iocp;
    opt.label = a.label;
    if (opt.label.empty()) {
        opt.label = a.pipeline;
        if (a.no_iocp) opt.label += "_no_iocp";
        if (a.no_safety) opt.label += "_no_safety";
    }

    const fs::path root = fs::path(a.out) / a.run_id;
    for (int i = 0; i < a.episodes; ++i) {
        const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(i);
        auto planner = make_planner(cfg, opt.kind);
        const auto r = run_episode(cfg, seed, *planner, opt);
        write_trace(root / opt.label / (std::to_string(seed) + ".trace"), r.trace);
        const auto m = episode_metrics(r.trace);
        std::printf("%s seed %llu: %s travel %.1f m, %d plans, %d/%d safe lane changes%s\n", opt.label.c_str(),
                    static_cast<unsigned long long>(seed), m.success ? "ok" : "FAILED", m.travel, m.planning_steps,
                    m.safe_lane_changes, m.lane_changes, r.summary.error ? (" (" + *r.summary.error + ")").c_str() : "");
    }
    write_report(root, metrics_from_dir(root));
    std::cout << '\n' << slurp_table(root);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MPC builder benchmark harness"};
    app.require_subcommand(1);

    RunArgs ra;
    auto* run = app.add_subcommand("run", "run closed-loop episodes and write traces plus a report");
    run->add_option("--pipeline", ra.pipeline, "proposed | lvlm2mpc | lvlm2pid")
        ->check(CLI::IsMember({"proposed", "lvlm2mpc", "lvlm2pid"}));
    run->add_option("--episodes", ra.episodes, "number of episodes (consecutive seeds)")->check(CLI::PositiveNumber);
    run->add_option("--seed", ra.seed, "first seed");
    run->add_option("--config", ra.config, "INI config file (see config/default.ini)")->check(CLI::ExistingFile);
    run->add_flag("--no-safety-instructions", ra.no_safety, "drop the safety section from the planner prompt");
    run->add_flag("--no-iocp", ra.no_iocp, "reject infeasible targets at once instead of bridging them");
    run->add_option("--planner", ra.planner, "api | scripted | replay | reckless (overrides planner.kind)")
        ->check(CLI::IsMember({"api", "scripted", "replay", "reckless"}));
    run->add_option("--script", ra.script, "command script for the scripted planner");
    run->add_option("--replay-dir", ra.replay_dir, "canned responses for the replay planner");
    run->add_option("--out", ra.out, "output root");
    run->add_option("--run-id", ra.run_id, "run directory under the output root");
    run->add_option("--label", ra.label, "group name (default: pipeline plus ablation suffixes)");

    std::string report_in;
    auto* report = app.add_subcommand("report", "re-aggregate every trace below a directory");
    report->add_option("--in", report_in, "run directory")->required()->check(CLI::ExistingDirectory);

    std::string audit_trace;
    auto* audit = app.add_subcommand("audit", "label each lane change in a trace safe or unsafe");
    audit->add_option("--trace", audit_trace, "trace file")->required()->check(CLI::ExistingFile);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check schema version and step order of a trace");
    validate->add_option("--trace", validate_path, "trace file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(ra);
        if (*report) {
            std::vector<std::string> warnings;
            const auto eps = metrics_from_dir(report_in, &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
            if (eps.empty()) throw IoError("no traces under " + report_in);
            write_report(report_in, eps);
            std::cout << slurp_table(report_in);
            return 0;
        }
        if (*audit) {
            const auto r = read_trace(audit_trace);
            for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
            const auto labels = lane_change_safety_audit(r.records);
            std::cout << "id\ttarget_lane\tstart_step\tend_step\tmin_gap_m\tlabel\n";
            int safe = 0;
            for (const auto& l : labels) {
                safe += l.safe;
                std::printf("%d\t%d\t%lld\t%lld\t%s\t%s\n", l.id, l.target_lane, static_cast<long long>(l.start_step),
                            static_cast<long long>(l.end_step),
                            std::isfinite(l.min_gap) ? detail::fixed(l.min_gap, 2).c_str() : "inf",
                            l.safe ? "safe" : "unsafe");
            }
            std::printf("%d/%zu safe\n", safe, labels.size());
            return 0;
        }
        if (*validate) {
            const auto v = validate_trace(validate_path);
            for (const auto& e : v.errors) std::cout << e << '\n';
            std::printf("%zu records, %s\n", v.records, v.ok ? "valid" : "INVALID");
            return v.ok ? 0 : 2;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

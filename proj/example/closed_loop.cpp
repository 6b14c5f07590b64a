// Runs one episode of each pipeline with the reckless scripted planner and prints a summary line per run.
#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "mpcb/harness/episode.hpp"

int main(int argc, char** argv) {
    using namespace mpcb;
    const std::uint64_t seed = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 0;
    const HarnessConfig cfg;
    for (auto kind : {PipelineKind::proposed, PipelineKind::lvlm2mpc, PipelineKind::lvlm2pid}) {
        RecklessPlanner planner;
        RunOptions opt;
        opt.kind = kind;
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = run_episode(cfg, seed, planner, opt);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        int plans = 0, intermediate = 0, reverted = 0;
        for (const auto& rec : r.trace) {
            plans += rec.kind == RecordKind::plan;
            if (rec.kind == RecordKind::switch_) {
                intermediate += rec.payload["mode"] == "intermediate";
                reverted += rec.payload["mode"] == "reverted";
            }
        }
        std::printf("%-9s seed %llu: %s, travel %.1f m, %d steps, %d plans, %d iOCP steps, %d reversions (%.1f s)\n",
                    to_string(kind), static_cast<unsigned long long>(seed),
                    r.summary.success ? "ok" : (r.summary.error ? r.summary.error->c_str() : "collision"),
                    r.summary.travel, r.summary.steps, plans, intermediate, reverted, secs);
    }
}

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mpcb/core/error.hpp"
#include "mpcb/trace/trace.hpp"

namespace mpcb {

struct LaneChangeLabel {
    int id{0};
    int target_lane{0};
    std::int64_t start_step{0}, end_step{0};
    bool safe{true};
    double min_gap{0.0};  ///< smallest |dx| to a target-lane neighbour over the span (inf if none)
};

namespace detail {

inline const nlohmann::json& field(const TraceRecord& r, const char* key) {
    if (!r.payload.contains(key)) throw MalformedTrace("record at step " + std::to_string(r.step) + " lacks '" + key + "'");
    return r.payload.at(key);
}

inline std::optional<nlohmann::json> start_event(const std::vector<TraceRecord>& t) {
    for (const auto& r : t)
        if (r.kind == RecordKind::event && r.payload.value("type", "") == "episode_start") return r.payload;
    return std::nullopt;
}

}  // namespace detail

/// Lane-change spans are runs of world records sharing an "lc" id. A span is safe iff at every step the nearest
/// target-lane vehicle ahead and the nearest one behind (or level) are both at least `d_safe` away longitudinally.
/// `d_safe` defaults to the value stored in the trace header.
inline std::vector<LaneChangeLabel> lane_change_safety_audit(const std::vector<TraceRecord>& trace,
                                                             std::optional<double> d_safe = std::nullopt) {
    if (!d_safe) {
        const auto start = detail::start_event(trace);
        d_safe = start && start->contains("d_safe_acc") ? (*start)["d_safe_acc"].get<double>() : 10.0;
    }
    std::vector<LaneChangeLabel> out;
    try {
        for (const auto& r : trace) {
            if (r.kind != RecordKind::world) continue;
            const auto& lc = detail::field(r, "lc");
            if (lc.is_null()) continue;
            const int id = lc.at("id").get<int>(), lane = lc.at("target_lane").get<int>();
            if (out.empty() || out.back().id != id) {
                if (!out.empty() && out.back().id > id) throw MalformedTrace("lane change ids go backwards at step " + std::to_string(r.step));
                out.push_back({id, lane, r.step, r.step, true, std::numeric_limits<double>::infinity()});
            }
            auto& span = out.back();
            span.end_step = r.step;
            const double ex = detail::field(r, "ego").at("x").get<double>();
            std::optional<std::pair<double, int>> ahead, behind;  // (|dx|, id)
            for (const auto& v : detail::field(r, "vehicles")) {
                if (v.at("lane").get<int>() != lane) continue;
                const double dx = v.at("x").get<double>() - ex;
                const int vid = v.at("id").get<int>();
                auto& slot = dx > 0.0 ? ahead : behind;
                const std::pair<double, int> cand{std::abs(dx), vid};
                if (!slot || cand < *slot) slot = cand;
            }
            for (const auto& s : {ahead, behind})
                if (s) {
                    span.min_gap = std::min(span.min_gap, s->first);
                    if (s->first < *d_safe) span.safe = false;
                }
        }
    } catch (const nlohmann::json::exception& e) {
        throw MalformedTrace(e.what());
    }
    return out;
}

struct EpisodeMetrics {
    std::string label;
    std::uint64_t seed{0};
    bool success{false};
    int planning_steps{0};
    int lane_change_decisions{0};  ///< plans asking for a lane change
    int lane_changes{0};           ///< audited lane-change spans
    int safe_lane_changes{0};
    int assisted{0};               ///< intermediate steps that ended in acceptance
    int rejected{0};
    double travel{0.0};
};

inline EpisodeMetrics episode_metrics(const std::vector<TraceRecord>& trace) {
    const auto start = detail::start_event(trace);
    if (!start) throw MalformedTrace("trace has no episode_start event");
    EpisodeMetrics m;
    m.label = start->value("label", start->value("pipeline", "?"));
    m.seed = start->value("seed", std::uint64_t{0});
    bool collided = false, errored = false, in_iocp = false;
    std::optional<double> x0, x1;
    for (const auto& r : trace) {
        switch (r.kind) {
            case RecordKind::plan: {
                ++m.planning_steps;
                const auto c = r.payload.value("command", "");
                m.lane_change_decisions += c == "LANE_LEFT" || c == "LANE_RIGHT";
                in_iocp = false;
                break;
            }
            case RecordKind::switch_: {
                const auto mode = r.payload.value("mode", "");
                if (r.payload.value("rejected", false)) ++m.rejected;
                if (mode == "intermediate") in_iocp = true;
                else if (mode == "direct" && in_iocp) {
                    ++m.assisted;
                    in_iocp = false;
                } else if (mode == "reverted") {
                    in_iocp = false;
                }
                break;
            }
            case RecordKind::world: {
                const double x = detail::field(r, "ego").at("x").get<double>();
                if (!x0) x0 = x;
                x1 = x;
                break;
            }
            case RecordKind::event: {
                const auto type = r.payload.value("type", "");
                collided |= type == "collision";
                errored |= type == "error";
                break;
            }
            case RecordKind::solve: break;
        }
    }
    m.success = !collided && !errored;
    m.travel = x0 ? *x1 - *x0 : 0.0;
    for (const auto& l : lane_change_safety_audit(trace)) {
        ++m.lane_changes;
        m.safe_lane_changes += l.safe;
    }
    return m;
}

struct Metrics {
    std::string label;
    int episodes{0};
    int successes{0};
    int planning_steps{0};
    int lane_change_decisions{0};
    int lane_changes{0};
    int safe_lane_changes{0};
    int assisted_count{0};
    int rejected_count{0};
    double total_travel{0.0};

    double mean_travel() const { return episodes ? total_travel / episodes : 0.0; }
    std::optional<double> safe_rate() const {
        if (lane_changes == 0) return std::nullopt;
        return static_cast<double>(safe_lane_changes) / lane_changes;
    }
};

/// Ordered fold by (label, seed); groups keep first-seen label order sorted lexicographically.
inline std::vector<Metrics> aggregate(std::vector<EpisodeMetrics> eps) {
    std::sort(eps.begin(), eps.end(), [](const auto& a, const auto& b) {
        return a.label != b.label ? a.label < b.label : a.seed < b.seed;
    });
    std::vector<Metrics> out;
    for (const auto& e : eps) {
        if (out.empty() || out.back().label != e.label) out.push_back(Metrics{e.label});
        auto& m = out.back();
        ++m.episodes;
        m.successes += e.success;
        m.planning_steps += e.planning_steps;
        m.lane_change_decisions += e.lane_change_decisions;
        m.lane_changes += e.lane_changes;
        m.safe_lane_changes += e.safe_lane_changes;
        m.assisted_count += e.assisted;
        m.rejected_count += e.rejected;
        m.total_travel += e.travel;
    }
    return out;
}

inline nlohmann::json metrics_json(const std::vector<Metrics>& ms, const std::vector<EpisodeMetrics>& eps) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& m : ms) {
        const auto rate = m.safe_rate();
        groups.push_back({{"label", m.label},
                          {"episodes", m.episodes},
                          {"successes", m.successes},
                          {"planning_steps", m.planning_steps},
                          {"lane_change_decisions", m.lane_change_decisions},
                          {"lane_changes", m.lane_changes},
                          {"safe_lane_changes", m.safe_lane_changes},
                          {"safe_lane_change_rate", rate ? nlohmann::json(*rate) : nlohmann::json(nullptr)},
                          {"assisted_count", m.assisted_count},
                          {"rejected_count", m.rejected_count},
                          {"mean_travel_m", m.mean_travel()}});
    }
    nlohmann::json episodes = nlohmann::json::array();
    for (const auto& e : eps)
        episodes.push_back({{"label", e.label}, {"seed", e.seed}, {"success", e.success},
                            {"planning_steps", e.planning_steps}, {"lane_change_decisions", e.lane_change_decisions},
                            {"lane_changes", e.lane_changes}, {"safe_lane_changes", e.safe_lane_changes},
                            {"assisted", e.assisted}, {"rejected", e.rejected}, {"travel_m", e.travel}});
    return {{"groups", groups}, {"episodes", episodes}};
}

namespace detail {

inline std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace detail

/// Tab-separated table: one row per metric, one column per group.
inline std::string metrics_table(const std::vector<Metrics>& ms) {
    std::string s = "metric";
    for (const auto& m : ms) s += "\t" + m.label;
    s += "\n";
    auto row = [&](const std::string& name, auto cell) {
        s += name;
        for (const auto& m : ms) s += "\t" + cell(m);
        s += "\n";
    };
    row("planning_steps", [](const Metrics& m) { return std::to_string(m.planning_steps); });
    row("lane_change_decisions", [](const Metrics& m) { return std::to_string(m.lane_change_decisions); });
    row("assisted", [](const Metrics& m) { return std::to_string(m.assisted_count); });
    row("rejected", [](const Metrics& m) { return std::to_string(m.rejected_count); });
    row("success_rate", [](const Metrics& m) { return std::to_string(m.successes) + "/" + std::to_string(m.episodes); });
    row("safe_lane_change_rate", [](const Metrics& m) {
        const auto r = m.safe_rate();
        return r ? detail::fixed(100.0 * *r, 1) + "% (" + std::to_string(m.safe_lane_changes) + "/" +
                       std::to_string(m.lane_changes) + ")"
                 : std::string("n/a");
    });
    row("mean_travel_m", [](const Metrics& m) { return detail::fixed(m.mean_travel(), 1); });
    return s;
}

/// Bar chart of mean travel distance per group.
inline std::string travel_svg(const std::vector<Metrics>& ms) {
    const int bar = 60, gap = 30, left = 60, top = 30, h = 240, w = left + static_cast<int>(ms.size()) * (bar + gap) + gap;
    double max_v = 1.0;
    for (const auto& m : ms) max_v = std::max(max_v, m.mean_travel());
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
                    std::to_string(h + top + 60) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<text x=\"" + std::to_string(left) + "\" y=\"18\">Mean travel distance [m]</text>\n";
    s += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + std::to_string(top + h) + "\" x2=\"" + std::to_string(w) +
         "\" y2=\"" + std::to_string(top + h) + "\" stroke=\"black\"/>\n";
    for (std::size_t i = 0; i < ms.size(); ++i) {
        const double v = ms[i].mean_travel();
        const int bh = static_cast<int>(std::lround(h * v / max_v));
        const int x = left + gap + static_cast<int>(i) * (bar + gap);
        s += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(top + h - bh) + "\" width=\"" +
             std::to_string(bar) + "\" height=\"" + std::to_string(bh) + "\" fill=\"#4a78c2\"/>\n";
        s += "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(top + h - bh - 4) + "\">" +
             detail::fixed(v, 1) + "</text>\n";
        s += "<text x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(top + h + 16) + "\">" + ms[i].label +
             "</text>\n";
    }
    return s + "</svg>\n";
}

/// Writes metrics.json, metrics.tsv and travel.svg into `dir`.
inline void write_report(const std::filesystem::path& dir, const std::vector<EpisodeMetrics>& eps) {
    const auto ms = aggregate(eps);
    std::filesystem::create_directories(dir);
    auto put = [&](const char* name, const std::string& text) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / name).string());
        out << text;
    };
    put("metrics.json", metrics_json(ms, [&] {
                            auto sorted = eps;
                            std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
                                return a.label != b.label ? a.label < b.label : a.seed < b.seed;
                            });
                            return sorted;
                        }()).dump(2) + "\n");
    put("metrics.tsv", metrics_table(ms));
    put("travel.svg", travel_svg(ms));
}

/// Collects every `*.trace` below `dir`, in path order.
inline std::vector<std::filesystem::path> find_traces(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".trace") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

/// Per-episode metrics for every trace below `dir`. Truncation warnings are appended to `warnings` when given.
inline std::vector<EpisodeMetrics> metrics_from_dir(const std::filesystem::path& dir,
                                                    std::vector<std::string>* warnings = nullptr) {
    std::vector<EpisodeMetrics> eps;
    for (const auto& p : find_traces(dir)) {
        auto r = read_trace(p);
        if (warnings) warnings->insert(warnings->end(), r.warnings.begin(), r.warnings.end());
        eps.push_back(episode_metrics(r.records));
    }
    return eps;
}

}  // namespace mpcb

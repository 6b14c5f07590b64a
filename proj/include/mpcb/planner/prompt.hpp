#pragma once

#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mpcb/builder/switcher.hpp"
#include "mpcb/core/error.hpp"
#include "mpcb/planner/command.hpp"
#include "mpcb/sim/world.hpp"

namespace mpcb {

/// What the motion layer reports back about the previous command.
struct PlannerFeedback {
    TaskCommand last_command{TaskCommand::IDLE};
    bool feasible{true};
    bool rejected{false};
    std::optional<SwitchMode> assist_mode;
};

struct MemoryEntry {
    std::string observation;
    std::string reasoning;
    TaskCommand command{TaskCommand::IDLE};
    std::optional<PlannerFeedback> feedback;
};

/// FIFO of past planning rounds.
class ContextMemory {
public:
    explicit ContextMemory(std::size_t capacity = 5) : capacity_(capacity) {}

    void push(MemoryEntry e) {
        if (capacity_ == 0) return;
        if (entries_.size() == capacity_) entries_.pop_front();
        entries_.push_back(std::move(e));
    }
    const std::deque<MemoryEntry>& entries() const { return entries_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::size_t capacity_;
    std::deque<MemoryEntry> entries_;
};

inline const std::vector<std::string>& prompt_section_order() {
    static const std::vector<std::string> order{"system_role",      "observation",       "command_format",
                                                "safety_instructions", "user_instruction", "context_memory",
                                                "cot_cue"};
    return order;
}

struct PromptTemplate {
    std::map<std::string, std::string> sections;

    static PromptTemplate parse(const std::string& text) {
        PromptTemplate t;
        std::istringstream in(text);
        std::string line, current;
        while (std::getline(in, line)) {
            if (!line.empty() && line[0] == '#' && (line.size() < 2 || line[1] != '#')) continue;
            if (line.size() > 4 && line.rfind("[[", 0) == 0 && line.substr(line.size() - 2) == "]]") {
                current = line.substr(2, line.size() - 4);
                const auto& order = prompt_section_order();
                if (std::find(order.begin(), order.end(), current) == order.end())
                    throw ConfigError("unknown prompt section '" + current + "'");
                t.sections[current];
                continue;
            }
            if (current.empty()) {
                if (line.find_first_not_of(" \t\r") != std::string::npos)
                    throw ConfigError("prompt template text outside a section: " + line);
                continue;
            }
            t.sections[current] += line + "\n";
        }
        for (auto& [name, body] : t.sections)
            while (!body.empty() && (body.back() == '\n' || body.back() == ' ')) body.pop_back();
        return t;
    }

    static PromptTemplate load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot read prompt template " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }
};

inline std::string default_template_path() {
#ifdef MPCB_SOURCE_DIR
    return std::string(MPCB_SOURCE_DIR) + "/assets/prompt_template.txt";
#else
    return "assets/prompt_template.txt";
#endif
}

struct PromptOptions {
    bool safety_instructions{true};
    double d_safe{10.0};
    std::vector<TaskCommand> commands = mpc_command_set();
    double observation_range{100.0};  ///< vehicles listed within this longitudinal distance
};

struct PromptBundle {
    std::string text;
    std::vector<std::string> sections;  ///< names in emission order
};

namespace detail {

inline std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline void replace_all(std::string& s, const std::string& from, const std::string& to) {
    for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
        s.replace(pos, from.size(), to);
}

}  // namespace detail

inline std::string observation_summary(const WorldState& w) {
    return "ego in lane " + std::to_string(w.ego_lane()) + " at " + detail::fmt("%.1f", w.ego.v) + " m/s";
}

inline std::string observation_text(const WorldState& w, double range) {
    std::string s = "Time " + detail::fmt("%.2f", w.time) + " s. Ego car: lane " + std::to_string(w.ego_lane()) +
                    " of " + std::to_string(w.road.lanes) + ", speed " + detail::fmt("%.1f", w.ego.v) + " m/s.\n";
    std::vector<const Vehicle*> near;
    for (const auto& v : w.vehicles)
        if (std::abs(v.x - w.ego.x) <= range) near.push_back(&v);
    std::sort(near.begin(), near.end(), [&](const Vehicle* a, const Vehicle* b) {
        const double da = std::abs(a->x - w.ego.x), db = std::abs(b->x - w.ego.x);
        return da != db ? da < db : a->id < b->id;
    });
    if (near.empty()) s += "No other cars within " + detail::fmt("%.0f", range) + " m.";
    int n = 0;
    for (const auto* v : near) {
        const double dx = v->x - w.ego.x, dv = v->vx - w.ego.v;
        s += std::to_string(++n) + ". car " + std::to_string(v->id) + ": lane " + std::to_string(v->lane) + ", " +
             detail::fmt("%.1f", std::abs(dx)) + " m " + (dx >= 0 ? "ahead" : "behind") + ", speed " +
             detail::fmt("%.1f", v->vx) + " m/s (" + detail::fmt("%+.1f", dv) + " relative)\n";
    }
    while (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
}

inline std::string rejection_notice() {
    return "NOTICE: the motion planner rejected the previous command as infeasible and kept the earlier task.";
}

inline std::string feedback_text(const std::optional<PlannerFeedback>& fb) {
    if (!fb) return "";
    std::string s = std::string("Previous command: ") + to_string(fb->last_command) +
                    ". Feasibility check: " + (fb->feasible ? "feasible" : "infeasible") + ".";
    if (fb->assist_mode == SwitchMode::intermediate) s += " The motion planner is steering towards it through an intermediate plan.";
    if (fb->rejected) s += "\n" + rejection_notice();
    return s;
}

inline std::string memory_text(const ContextMemory& m) {
    if (m.size() == 0) return "None yet.";
    std::string s;
    int i = 0;
    for (const auto& e : m.entries()) {
        std::string reasoning = e.reasoning;
        std::replace(reasoning.begin(), reasoning.end(), '\n', ' ');
        if (reasoning.size() > 300) reasoning = reasoning.substr(0, 300) + "...";
        s += std::to_string(++i) + ". " + e.observation + "; decided " + to_string(e.command);
        if (e.feedback) s += std::string("; ") + (e.feedback->rejected ? "rejected" : e.feedback->feasible ? "feasible" : "infeasible");
        if (!reasoning.empty()) s += "; reasoning: " + reasoning;
        s += "\n";
    }
    s.pop_back();
    return s;
}

inline PromptBundle render_prompt(const PromptTemplate& tpl, const WorldState& w,
                                  const std::optional<PlannerFeedback>& feedback, const ContextMemory& memory,
                                  const PromptOptions& opt) {
    std::string commands;
    for (auto c : opt.commands) commands += (commands.empty() ? "" : ", ") + std::string(to_string(c));
    const std::map<std::string, std::string> values{
        {"{{observation}}", observation_text(w, opt.observation_range)},
        {"{{feedback}}", feedback_text(feedback)},
        {"{{commands}}", commands},
        {"{{d_safe}}", detail::fmt("%g", opt.d_safe)},
        {"{{memory}}", memory_text(memory)},
    };
    PromptBundle b;
    for (const auto& name : prompt_section_order()) {
        if (name == "safety_instructions" && !opt.safety_instructions) continue;
        auto it = tpl.sections.find(name);
        if (it == tpl.sections.end()) continue;
        std::string body = it->second;
        for (const auto& [k, v] : values) detail::replace_all(body, k, v);
        while (!body.empty() && body.back() == '\n') body.pop_back();
        b.text += body + "\n\n";
        b.sections.push_back(name);
    }
    if (!b.text.empty()) b.text.pop_back();
    return b;
}

}  // namespace mpcb

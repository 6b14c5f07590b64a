#pragma once

#include <regex>
#include <string>
#include <vector>

#include "mpcb/core/error.hpp"
#include "mpcb/sim/world.hpp"

namespace mpcb {

inline std::vector<TaskCommand> mpc_command_set() {
    return {TaskCommand::LANE_LEFT, TaskCommand::IDLE, TaskCommand::LANE_RIGHT};
}
inline std::vector<TaskCommand> pid_command_set() {
    return {TaskCommand::LANE_LEFT, TaskCommand::IDLE, TaskCommand::LANE_RIGHT, TaskCommand::FASTER,
            TaskCommand::SLOWER};
}

/// Last whole-word, upper-case command token from `allowed` in the text.
inline TaskCommand parse_command(const std::string& text, const std::vector<TaskCommand>& allowed) {
    static const std::regex token(R"((^|[^A-Za-z0-9_])(LANE_LEFT|LANE_RIGHT|IDLE|FASTER|SLOWER)(?=$|[^A-Za-z0-9_]))");
    std::optional<TaskCommand> found;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), token); it != std::sregex_iterator(); ++it) {
        auto c = command_from_string((*it)[2].str());
        if (c && std::find(allowed.begin(), allowed.end(), *c) != allowed.end()) found = c;
    }
    if (!found) throw ParseError("no command token in response");
    return *found;
}

}  // namespace mpcb

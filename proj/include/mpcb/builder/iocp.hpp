#pragma once

// Intermediate OCP between a previous OCP A and a target OCP B:
//   X = X_A x X_B (B's components prefixed "target/"), f = (f_A, f_B),
//   J = J_A + sum_{k<N} rho_g * |max(0, g_B)|^2 + rho_h * |h_B|^2,
//   g = g_A, h = h_A.

#include <string>
#include <vector>

#include "mpcb/core/ocp.hpp"

namespace mpcb {

inline constexpr const char* kTargetPrefix = "target/";

struct IocpParams {
    double rho_g{10.0};
    double rho_h{10.0};
    bool include_target_cost{false};  ///< also add J_B to the iOCP cost

    void validate() const {
        if (!(rho_g > 0.0) || !(rho_h > 0.0)) throw InvalidParams("iocp penalty coefficients must be > 0");
    }
};

inline std::string join_provenance(const std::vector<std::string>& p) {
    std::string out;
    for (const auto& s : p) out += (out.empty() ? "" : "+") + s;
    return out;
}

inline bool is_iocp(const std::vector<std::string>& provenance) {
    return provenance.size() == 1 && provenance.front().rfind("iocp(", 0) == 0;
}
inline bool is_iocp(const Ocp& ocp) { return is_iocp(ocp.provenance()); }

inline Ocp make_iocp(const Ocp& prev, const Ocp& target, const IocpParams& params = {}) {
    params.validate();
    if (!(prev.input_space() == target.input_space()))
        throw IncompatibleInputSpace("iOCP requires previous and target OCPs on the same input box");
    if (prev.horizon() != target.horizon() || prev.dt() != target.dt())
        throw InvalidParams("iOCP requires previous and target OCPs with the same horizon and step");

    const std::size_t offset = prev.state_dim();
    auto schema = StateSchema::concat(prev.schema(), target.schema().prefixed(kTargetPrefix));

    StageProgram program = prev.program();
    const std::size_t first = program.append_dynamics(target.program(), offset);

    PenaltyGroup group;
    group.rho_g = params.rho_g;
    group.rho_h = params.rho_h;
    group.last_stage = prev.horizon() - 1;
    for (auto b : target.program().terms()) {
        if (!b.constrains || (b.term->n_g() == 0 && b.term->n_h() == 0)) continue;
        for (auto& s : b.slots) s += offset;
        b.state_offset += offset;
        group.terms.push_back(std::move(b));
    }

    int root = program.root();
    if (params.include_target_cost) root = program.add_sum(root, program.graft_cost(target.program(), first));
    if (!group.terms.empty()) root = program.add_sum(root, program.add_penalty(std::move(group)));
    program.set_root(root);
    program.refresh_labels();

    std::vector<std::string> provenance{"iocp(" + join_provenance(prev.provenance()) + "->" +
                                        join_provenance(target.provenance()) + ")"};
    return Ocp(prev.input_space(), std::move(schema), std::move(program), prev.horizon(), prev.dt(),
               std::move(provenance));
}

}  // namespace mpcb

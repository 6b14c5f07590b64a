#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mpcb/builder/iocp.hpp"
#include "mpcb/core/ocp.hpp"

namespace mpcb {

struct Violation {
    int stage{0};
    std::string label;  ///< "TERM.component", e.g. "LC.gap"
    double value{0.0};
};

struct FeasibilityReport {
    bool feasible{true};
    std::vector<Violation> violations;

    /// Distinct violated labels in first-seen order.
    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        for (const auto& v : violations)
            if (std::find(out.begin(), out.end(), v.label) == out.end()) out.push_back(v.label);
        return out;
    }
};

/// Rolls `ocp` from x_t under `shifted` (entry k is u(k+1|t-1)) over stages 0..N-2 and
/// checks g <= 0 and |h| <= eps_h at each of those stages.
inline FeasibilityReport check_feasibility(const Ocp& ocp, const StateVector& x_t, const InputSequence& shifted,
                                           const RolloutContext& ctx = {}, double eps_h = 1e-6) {
    check_schema(ocp, x_t.schema, "state");
    const int stages = ocp.horizon() - 1;
    if (static_cast<int>(shifted.size()) < stages)
        throw SchemaMismatch("feasibility check needs " + std::to_string(stages) + " shifted inputs, got " +
                             std::to_string(shifted.size()));
    FeasibilityReport report;
    if (stages <= 0) return report;
    std::span<const ControlInput> u(shifted.data(), static_cast<std::size_t>(stages));
    std::vector<double> x = x_t.values, next(x.size()), dx(x.size()), g(ocp.n_g()), h(ocp.n_h());
    const auto& gl = ocp.program().ineq_labels();
    const auto& hl = ocp.program().eq_labels();
    for (int k = 0; k < stages; ++k) {
        const auto in = ocp.stage_input(u, k, ctx);
        ocp.ineq(x, in, g);
        ocp.eq(x, in, h);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!(g[i] <= 0.0)) report.violations.push_back({k, gl[i], g[i]});
        for (std::size_t j = 0; j < h.size(); ++j)
            if (!(std::abs(h[j]) <= eps_h)) report.violations.push_back({k, hl[j], h[j]});
        ocp.step(x, in, dx, next);
        std::swap(x, next);
    }
    report.feasible = report.violations.empty();
    return report;
}

enum class SwitchMode { direct, intermediate, reverted };

inline const char* to_string(SwitchMode m) {
    switch (m) {
        case SwitchMode::direct: return "direct";
        case SwitchMode::intermediate: return "intermediate";
        case SwitchMode::reverted: return "reverted";
    }
    return "?";
}

/// Outcome of the switching rule for one step, independent of the OCPs involved.
struct Transition {
    SwitchMode mode;
    bool is_rejected;
    int n_iocp;  ///< count after this step
};

inline Transition decide(bool feasible, int n_iocp, int n_max) {
    if (feasible) return {SwitchMode::direct, false, 0};
    if (n_iocp < n_max) return {SwitchMode::intermediate, false, n_iocp + 1};
    return {SwitchMode::reverted, true, 0};
}

struct SwitcherState {
    std::optional<Ocp> prev;       ///< last accepted OCP
    int n_iocp{0};
    int n_max{50};
    InputSequence last_warm_start; ///< shifted previous solution
};

struct SwitchDecision {
    Ocp solve_ocp;
    bool is_rejected;
    SwitchMode mode;
};

/// Applies the switching rule given a precomputed feasibility verdict.
inline SwitchDecision switch_ocp(SwitcherState& s, const Ocp& target, bool feasible, const IocpParams& params = {}) {
    if (!s.prev) throw InvalidParams("switcher has no previous OCP");
    if (s.n_max < 0 || s.n_iocp < 0 || s.n_iocp > s.n_max) throw InvalidParams("switcher iOCP count out of range");
    const auto t = decide(feasible, s.n_iocp, s.n_max);
    s.n_iocp = t.n_iocp;
    switch (t.mode) {
        case SwitchMode::direct: s.prev = target; return {target, false, t.mode};
        case SwitchMode::intermediate: return {make_iocp(*s.prev, target, params), false, t.mode};
        case SwitchMode::reverted: return {*s.prev, true, t.mode};
    }
    throw InvalidParams("unreachable switch mode");
}

struct SwitchOutcome {
    SwitchDecision decision;
    FeasibilityReport report;
};

/// Full switcher step: feasibility of `target` under the stored warm start, then the switching rule.
inline SwitchOutcome switch_ocp(SwitcherState& s, const Ocp& target, const StateVector& x_t,
                                const RolloutContext& ctx = {}, const IocpParams& params = {},
                                double eps_h = 1e-6) {
    auto warm = fit_warm_start(s.last_warm_start, target.horizon());
    auto report = check_feasibility(target, x_t, warm, ctx, eps_h);
    auto decision = switch_ocp(s, target, report.feasible, params);
    return {std::move(decision), std::move(report)};
}

}  // namespace mpcb

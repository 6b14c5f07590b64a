#pragma once

// Sampling-based MPC (MPPI) with indicator-penalty constraint handling:
//
//   C_k = J_k + mu * ( #{i : g_k,i > 0} + #{j : |h_k,j| > eps_h} )
//
// Sample 0 is always the unperturbed warm start. By default each sample draws
// one perturbation per input channel and holds it across the horizon: with
// rate terms priced per second, independent per-stage noise makes every
// perturbed sample far costlier than the warm start and the update stalls.
// Noise comes from std::mt19937_64 / std::normal_distribution, drawn serially
// in sample order, and the weighted average is an index-ordered fold, so
// results are bit-exact for a given seed on a given platform.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mpcb/core/ocp.hpp"

namespace mpcb {

enum class NoiseModel { held, iid };

inline NoiseModel parse_noise_model(const std::string& s) {
    if (s == "held") return NoiseModel::held;
    if (s == "iid") return NoiseModel::iid;
    throw InvalidParams("unknown mppi noise model '" + s + "'");
}

struct MppiConfig {
    int samples{512};
    double lambda{1.0};
    double sigma_a{std::sqrt(2.0)};   ///< acceleration noise std; variance 2.0
    double sigma_delta{0.1};          ///< steering noise std; variance 0.01
    double mu{100.0};
    double eps_h{1e-6};
    int iterations{1};
    std::uint64_t seed{0};
    NoiseModel noise{NoiseModel::held};

    void validate() const {
        if (samples < 1) throw InvalidParams("mppi.samples must be >= 1");
        if (!(lambda > 0.0)) throw InvalidParams("mppi.lambda must be > 0");
        if (!(mu > 0.0)) throw InvalidParams("mppi.mu must be > 0");
        if (!(sigma_a >= 0.0) || !(sigma_delta >= 0.0)) throw InvalidParams("mppi noise std must be >= 0");
        if (iterations < 1) throw InvalidParams("mppi.iterations must be >= 1");
    }
};

struct SolveResult {
    ControlInput first_input;
    Trajectory planned;            ///< rollout of `inputs`
    InputSequence inputs;          ///< optimised u(0..N-1|t)
    InputSequence nominal_inputs;  ///< `inputs` shifted one step, last repeated: next warm start
    double cost{0.0};              ///< penalised cost of `inputs`
    double warm_start_cost{0.0};   ///< penalised cost of the (clamped) warm start
};

/// Scratch buffers for allocation-free evaluation.
struct CostWorkspace {
    std::vector<double> x, next, dx, g, h;

    void reserve(const Ocp& ocp) {
        x.resize(ocp.state_dim());
        next.resize(ocp.state_dim());
        dx.resize(ocp.state_dim());
        g.resize(ocp.n_g());
        h.resize(ocp.n_h());
    }
};

inline int count_violations(std::span<const double> g, std::span<const double> h, double eps_h) {
    int n = 0;
    for (double v : g) n += v > 0.0 ? 1 : 0;
    for (double v : h) n += std::abs(v) > eps_h ? 1 : 0;
    return n;
}

inline double penalized_stage_cost(const Ocp& ocp, std::span<const double> x, const StageInput& in, double mu,
                                   double eps_h, CostWorkspace& ws) {
    ws.g.resize(ocp.n_g());
    ws.h.resize(ocp.n_h());
    ocp.ineq(x, in, ws.g);
    ocp.eq(x, in, ws.h);
    return ocp.stage_cost(x, in) + mu * count_violations(ws.g, ws.h, eps_h);
}

inline double penalized_stage_cost(const Ocp& ocp, const StateVector& x, const StageInput& in, double mu,
                                   double eps_h = 1e-6) {
    check_schema(ocp, x.schema, "state");
    CostWorkspace ws;
    return penalized_stage_cost(ocp, x.values, in, mu, eps_h, ws);
}

/// Sum of C_k over k = 0..N along the Euler rollout of `inputs` from `x0`.
inline double penalized_cost(const Ocp& ocp, std::span<const double> x0, std::span<const ControlInput> inputs,
                             const RolloutContext& ctx, double mu, double eps_h, CostWorkspace& ws) {
    ws.reserve(ocp);
    std::copy(x0.begin(), x0.end(), ws.x.begin());
    const int N = static_cast<int>(inputs.size());
    double total = 0.0;
    for (int k = 0; k <= N; ++k) {
        const auto in = ocp.stage_input(inputs, k, ctx);
        total += penalized_stage_cost(ocp, ws.x, in, mu, eps_h, ws);
        if (k == N) break;
        ocp.step(ws.x, in, ws.dx, ws.next);
        std::swap(ws.x, ws.next);
    }
    return total;
}

inline double penalized_cost(const Ocp& ocp, const StateVector& x0, const InputSequence& inputs, double mu,
                             const RolloutContext& ctx = {}, double eps_h = 1e-6) {
    check_schema(ocp, x0.schema, "initial state");
    CostWorkspace ws;
    return penalized_cost(ocp, x0.values, inputs, ctx, mu, eps_h, ws);
}

namespace detail {

inline InputSequence mppi_iteration(const Ocp& ocp, std::span<const double> x0, const InputSequence& warm,
                                    const MppiConfig& cfg, const RolloutContext& ctx, std::mt19937_64& rng,
                                    double& cost_out, double& warm_cost_out) {
    const auto N = warm.size();
    const auto K = static_cast<std::size_t>(cfg.samples);
    const auto& box = ocp.input_space();

    // Perturbed, clamped candidate sequences; sample 0 is the warm start itself.
    std::vector<ControlInput> candidates(K * N);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < N; ++k) candidates[k] = box.clamp(warm[k]);
    for (std::size_t i = 1; i < K; ++i) {
        double na = 0.0, nd = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
            if (k == 0 || cfg.noise == NoiseModel::iid) {
                na = normal(rng);
                nd = normal(rng);
            }
            candidates[i * N + k] =
                box.clamp({warm[k].a + cfg.sigma_a * na, warm[k].delta + cfg.sigma_delta * nd});
        }
    }

    std::vector<double> costs(K);
    CostWorkspace ws;
    for (std::size_t i = 0; i < K; ++i) {
        costs[i] = penalized_cost(ocp, x0, std::span(candidates).subspan(i * N, N), ctx, cfg.mu, cfg.eps_h, ws);
        if (!std::isfinite(costs[i])) throw NonFiniteCost("sample " + std::to_string(i) + " has non-finite cost");
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < K; ++i)
        if (costs[i] < costs[best]) best = i;

    double weight_sum = 0.0;
    std::vector<double> weights(K);
    for (std::size_t i = 0; i < K; ++i) {
        weights[i] = std::exp(-(costs[i] - costs[best]) / cfg.lambda);
        weight_sum += weights[i];
    }
    InputSequence averaged(N);
    for (std::size_t k = 0; k < N; ++k) {
        double a = 0.0, d = 0.0;
        for (std::size_t i = 0; i < K; ++i) {
            a += weights[i] * candidates[i * N + k].a;
            d += weights[i] * candidates[i * N + k].delta;
        }
        averaged[k] = box.clamp({a / weight_sum, d / weight_sum});
    }
    const double averaged_cost = penalized_cost(ocp, x0, averaged, ctx, cfg.mu, cfg.eps_h, ws);
    warm_cost_out = costs[0];

    // The average can be worse than its best sample on non-convex problems; never return worse.
    if (averaged_cost <= costs[best]) {
        cost_out = averaged_cost;
        return averaged;
    }
    cost_out = costs[best];
    return InputSequence(candidates.begin() + static_cast<std::ptrdiff_t>(best * N),
                         candidates.begin() + static_cast<std::ptrdiff_t>((best + 1) * N));
}

}  // namespace detail

inline SolveResult solve(const Ocp& ocp, const StateVector& x0, const InputSequence& warm_start,
                         const MppiConfig& cfg, const RolloutContext& ctx = {}) {
    cfg.validate();
    check_schema(ocp, x0.schema, "initial state");
    std::mt19937_64 rng(cfg.seed);
    InputSequence current = fit_warm_start(warm_start, ocp.horizon());
    SolveResult result;
    double cost = 0.0, warm_cost = 0.0;
    for (int it = 0; it < cfg.iterations; ++it) {
        current = detail::mppi_iteration(ocp, x0.values, current, cfg, ctx, rng, cost, warm_cost);
        if (it == 0) result.warm_start_cost = warm_cost;
    }
    result.inputs = current;
    result.cost = cost;
    result.first_input = current.front();
    result.nominal_inputs = shift_inputs(current);
    result.planned = rollout(ocp, x0, current, ctx);
    return result;
}

}  // namespace mpcb

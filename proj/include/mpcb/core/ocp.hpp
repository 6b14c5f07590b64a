#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mpcb/core/primitive.hpp"
#include "mpcb/core/types.hpp"

namespace mpcb {

/// Input-side arguments of one stage evaluation.
struct StageInput {
    ControlInput u;
    ControlInput u_prev;
    int k{0};
    double t{0.0};
};

/// A primitive term whose slots have been resolved to indices of a concrete state vector.
struct BoundTerm {
    std::shared_ptr<const PrimitiveTerm> term;
    std::vector<std::size_t> slots;
    std::size_t state_offset{0};  ///< index of the term's first own component
    bool constrains{true};        ///< contributes its g/h to the program's constraints
};

/// Squared-hinge penalty on a group of constraints, active on stages 0..last_stage.
struct PenaltyGroup {
    std::vector<BoundTerm> terms;
    double rho_g{0.0};
    double rho_h{0.0};
    int last_stage{0};
};

/// Flat, evaluation-ready form of an OCP's functions.
///
/// Cost is kept as a binary tree mirroring the composition order so that
/// J(P1 (+) P2) is evaluated as exactly J(P1) + J(P2).
class StageProgram {
public:
    struct CostNode {
        enum class Op { term, sum, penalty } op{Op::term};
        std::size_t index{0};  ///< term or penalty index
        int left{-1}, right{-1};
    };

    /// Binds a primitive against `schema`; every slot name must resolve.
    static StageProgram bind(const MpcPrimitive& p, const StateSchema& schema) {
        StageProgram prog;
        prog.state_dim_ = schema.size();
        for (const auto& t : p.terms()) prog.add_term(bind_term(t, schema, 0), true);
        std::size_t next = 0;
        prog.root_ = prog.add_tree(p.root(), next);
        return prog;
    }

    static BoundTerm bind_term(const std::shared_ptr<const PrimitiveTerm>& t, const StateSchema& schema,
                               std::size_t offset) {
        BoundTerm b;
        b.term = t;
        for (const auto& name : t->slot_names()) {
            auto i = schema.index_of(name);
            if (!i) throw UnresolvedRead("primitive " + t->name + " reads '" + name + "' which no primitive provides");
            b.slots.push_back(*i + offset);
        }
        if (!t->own_state.empty()) {
            b.state_offset = b.slots.front();
            for (std::size_t j = 0; j < t->own_state.size(); ++j)
                if (b.slots[j] != b.state_offset + j)
                    throw SchemaMismatch("own state of " + t->name + " is not contiguous");
        }
        return b;
    }

    /// Appends another program's terms (indices shifted by `offset`) for dynamics only.
    /// Returns the index of the first appended term.
    std::size_t append_dynamics(const StageProgram& other, std::size_t offset) {
        std::size_t first = terms_.size();
        for (auto b : other.terms_) {
            for (auto& s : b.slots) s += offset;
            b.state_offset += offset;
            b.constrains = false;
            terms_.push_back(std::move(b));
        }
        state_dim_ = std::max(state_dim_, other.state_dim_ + offset);
        return first;
    }

    /// Adds a cost node summing the cost tree of `other` (already appended at `first_term`).
    int graft_cost(const StageProgram& other, std::size_t first_term) {
        if (other.root_ < 0) return -1;
        if (!other.penalties_.empty()) throw InvalidParams("cannot graft a cost tree that carries penalties");
        int base = static_cast<int>(nodes_.size());
        for (auto n : other.nodes_) {
            if (n.op == CostNode::Op::term) n.index += first_term;
            if (n.left >= 0) n.left += base;
            if (n.right >= 0) n.right += base;
            nodes_.push_back(n);
        }
        return other.root_ + base;
    }

    int add_penalty(PenaltyGroup g) {
        penalties_.push_back(std::move(g));
        nodes_.push_back({CostNode::Op::penalty, penalties_.size() - 1, -1, -1});
        return static_cast<int>(nodes_.size()) - 1;
    }

    int add_sum(int left, int right) {
        if (left < 0) return right;
        if (right < 0) return left;
        nodes_.push_back({CostNode::Op::sum, 0, left, right});
        return static_cast<int>(nodes_.size()) - 1;
    }

    void set_root(int r) { root_ = r; }
    int root() const { return root_; }

    std::size_t state_dim() const { return state_dim_; }
    std::size_t n_g() const { return g_labels_.size(); }
    std::size_t n_h() const { return h_labels_.size(); }
    const std::vector<std::string>& ineq_labels() const { return g_labels_; }
    const std::vector<std::string>& eq_labels() const { return h_labels_; }
    const std::vector<BoundTerm>& terms() const { return terms_; }
    const std::vector<PenaltyGroup>& penalties() const { return penalties_; }

    /// dx = f(x, u); components owned by no term stay zero.
    void dynamics(std::span<const double> x, const StageInput& in, double dt, std::span<double> dx) const {
        std::fill(dx.begin(), dx.end(), 0.0);
        for (const auto& b : terms_) {
            const auto own = b.term->own_state.size();
            if (own == 0 || !b.term->dynamics) continue;
            b.term->dynamics(args(b, x, in, dt), dx.subspan(b.state_offset, own));
        }
    }

    double cost(std::span<const double> x, const StageInput& in, double dt) const {
        return root_ < 0 ? 0.0 : eval_node(root_, x, in, dt);
    }

    void ineq(std::span<const double> x, const StageInput& in, double dt, std::span<double> out) const {
        std::size_t pos = 0;
        for (const auto& b : terms_) {
            if (!b.constrains) continue;
            const auto n = b.term->n_g();
            if (n > 0) b.term->ineq(args(b, x, in, dt), out.subspan(pos, n));
            pos += n;
        }
    }

    void eq(std::span<const double> x, const StageInput& in, double dt, std::span<double> out) const {
        std::size_t pos = 0;
        for (const auto& b : terms_) {
            if (!b.constrains) continue;
            const auto n = b.term->n_h();
            if (n > 0) b.term->eq(args(b, x, in, dt), out.subspan(pos, n));
            pos += n;
        }
    }

    /// rho_g * sum max(0, g)^2 + rho_h * ||h||^2 of one penalty group at one stage.
    double penalty(const PenaltyGroup& g, std::span<const double> x, const StageInput& in, double dt) const {
        if (in.k > g.last_stage) return 0.0;
        thread_local std::vector<double> buf;
        double hinge = 0.0, eqsq = 0.0;
        for (const auto& b : g.terms) {
            const auto ng = b.term->n_g();
            if (ng > 0) {
                buf.assign(ng, 0.0);
                b.term->ineq(args(b, x, in, dt), buf);
                for (double v : buf) {
                    const double m = std::max(0.0, v);
                    hinge += m * m;
                }
            }
            const auto nh = b.term->n_h();
            if (nh > 0) {
                buf.assign(nh, 0.0);
                b.term->eq(args(b, x, in, dt), buf);
                for (double v : buf) eqsq += v * v;
            }
        }
        return g.rho_g * hinge + g.rho_h * eqsq;
    }

    /// Rebuilds constraint labels after terms were added or flags changed.
    void refresh_labels() {
        g_labels_.clear();
        h_labels_.clear();
        for (const auto& b : terms_) {
            if (!b.constrains) continue;
            for (const auto& l : b.term->ineq_labels) g_labels_.push_back(b.term->name + "." + l);
            for (const auto& l : b.term->eq_labels) h_labels_.push_back(b.term->name + "." + l);
        }
    }

private:
    static StageArgs args(const BoundTerm& b, std::span<const double> x, const StageInput& in, double dt) {
        return StageArgs{LocalState(x, b.slots), in.u, in.u_prev, in.k, in.t, dt};
    }

    void add_term(BoundTerm b, bool constrains) {
        b.constrains = constrains;
        terms_.push_back(std::move(b));
        refresh_labels();
    }

    // Leaves are visited in the same order as MpcPrimitive::terms().
    int add_tree(const MpcPrimitive::Node& n, std::size_t& next_term) {
        if (n.term) {
            const std::size_t idx = next_term++;
            if (!n.term->cost) return -1;
            nodes_.push_back({CostNode::Op::term, idx, -1, -1});
            return static_cast<int>(nodes_.size()) - 1;
        }
        const int l = add_tree(*n.left, next_term);
        const int r = add_tree(*n.right, next_term);
        // Zero-cost leaves still take part in the sum so that J(P1 (+) P2) == J(P1) + J(P2).
        return add_sum_keep(l, r);
    }

    int add_sum_keep(int l, int r) {
        if (l < 0 && r < 0) return -1;
        nodes_.push_back({CostNode::Op::sum, 0, l, r});
        return static_cast<int>(nodes_.size()) - 1;
    }

    double eval_node(int i, std::span<const double> x, const StageInput& in, double dt) const {
        const auto& n = nodes_[static_cast<std::size_t>(i)];
        switch (n.op) {
            case CostNode::Op::term: {
                const auto& b = terms_[n.index];
                return b.term->cost(args(b, x, in, dt));
            }
            case CostNode::Op::sum: {
                const double l = n.left < 0 ? 0.0 : eval_node(n.left, x, in, dt);
                const double r = n.right < 0 ? 0.0 : eval_node(n.right, x, in, dt);
                return l + r;
            }
            case CostNode::Op::penalty: return penalty(penalties_[n.index], x, in, dt);
        }
        return 0.0;
    }

    std::vector<BoundTerm> terms_;
    std::vector<PenaltyGroup> penalties_;
    std::vector<CostNode> nodes_;
    int root_{-1};
    std::size_t state_dim_{0};
    std::vector<std::string> g_labels_, h_labels_;
};

/// Fully assembled optimal control problem O = (U, X, f, J, g, h) with horizon N and step dt.
class Ocp {
public:
    Ocp(InputBox input_space, StateSchema schema, StageProgram program, int horizon, double dt,
        std::vector<std::string> provenance)
        : input_space_(input_space), schema_(std::move(schema)),
          program_(std::make_shared<const StageProgram>(std::move(program))), horizon_(horizon), dt_(dt),
          provenance_(std::move(provenance)) {
        if (horizon_ < 1) throw InvalidParams("horizon must be >= 1");
        if (!(dt_ > 0.0)) throw InvalidParams("dt must be > 0");
        if (provenance_.empty()) throw InvalidParams("provenance must not be empty");
        if (program_->state_dim() != schema_.size()) throw SchemaMismatch("program/schema dimension mismatch");
    }

    const InputBox& input_space() const { return input_space_; }
    const StateSchema& schema() const { return schema_; }
    const StageProgram& program() const { return *program_; }
    int horizon() const { return horizon_; }
    double dt() const { return dt_; }
    const std::vector<std::string>& provenance() const { return provenance_; }
    std::size_t state_dim() const { return schema_.size(); }
    std::size_t n_g() const { return program_->n_g(); }
    std::size_t n_h() const { return program_->n_h(); }

    /// x_next = x + f(x, u) * dt
    void step(std::span<const double> x, const StageInput& in, std::span<double> dx, std::span<double> next) const {
        program_->dynamics(x, in, dt_, dx);
        for (std::size_t i = 0; i < x.size(); ++i) next[i] = x[i] + dx[i] * dt_;
    }
    double stage_cost(std::span<const double> x, const StageInput& in) const { return program_->cost(x, in, dt_); }
    void ineq(std::span<const double> x, const StageInput& in, std::span<double> out) const {
        program_->ineq(x, in, dt_, out);
    }
    void eq(std::span<const double> x, const StageInput& in, std::span<double> out) const {
        program_->eq(x, in, dt_, out);
    }

    /// Stage-k input bundle for an input sequence; stage N holds u(N-1).
    StageInput stage_input(std::span<const ControlInput> inputs, int k, const RolloutContext& ctx) const {
        const auto n = static_cast<int>(inputs.size());
        StageInput in;
        in.k = k;
        in.t = ctx.time + k * dt_;
        in.u = inputs[static_cast<std::size_t>(std::min(k, n - 1))];
        in.u_prev = k == 0 ? ctx.previous_input : inputs[static_cast<std::size_t>(std::min(k - 1, n - 1))];
        return in;
    }

private:
    InputBox input_space_;
    StateSchema schema_;
    std::shared_ptr<const StageProgram> program_;
    int horizon_;
    double dt_;
    std::vector<std::string> provenance_;
};

/// O = (U, ((P1 (+) P2) (+) ...) (+) PM), folded left in list order.
inline Ocp build_ocp(const std::vector<MpcPrimitive>& primitives, int horizon, double dt, const InputBox& input_space) {
    if (primitives.empty()) throw MissingDynamics("empty primitive list");
    std::size_t dynamics_count = 0;
    for (const auto& p : primitives)
        for (const auto& t : p.terms())
            if (t->kind == PrimitiveKind::ego_dynamics) ++dynamics_count;
    if (dynamics_count == 0) throw MissingDynamics("no ego-dynamics primitive in the set");
    if (dynamics_count > 1) throw MissingDynamics("more than one ego-dynamics primitive in the set");

    MpcPrimitive folded = primitives.front();
    for (std::size_t i = 1; i < primitives.size(); ++i) folded = compose(folded, primitives[i]);
    if (!(folded.input_space() == input_space))
        throw IncompatibleInputSpace("primitives do not share the OCP input box");

    std::vector<std::string> provenance;
    for (const auto& t : folded.terms()) provenance.push_back(t->name);
    auto program = StageProgram::bind(folded, folded.state());
    return Ocp(input_space, folded.state(), std::move(program), horizon, dt, std::move(provenance));
}

inline void check_schema(const Ocp& ocp, const StateSchema& s, const char* what) {
    if (!(s == ocp.schema())) throw SchemaMismatch(std::string(what) + " does not match the OCP state schema");
}

/// Explicit-Euler forward integration into a preallocated (N+1) x n buffer.
inline void rollout_into(const Ocp& ocp, std::span<const double> x0, std::span<const ControlInput> inputs,
                         const RolloutContext& ctx, std::vector<double>& states, std::vector<double>& dx) {
    const std::size_t n = ocp.state_dim();
    const std::size_t steps = inputs.size();
    states.resize((steps + 1) * n);
    dx.resize(n);
    std::copy(x0.begin(), x0.end(), states.begin());
    for (std::size_t k = 0; k < steps; ++k) {
        std::span<const double> x(states.data() + k * n, n);
        std::span<double> next(states.data() + (k + 1) * n, n);
        ocp.step(x, ocp.stage_input(inputs, static_cast<int>(k), ctx), dx, next);
    }
}

inline Trajectory rollout(const Ocp& ocp, const StateVector& x0, const InputSequence& inputs,
                          const RolloutContext& ctx = {}) {
    check_schema(ocp, x0.schema, "initial state");
    if (inputs.size() != static_cast<std::size_t>(ocp.horizon()))
        throw SchemaMismatch("expected " + std::to_string(ocp.horizon()) + " inputs, got " +
                             std::to_string(inputs.size()));
    std::vector<double> flat, dx;
    rollout_into(ocp, x0.values, inputs, ctx, flat, dx);
    Trajectory traj;
    traj.schema = ocp.schema();
    traj.inputs = inputs;
    const std::size_t n = ocp.state_dim();
    for (std::size_t k = 0; k <= inputs.size(); ++k)
        traj.states.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(k * n),
                                 flat.begin() + static_cast<std::ptrdiff_t>((k + 1) * n));
    return traj;
}

struct StageConstraintValues {
    std::vector<double> g;
    std::vector<double> h;
};

/// Raw g_k and h_k for k = 0..N along a trajectory.
inline std::vector<StageConstraintValues> eval_constraints(const Ocp& ocp, const Trajectory& traj,
                                                           const RolloutContext& ctx = {}) {
    check_schema(ocp, traj.schema, "trajectory");
    const auto N = static_cast<std::size_t>(ocp.horizon());
    if (traj.inputs.size() != N || traj.states.size() != N + 1)
        throw SchemaMismatch("trajectory length does not match the OCP horizon");
    std::vector<StageConstraintValues> out(N + 1);
    for (std::size_t k = 0; k <= N; ++k) {
        if (traj.states[k].size() != ocp.state_dim()) throw SchemaMismatch("state dimension mismatch");
        auto in = ocp.stage_input(traj.inputs, static_cast<int>(k), ctx);
        out[k].g.assign(ocp.n_g(), 0.0);
        out[k].h.assign(ocp.n_h(), 0.0);
        ocp.ineq(traj.states[k], in, out[k].g);
        ocp.eq(traj.states[k], in, out[k].h);
    }
    return out;
}

/// Stage cost J_k of a primitive bound against an explicit state (used for primitive-level evaluation).
inline double primitive_cost(const MpcPrimitive& p, const StateVector& x, const StageInput& in, double dt) {
    return StageProgram::bind(p, x.schema).cost(x.values, in, dt);
}

}  // namespace mpcb

#pragma once

#include <cassert>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mpcb/core/types.hpp"

namespace mpcb {

enum class PrimitiveKind { ego_dynamics, lateral_task, longitudinal_task, safety };

inline const char* to_string(PrimitiveKind k) {
    switch (k) {
        case PrimitiveKind::ego_dynamics: return "ego-dynamics";
        case PrimitiveKind::lateral_task: return "lateral-task";
        case PrimitiveKind::longitudinal_task: return "longitudinal-task";
        case PrimitiveKind::safety: return "safety";
    }
    return "?";
}

/// Read-only view of the components a term declared, in declaration order
/// (own state first, then external reads). Indices are resolved once at bind time.
class LocalState {
public:
    LocalState(std::span<const double> x, std::span<const std::size_t> slots) : x_(x), slots_(slots) {}

    double operator[](std::size_t i) const {
        assert(i < slots_.size() && slots_[i] < x_.size());
        return x_[slots_[i]];
    }
    std::size_t size() const { return slots_.size(); }

private:
    std::span<const double> x_;
    std::span<const std::size_t> slots_;
};

/// Everything a stage function may look at.
struct StageArgs {
    LocalState x;
    ControlInput u;
    ControlInput u_prev;  ///< input of stage k-1 (previously applied input at k = 0)
    int k;
    double t;   ///< absolute time of stage k
    double dt;  ///< prediction interval
};

using DynamicsFn = std::function<void(const StageArgs&, std::span<double>)>;
using CostFn = std::function<double(const StageArgs&)>;
using ConstraintFn = std::function<void(const StageArgs&, std::span<double>)>;

/// Atomic primitive: one row of the primitive pool.
struct PrimitiveTerm {
    std::string name;
    PrimitiveKind kind{PrimitiveKind::safety};
    StateSchema own_state;            ///< X of this primitive (possibly empty)
    std::vector<std::string> reads;   ///< components owned by other primitives
    DynamicsFn dynamics;              ///< writes d(own_state)/dt; unused when own_state is empty
    CostFn cost;                      ///< stage cost J_k; empty means J = 0
    std::size_t cost_terms{0};
    ConstraintFn ineq;                ///< g_k, writes ineq_labels.size() values
    std::vector<std::string> ineq_labels;
    ConstraintFn eq;                  ///< h_k, writes eq_labels.size() values
    std::vector<std::string> eq_labels;
    std::vector<double> initial_state;  ///< default own-state values; zeros when empty

    std::size_t n_g() const { return ineq_labels.size(); }
    std::size_t n_h() const { return eq_labels.size(); }

    /// Slot layout seen through LocalState.
    std::vector<std::string> slot_names() const {
        auto out = own_state.names();
        out.insert(out.end(), reads.begin(), reads.end());
        return out;
    }
};

/// P = (X, f, J, g, h) over the shared input space U. Immutable; composites share subtrees.
class MpcPrimitive {
public:
    struct Node {
        std::shared_ptr<const PrimitiveTerm> term;  ///< set for leaves
        std::shared_ptr<const Node> left, right;    ///< set for composites
    };

    MpcPrimitive(PrimitiveTerm term, InputBox input_space)
        : input_space_(input_space), kind_(term.kind), name_(term.name), state_(term.own_state),
          n_g_(term.n_g()), n_h_(term.n_h()), cost_terms_(term.cost_terms) {
        auto leaf = std::make_shared<Node>();
        leaf->term = std::make_shared<const PrimitiveTerm>(std::move(term));
        terms_.push_back(leaf->term);
        root_ = std::move(leaf);
    }

    const std::string& name() const { return name_; }
    PrimitiveKind kind() const { return kind_; }
    const InputBox& input_space() const { return input_space_; }
    const StateSchema& state() const { return state_; }
    std::size_t n() const { return state_.size(); }
    std::size_t n_g() const { return n_g_; }
    std::size_t n_h() const { return n_h_; }
    std::size_t cost_term_count() const { return cost_terms_; }
    const Node& root() const { return *root_; }
    std::shared_ptr<const Node> root_ptr() const { return root_; }

    /// Leaf terms in composition order.
    const std::vector<std::shared_ptr<const PrimitiveTerm>>& terms() const { return terms_; }

    /// Concatenated default own-state values of all terms.
    StateVector default_state() const {
        std::vector<double> v;
        for (const auto& t : terms_) {
            if (t->initial_state.size() == t->own_state.size())
                v.insert(v.end(), t->initial_state.begin(), t->initial_state.end());
            else
                v.insert(v.end(), t->own_state.size(), 0.0);
        }
        return {state_, std::move(v)};
    }

    /// Names read by some term but not provided by this primitive's own state.
    std::vector<std::string> unresolved_reads() const {
        std::vector<std::string> out;
        for (const auto& t : terms_)
            for (const auto& r : t->reads)
                if (!state_.contains(r) && std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
        return out;
    }

    friend MpcPrimitive compose(const MpcPrimitive& p1, const MpcPrimitive& p2);

private:
    MpcPrimitive() = default;

    InputBox input_space_;
    PrimitiveKind kind_{PrimitiveKind::safety};
    std::string name_;
    StateSchema state_;
    std::size_t n_g_{0}, n_h_{0}, cost_terms_{0};
    std::shared_ptr<const Node> root_;
    std::vector<std::shared_ptr<const PrimitiveTerm>> terms_;
};

/// P1 (+) P2: product state space and dynamics, summed costs, concatenated g and h.
inline MpcPrimitive compose(const MpcPrimitive& p1, const MpcPrimitive& p2) {
    if (!(p1.input_space_ == p2.input_space_))
        throw IncompatibleInputSpace(p1.name_ + " and " + p2.name_ + " use different input boxes");
    MpcPrimitive out;
    out.state_ = StateSchema::concat(p1.state_, p2.state_);  // throws DuplicateStateName
    out.input_space_ = p1.input_space_;
    out.kind_ = p1.kind_;
    out.name_ = p1.name_ + "+" + p2.name_;
    out.n_g_ = p1.n_g_ + p2.n_g_;
    out.n_h_ = p1.n_h_ + p2.n_h_;
    out.cost_terms_ = p1.cost_terms_ + p2.cost_terms_;
    auto node = std::make_shared<MpcPrimitive::Node>();
    node->left = p1.root_;
    node->right = p2.root_;
    out.root_ = std::move(node);
    out.terms_ = p1.terms_;
    out.terms_.insert(out.terms_.end(), p2.terms_.begin(), p2.terms_.end());
    return out;
}

/// X = {}, J = 0, no constraints: the two-sided identity of compose.
inline MpcPrimitive empty_primitive(const InputBox& input_space = {}) {
    PrimitiveTerm t;
    t.name = "EMPTY";
    t.kind = PrimitiveKind::safety;
    return MpcPrimitive(std::move(t), input_space);
}

}  // namespace mpcb

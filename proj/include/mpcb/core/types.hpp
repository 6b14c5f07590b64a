#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mpcb/core/error.hpp"

namespace mpcb {

/// u = (a, delta): longitudinal acceleration [m/s^2] and front-tire steering angle [rad].
struct ControlInput {
    double a{0.0};
    double delta{0.0};

    friend bool operator==(const ControlInput&, const ControlInput&) = default;
};

using InputSequence = std::vector<ControlInput>;

/// Box-shaped input space U shared by every primitive of an OCP.
struct InputBox {
    ControlInput lo{-5.0, -0.4};
    ControlInput hi{5.0, 0.4};

    ControlInput clamp(const ControlInput& u) const {
        return {std::clamp(u.a, lo.a, hi.a), std::clamp(u.delta, lo.delta, hi.delta)};
    }
    bool contains(const ControlInput& u) const {
        return u.a >= lo.a && u.a <= hi.a && u.delta >= lo.delta && u.delta <= hi.delta;
    }
    bool valid() const { return lo.a < hi.a && lo.delta < hi.delta; }

    friend bool operator==(const InputBox&, const InputBox&) = default;
};

struct StateComponent {
    std::string name;
    std::string unit;

    friend bool operator==(const StateComponent&, const StateComponent&) = default;
};

/// Ordered, uniquely named list of scalar state components. May be empty.
class StateSchema {
public:
    StateSchema() = default;
    StateSchema(std::initializer_list<StateComponent> components) {
        for (const auto& c : components) push_back(c);
    }

    std::size_t size() const { return components_.size(); }
    bool empty() const { return components_.empty(); }
    const StateComponent& operator[](std::size_t i) const { return components_[i]; }
    auto begin() const { return components_.begin(); }
    auto end() const { return components_.end(); }

    std::optional<std::size_t> index_of(std::string_view name) const {
        for (std::size_t i = 0; i < components_.size(); ++i)
            if (components_[i].name == name) return i;
        return std::nullopt;
    }
    bool contains(std::string_view name) const { return index_of(name).has_value(); }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        out.reserve(components_.size());
        for (const auto& c : components_) out.push_back(c.name);
        return out;
    }

    void push_back(StateComponent c) {
        if (contains(c.name)) throw DuplicateStateName("state component '" + c.name + "'");
        components_.push_back(std::move(c));
    }

    /// Cartesian product X_a x X_b. Names must stay unique.
    static StateSchema concat(const StateSchema& a, const StateSchema& b) {
        StateSchema out = a;
        for (const auto& c : b) out.push_back(c);
        return out;
    }

    /// Same components with every name prefixed; used to keep product spaces unique.
    StateSchema prefixed(std::string_view prefix) const {
        StateSchema out;
        for (const auto& c : components_) out.push_back({std::string(prefix) + c.name, c.unit});
        return out;
    }

    friend bool operator==(const StateSchema&, const StateSchema&) = default;

private:
    std::vector<StateComponent> components_;
};

/// Named state values; values[i] belongs to schema[i].
struct StateVector {
    StateSchema schema;
    std::vector<double> values;

    StateVector() = default;
    StateVector(StateSchema s, std::vector<double> v) : schema(std::move(s)), values(std::move(v)) {
        if (schema.size() != values.size())
            throw SchemaMismatch("state has " + std::to_string(values.size()) + " values for " +
                                 std::to_string(schema.size()) + " components");
    }

    double at(std::string_view name) const {
        auto i = schema.index_of(name);
        if (!i) throw SchemaMismatch("no component '" + std::string(name) + "'");
        return values[*i];
    }

    friend bool operator==(const StateVector&, const StateVector&) = default;
};

/// Predicted states x(0..N|t) and inputs u(0..N-1|t).
struct Trajectory {
    StateSchema schema;
    std::vector<std::vector<double>> states;
    InputSequence inputs;

    std::size_t horizon() const { return inputs.size(); }
    StateVector state(std::size_t k) const { return {schema, states.at(k)}; }

    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Per-solve context shared by rollout, constraint evaluation and the solver.
struct RolloutContext {
    double time{0.0};             ///< absolute time of stage 0 [s]
    ControlInput previous_input{};  ///< u(-1): the input applied in the previous control step
};

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

/// Resizes a warm start to the horizon: truncates, or pads with zero input.
inline InputSequence fit_warm_start(const InputSequence& warm, int horizon) {
    InputSequence out(warm.begin(), warm.begin() + std::min<std::ptrdiff_t>(warm.size(), horizon));
    out.resize(static_cast<std::size_t>(horizon), ControlInput{});
    return out;
}

inline InputSequence shift_inputs(const InputSequence& u) {
    if (u.empty()) return u;
    InputSequence out(u.begin() + 1, u.end());
    out.push_back(u.back());
    return out;
}

}  // namespace mpcb

#pragma once

#include <cstdint>
#include <string>
#include <deque>
#include <vector>

#include "rgtn/autodiff.hpp"

namespace rgtn {

/// Adam moment accumulators for one parameter.
struct AdamState {
    Tensor first_moment;
    Tensor second_moment;
    std::uint64_t steps = 0;
};

struct Parameter {
    std::string name;
    ad::Var var;
    AdamState state;
};

/// Named trainable tensors in insertion order.
class ParamStore {
public:
    /// Registers a new leaf parameter. Throws on duplicate names. The returned
    /// reference stays valid across later additions.
    ad::Var& add(const std::string& name, Tensor init);

    bool contains(const std::string& name) const;
    ad::Var& get(const std::string& name);
    const ad::Var& get(const std::string& name) const;
    const Tensor& value(const std::string& name) const { return get(name).value(); }

    std::deque<Parameter>& entries() { return entries_; }
    const std::deque<Parameter>& entries() const { return entries_; }

    /// Total trainable scalars.
    Index scalar_count() const;
    void zero_grad();

private:
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;

    std::deque<Parameter> entries_;
};

}  // namespace rgtn

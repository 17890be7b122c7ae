#include "rgtn/param_store.hpp"

#include <stdexcept>

namespace rgtn {

ad::Var& ParamStore::add(const std::string& name, Tensor init) {
    if (find(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
    const Shape shape = init.shape();
    entries_.push_back(Parameter{name, ad::parameter(std::move(init)),
                                 AdamState{Tensor(shape), Tensor(shape), 0}});
    return entries_.back().var;
}

Parameter* ParamStore::find(const std::string& name) {
    for (auto& p : entries_)
        if (p.name == name) return &p;
    return nullptr;
}

const Parameter* ParamStore::find(const std::string& name) const {
    for (const auto& p : entries_)
        if (p.name == name) return &p;
    return nullptr;
}

bool ParamStore::contains(const std::string& name) const { return find(name) != nullptr; }

ad::Var& ParamStore::get(const std::string& name) {
    if (auto* p = find(name)) return p->var;
    throw std::out_of_range("no parameter named '" + name + "'");
}

const ad::Var& ParamStore::get(const std::string& name) const {
    if (const auto* p = find(name)) return p->var;
    throw std::out_of_range("no parameter named '" + name + "'");
}

Index ParamStore::scalar_count() const {
    Index total = 0;
    for (const auto& p : entries_) total += p.var.value().size();
    return total;
}

void ParamStore::zero_grad() {
    for (auto& p : entries_) p.var.zero_grad();
}

}  // namespace rgtn

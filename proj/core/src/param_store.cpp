#include "l2ac/param_store.hpp"

#include <cmath>

namespace l2ac {

Tensor& ParamStore::add(const std::string& name, Tensor t) {
    if (params_.count(name) != 0) {
        throw Error("parameter '" + name + "' already registered");
    }
    order_.push_back(name);
    auto [it, inserted] = params_.emplace(name, std::move(t));
    (void)inserted;
    return it->second;
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
    return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error("unknown parameter '" + name + "'");
    return it->second;
}

void ParamStore::zero_grads() {
    for (const auto& name : order_) {
        Tensor& t = params_.at(name);
        t.ensure_grad();
        t.zero_grad();
    }
}

int64_t ParamStore::scalar_count() const {
    int64_t n = 0;
    for (const auto& [name, t] : params_) n += t.size();
    return n;
}

void adam_step(ParamStore& store, double lr, double beta1, double beta2, double eps) {
    for (const auto& name : store.order_) {
        const Tensor& t = store.params_.at(name);
        if (!t.has_grad()) {
            throw MissingGradientError("adam_step: parameter '" + name + "' has no gradient");
        }
    }

    store.step_ += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(store.step_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(store.step_));

    for (const auto& name : store.order_) {
        Tensor& t = store.params_.at(name);
        auto& state = store.adam_[name];
        if (state.m.size() != t.data.size()) {
            state.m.assign(t.data.size(), 0.0);
            state.v.assign(t.data.size(), 0.0);
        }
        for (size_t i = 0; i < t.data.size(); ++i) {
            const double g = t.grad[i];
            state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
            state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
            const double m_hat = state.m[i] / bc1;
            const double v_hat = state.v[i] / bc2;
            t.data[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
        t.zero_grad();
    }
}

} // namespace l2ac

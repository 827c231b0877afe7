#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "l2ac/tensor.hpp"

namespace l2ac {

// Named trainable tensors plus Adam state. Iteration follows insertion order
// so that updates and serialization are reproducible.
class ParamStore {
public:
    Tensor& add(const std::string& name, Tensor t);

    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

    const std::vector<std::string>& names() const { return order_; }

    int64_t step() const { return step_; }

    void zero_grads();

    // Total number of scalar parameters.
    int64_t scalar_count() const;

    friend void adam_step(ParamStore& store, double lr, double beta1, double beta2, double eps);

private:
    struct AdamState {
        Vec m, v;
    };

    std::vector<std::string> order_;
    std::map<std::string, Tensor> params_;
    std::map<std::string, AdamState> adam_;
    int64_t step_ = 0;
};

// Bias-corrected Adam update, applied in place. Every parameter must have a
// populated gradient; gradients are zeroed afterwards.
void adam_step(ParamStore& store, double lr = 1e-3, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

} // namespace l2ac

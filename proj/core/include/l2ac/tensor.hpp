#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "l2ac/errors.hpp"

namespace l2ac {

using Vec = std::vector<double>;

// Dense row-major tensor (rank 1 or 2 in practice). `grad` stays empty until
// ensure_grad() and then always mirrors the data shape.
struct Tensor {
    std::vector<int> shape;
    Vec data;
    Vec grad;

    Tensor() = default;

    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(static_cast<size_t>(element_count(shape)), 0.0);
    }

    static Tensor matrix(int rows, int cols) { return Tensor({rows, cols}); }
    static Tensor vector(int n) { return Tensor({n}); }

    static int64_t element_count(const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) {
            if (d < 0) throw ShapeError("tensor dimension must be non-negative");
            n *= d;
        }
        return n;
    }

    int64_t size() const { return static_cast<int64_t>(data.size()); }

    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

    double& operator[](size_t i) { return data[i]; }
    double operator[](size_t i) const { return data[i]; }

    bool has_grad() const { return !grad.empty(); }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }

    void zero_grad() {
        if (!grad.empty()) grad.assign(grad.size(), 0.0);
    }
};

} // namespace l2ac

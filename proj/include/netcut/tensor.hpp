#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "netcut/error.hpp"

namespace netcut {

// Dense row-major tensor of 64-bit floats. The shape invariant
// product(shape) == values.size() is kept by every constructor.
class Tensor {
public:
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
        values.assign(count(shape), 0.0);
    }

    Tensor(std::vector<std::size_t> s, std::vector<double> v)
        : shape(std::move(s)), values(std::move(v)) {
        if (count(shape) != values.size())
            throw DimensionError("tensor shape " + shape_str() + " does not match " +
                                 std::to_string(values.size()) + " values");
    }

    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }

    static Tensor full(std::vector<std::size_t> s, double v) {
        Tensor t(std::move(s));
        for (auto& x : t.values) x = v;
        return t;
    }

    static Tensor row(std::initializer_list<double> v) {
        return Tensor({1, v.size()}, std::vector<double>(v));
    }

    static Tensor vec(std::vector<double> v) {
        std::size_t n = v.size();
        return Tensor({n}, std::move(v));
    }

    std::size_t numel() const { return values.size(); }
    std::size_t rank() const { return shape.size(); }

    std::size_t rows() const { return rank() >= 1 ? shape[0] : 0; }
    std::size_t cols() const { return rank() >= 2 ? shape[1] : 1; }

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

    double* data() { return values.data(); }
    const double* data() const { return values.data(); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }

    std::string shape_str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i)
            s += (i ? "x" : "") + std::to_string(shape[i]);
        return s + "]";
    }

    static std::size_t count(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return s.empty() ? 0 : n;
    }
};

}  // namespace netcut

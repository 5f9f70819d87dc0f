#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "qcnn/error.hpp"

namespace qcnn::nn {

// Dense row-major n-d array of 32-bit reals. The shape is immutable after
// construction except through reshape(), which preserves the element count.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(checked_numel(shape_), 0.0f);
    }

    Tensor(std::vector<int> shape, std::vector<float> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != checked_numel(shape_)) {
            throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_string(shape_));
        }
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<int> shape, float value) {
        Tensor t(std::move(shape));
        for (auto& x : t.data_) x = value;
        return t;
    }

    const std::vector<int>& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& vec() { return data_; }
    const std::vector<float>& vec() const { return data_; }

    float& operator[](std::size_t i) { return data_[i]; }
    float operator[](std::size_t i) const { return data_[i]; }

    // CxHxW convenience accessors.
    float& at3(int c, int h, int w, int H, int W) {
        return data_[(static_cast<std::size_t>(c) * H + h) * W + w];
    }
    float at3(int c, int h, int w, int H, int W) const {
        return data_[(static_cast<std::size_t>(c) * H + h) * W + w];
    }

    int dim(std::size_t i) const { return shape_.at(i); }
    std::size_t rank() const { return shape_.size(); }

    void reshape(std::vector<int> shape) {
        if (checked_numel(shape) != data_.size()) {
            throw ShapeError("reshape to " + shape_string(shape) + " would change numel " +
                             std::to_string(data_.size()));
        }
        shape_ = std::move(shape);
    }

    void fill(float v) {
        for (auto& x : data_) x = v;
    }

    bool all_finite() const {
        for (float x : data_) {
            if (!std::isfinite(x)) return false;
        }
        return true;
    }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    static std::string shape_string(const std::vector<int>& shape) {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }

    std::string shape_string() const { return shape_string(shape_); }

private:
    static std::size_t checked_numel(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) {
            if (d <= 0) throw ShapeError("non-positive dimension in shape " + shape_string(shape));
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    std::vector<int> shape_;
    std::vector<float> data_;
};

// A named trainable tensor plus its gradient accumulator.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {
        grad = Tensor::zeros(value.shape());
    }

    void zero_grad() { grad.fill(0.0f); }
};

} // namespace qcnn::nn

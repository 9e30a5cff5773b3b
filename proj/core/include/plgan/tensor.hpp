#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "plgan/errors.hpp"

namespace plgan {

/// Dense row-major float32 array with up to 4 dimensions.
///
/// Conventions used throughout the library:
///   {H, W}          single-channel map (mask, probability map, score map)
///   {C, H, W}       image
///   {N, C, H, W}    batch
/// Value semantics: copying a Tensor copies its storage.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
        data_.assign(static_cast<std::size_t>(numel_of(shape_)), 0.0f);
    }

    Tensor(std::vector<int> shape, float fill_value) : shape_(std::move(shape)) {
        data_.assign(static_cast<std::size_t>(numel_of(shape_)), fill_value);
    }

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float v) { return Tensor(std::move(shape), v); }

    static Tensor from_values(std::vector<int> shape, std::initializer_list<float> values) {
        Tensor t(std::move(shape));
        if (static_cast<std::int64_t>(values.size()) != t.numel())
            throw ShapeError("from_values: element count does not match shape");
        std::copy(values.begin(), values.end(), t.data_.begin());
        return t;
    }

    int ndim() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<std::size_t>(i)]; }
    const std::vector<int>& shape() const { return shape_; }
    std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    float operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    float& at(int i, int j) { return data_[idx2(i, j)]; }
    float at(int i, int j) const { return data_[idx2(i, j)]; }
    float& at(int c, int i, int j) { return data_[idx3(c, i, j)]; }
    float at(int c, int i, int j) const { return data_[idx3(c, i, j)]; }
    float& at(int n, int c, int i, int j) { return data_[idx4(n, c, i, j)]; }
    float at(int n, int c, int i, int j) const { return data_[idx4(n, c, i, j)]; }

    /// Trailing spatial dims; valid for any ndim >= 2.
    int rows() const { return shape_[shape_.size() - 2]; }
    int cols() const { return shape_[shape_.size() - 1]; }
    /// Product of all dims before the last two (1 for plain 2D maps).
    std::int64_t planes() const {
        std::int64_t p = 1;
        for (std::size_t i = 0; i + 2 < shape_.size(); ++i) p *= shape_[i];
        return p;
    }

    void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

    /// Reinterpret the buffer under a new shape with the same element count.
    Tensor reshaped(std::vector<int> shape) const {
        if (numel_of(shape) != numel())
            throw ShapeError("reshaped: element count mismatch");
        Tensor t = *this;
        t.shape_ = std::move(shape);
        return t;
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    static std::int64_t numel_of(const std::vector<int>& shape) {
        std::int64_t n = 1;
        for (int d : shape) {
            if (d < 0) throw ShapeError("negative dimension");
            n *= d;
        }
        return n;
    }

    static std::string shape_str(const std::vector<int>& shape) {
        std::string s = "{";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape[i]);
        }
        return s + "}";
    }
    std::string shape_str() const { return shape_str(shape_); }

private:
    std::size_t idx2(int i, int j) const {
        return static_cast<std::size_t>(i) * cols() + j;
    }
    std::size_t idx3(int c, int i, int j) const {
        return (static_cast<std::size_t>(c) * rows() + i) * cols() + j;
    }
    std::size_t idx4(int n, int c, int i, int j) const {
        const std::size_t C = shape_[1];
        return ((static_cast<std::size_t>(n) * C + c) * rows() + i) * cols() + j;
    }

    std::vector<int> shape_;
    std::vector<float> data_;
};

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

} // namespace plgan

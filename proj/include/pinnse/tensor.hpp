#pragma once

#include <cmath>
#include <initializer_list>
#include <vector>

#include "pinnse/common.hpp"

namespace pinnse {

/// Dense row-major array of 64-bit floats. The universal value type for
/// signals, features, weights, and parameters. Immutable by convention once
/// handed to a tape or a bundle.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}
    Tensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        PINNSE_CHECK(int64_t(data_.size()) == shape_numel(shape_),
                     "tensor data size does not match shape " + shape_str(shape_));
    }
    /// 1-D tensor from literal values.
    static Tensor values(std::initializer_list<double> vals) {
        return Tensor(Shape{int64_t(vals.size())}, std::vector<double>(vals));
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
    static Tensor full(Shape shape, double v) {
        Tensor t(std::move(shape));
        for (double& x : t.data_) x = v;
        return t;
    }
    static Tensor scalar(double v) { return Tensor(Shape{1}, {v}); }

    const Shape& shape() const { return shape_; }
    int64_t numel() const { return int64_t(data_.size()); }
    int64_t dim(size_t i) const { return shape_[i]; }
    size_t rank() const { return shape_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](int64_t i) { return data_[size_t(i)]; }
    double operator[](int64_t i) const { return data_[size_t(i)]; }

    /// Element access for 2-D / 3-D tensors.
    double& at2(int64_t i, int64_t j) { return data_[size_t(i * shape_[1] + j)]; }
    double at2(int64_t i, int64_t j) const { return data_[size_t(i * shape_[1] + j)]; }
    double& at3(int64_t i, int64_t j, int64_t k) {
        return data_[size_t((i * shape_[1] + j) * shape_[2] + k)];
    }
    double at3(int64_t i, int64_t j, int64_t k) const {
        return data_[size_t((i * shape_[1] + j) * shape_[2] + k)];
    }

    /// Extent of the last axis (column count for the flattened 2-D view).
    int64_t last_dim() const { return shape_.empty() ? 1 : shape_.back(); }
    /// Rows of the flattened 2-D view.
    int64_t rows_2d() const { return last_dim() == 0 ? 0 : numel() / last_dim(); }

    Tensor reshaped(Shape s) const {
        PINNSE_CHECK(shape_numel(s) == numel(), "reshape changes element count");
        return Tensor(std::move(s), data_);
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

  private:
    Shape shape_;
    std::vector<double> data_;
};

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    PINNSE_CHECK(a.numel() == b.numel(), "max_abs_diff: size mismatch");
    double m = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace pinnse

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "recigraph/errors.hpp"

namespace recigraph {

// Dense row-major tensor of 64-bit floats, rank 0 (scalar), 1 or 2.
// Immutable by convention once handed to a Tape; construction rejects
// non-finite entries and shape/data length mismatches.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor vec(std::vector<double> v, bool requires_grad = false);
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                         bool requires_grad = false);
    static Tensor identity(std::size_t n);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t size() const { return data_.size(); }
    bool requires_grad() const { return requires_grad_; }
    void set_requires_grad(bool b) { requires_grad_ = b; }

    // Rank-2 accessors.
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    std::string shape_str() const;

    // Throws NumericError if any entry is NaN or infinite.
    void check_finite(const char* context) const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
    bool requires_grad_ = false;
};

}  // namespace recigraph

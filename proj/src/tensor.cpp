#include "recigraph/tensor.hpp"

#include <cmath>
#include <sstream>

namespace recigraph {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (const std::size_t d : shape) n *= d;
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad)
    : shape_(std::move(shape)), data_(std::move(data)), requires_grad_(requires_grad) {
    if (shape_.size() > 2) {
        throw DimensionError("tensor rank " + std::to_string(shape_.size()) + " unsupported (max 2)");
    }
    if (shape_product(shape_) != data_.size()) {
        throw DimensionError("tensor shape " + shape_str() + " does not match data length " +
                             std::to_string(data_.size()));
    }
    check_finite("tensor construction");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    std::vector<double> data(shape_product(shape), 0.0);
    return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor({}, {v}, requires_grad);
}

Tensor Tensor::vec(std::vector<double> v, bool requires_grad) {
    const std::size_t n = v.size();
    return Tensor({n}, std::move(v), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> data,
                      bool requires_grad) {
    return Tensor({rows, cols}, std::move(data), requires_grad);
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows() on tensor of shape " + shape_str());
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols() on tensor of shape " + shape_str());
    return shape_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
    return data_[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
}

std::string Tensor::shape_str() const {
    if (shape_.empty()) return "scalar";
    std::ostringstream os;
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << "x";
        os << shape_[i];
    }
    return os.str();
}

void Tensor::check_finite(const char* context) const {
    for (const double v : data_) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(context) + ": non-finite entry in tensor of shape " +
                               shape_str());
        }
    }
}

}  // namespace recigraph

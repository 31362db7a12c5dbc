#include "ctts/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ctts {

namespace {

std::size_t shape_product(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("tensor shape entries must be positive");
        n *= static_cast<std::size_t>(d);
    }
    if (shape.empty()) throw std::invalid_argument("tensor shape must not be empty");
    return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, bool requires_grad) : shape_(std::move(shape)) {
    const std::size_t n = shape_product(shape_);
    values_ = std::make_shared<std::vector<double>>(n, 0.0);
    requires_grad_ = requires_grad;
    if (requires_grad_) grad_ = std::make_shared<std::vector<double>>(n, 0.0);
}

Tensor Tensor::from_values(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    Tensor t;
    t.shape_ = std::move(shape);
    const std::size_t n = shape_product(t.shape_);
    if (n != values.size()) {
        std::ostringstream os;
        os << "tensor value count " << values.size() << " does not match shape " << n;
        throw std::invalid_argument(os.str());
    }
    t.values_ = std::make_shared<std::vector<double>>(std::move(values));
    t.requires_grad_ = requires_grad;
    if (requires_grad) t.grad_ = std::make_shared<std::vector<double>>(n, 0.0);
    return t;
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return from_values({1}, {v}, requires_grad);
}

void Tensor::zero_grad() {
    if (grad_) std::fill(grad_->begin(), grad_->end(), 0.0);
}

Tensor Tensor::clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.values_ = std::make_shared<std::vector<double>>(*values_);
    t.requires_grad_ = requires_grad_;
    if (requires_grad_) t.grad_ = std::make_shared<std::vector<double>>(values_->size(), 0.0);
    return t;
}

Tensor Tensor::fork_grad() const {
    Tensor t;
    t.shape_ = shape_;
    t.values_ = values_;
    t.requires_grad_ = requires_grad_;
    if (requires_grad_) t.grad_ = std::make_shared<std::vector<double>>(values_->size(), 0.0);
    return t;
}

bool Tensor::all_finite() const {
    for (double v : *values_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ",";
        os << shape_[i];
    }
    os << ")";
    return os.str();
}

}  // namespace ctts

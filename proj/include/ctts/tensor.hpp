#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace ctts {

// Dense row-major array of doubles with an optional gradient buffer.
// Values and grad live in shared storage: copies of a Tensor alias the
// same buffers, which is what lets tape closures see later gradient
// accumulation. A tensor's values are not mutated by the ops layer after
// construction; only grad accumulates during a backward pass.
class Tensor {
public:
    Tensor() = default;

    // zero-initialized
    explicit Tensor(std::vector<int> shape, bool requires_grad = false);

    static Tensor from_values(std::vector<int> shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    const std::vector<int>& shape() const { return shape_; }
    int dim(std::size_t i) const { return shape_.at(i); }
    std::size_t ndim() const { return shape_.size(); }
    std::size_t size() const { return values_ ? values_->size() : 0; }
    bool requires_grad() const { return requires_grad_; }

    std::vector<double>& values() { return *values_; }
    const std::vector<double>& values() const { return *values_; }

    // only valid when requires_grad() is true
    std::vector<double>& grad() { return *grad_; }
    const std::vector<double>& grad() const { return *grad_; }

    double at(std::size_t i) const { return (*values_)[i]; }
    double& at(std::size_t i) { return (*values_)[i]; }
    // 2-D accessors (row-major)
    double at2(int r, int c) const { return (*values_)[static_cast<std::size_t>(r) * shape_[1] + c]; }
    double& at2(int r, int c) { return (*values_)[static_cast<std::size_t>(r) * shape_[1] + c]; }

    void zero_grad();

    // Deep copy of values (and a fresh zero grad buffer when tracked).
    Tensor clone() const;

    // Shares the value buffer but gets a fresh zero gradient buffer.
    // Used to accumulate per-sample gradients independently so batch
    // reduction order is fixed regardless of thread count.
    Tensor fork_grad() const;

    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::shared_ptr<std::vector<double>> values_;
    std::shared_ptr<std::vector<double>> grad_;
    bool requires_grad_ = false;
};

// Records backward rules in construction order. Operands of any node were
// created before it, so replaying the nodes in reverse is a valid
// topological sweep that touches each node exactly once.
class Tape {
public:
    void record(std::function<void()> backward_rule) { nodes_.push_back(std::move(backward_rule)); }

    // Caller seeds the output gradient first (usually 1.0 on a scalar loss).
    void backward() {
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }

    std::size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    std::vector<std::function<void()>> nodes_;
};

}  // namespace ctts

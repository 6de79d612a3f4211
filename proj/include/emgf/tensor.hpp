#pragma once

// Dense double-precision tensors with a reverse-mode gradient tape.
//
// Every op in this header computes its value eagerly. When a Tape is active on
// the calling thread and at least one input requires a gradient, the op also
// records a backward closure on that tape. Tape::backward replays the closures
// in exact reverse order of execution.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emgf/errors.hpp"

namespace emgf {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
};

class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    /// Row-major literal, e.g. Tensor::matrix({{1, 2}, {3, 4}}).
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                         bool requires_grad = false);
    static Tensor row_vector(std::vector<double> values, bool requires_grad = false);
    static Tensor column_vector(std::vector<double> values, bool requires_grad = false);
    static Tensor identity(std::size_t n);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t size() const { return impl_->data.size(); }
    /// Rank-2 accessors; vectors are stored as 1×n or m×1 matrices.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> data() const { return impl_->data; }
    std::span<double> data() { return impl_->data; }
    std::span<const double> grad() const { return impl_->grad; }
    std::span<double> grad() { return impl_->grad; }

    double at(std::size_t r, std::size_t c) const { return impl_->data[r * cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return impl_->data[r * cols() + c]; }
    double item() const;

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool on);
    void zero_grad();

    /// Deep copy of shape and data; the copy is a fresh leaf.
    Tensor detach() const;

    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
    friend Tensor wrap_impl(std::shared_ptr<TensorImpl> impl);

    std::shared_ptr<TensorImpl> impl_;
};

Tensor wrap_impl(std::shared_ptr<TensorImpl> impl);

/// Ordered record of executed ops. Not shareable across threads: each thread
/// activates its own tape through a Scope.
class Tape {
public:
    struct Entry {
        std::string_view op;
        std::shared_ptr<TensorImpl> output;
        std::function<void(const TensorImpl&)> backward;
    };

    class Scope {
    public:
        explicit Scope(Tape& tape);
        ~Scope();
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

    private:
        Tape* previous_;
    };

    /// Suspends recording on this thread for its lifetime.
    class NoGrad {
    public:
        NoGrad();
        ~NoGrad();
        NoGrad(const NoGrad&) = delete;
        NoGrad& operator=(const NoGrad&) = delete;

    private:
        Tape* previous_;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    void record(std::string_view op, std::shared_ptr<TensorImpl> output,
                std::function<void(const TensorImpl&)> backward);

    /// Seeds d(loss)/d(loss) = 1 and replays entries newest-first. `visit`, if
    /// set, is called with (entry index, op name) in replay order.
    void backward(const Tensor& loss,
                  const std::function<void(std::size_t, std::string_view)>& visit = {});

    void clear() { entries_.clear(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::vector<Entry> entries_;
};

enum class ElementwiseOp { add, sub, mul, relu, scale };
enum class ReduceOp { mean_rows, mean_all, l2norm_rows, sum };

// Shape-checked primitives. All inputs are rank-2.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor relu(const Tensor& a);
/// Dispatcher over the binary/unary pointwise ops. `b` is ignored by relu;
/// for scale, `b` must be a 1×1 constant.
Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b);

/// m×n plus a 1×n row bias broadcast down the rows.
Tensor add_row(const Tensor& a, const Tensor& bias);
/// m×n times a 1×n row gain, column-wise.
Tensor scale_cols(const Tensor& a, const Tensor& gain);
/// m×n times an m×1 column, row-wise.
Tensor scale_rows(const Tensor& a, const Tensor& coef);

Tensor softmax_rows(const Tensor& a);

Tensor mean_rows(const Tensor& a);    // m×n -> m×1
Tensor mean_all(const Tensor& a);     // -> 1×1
Tensor sum(const Tensor& a);          // -> 1×1
Tensor l2norm_rows(const Tensor& a);  // m×n -> m×1, subgradient 0 at the origin
Tensor reduce(ReduceOp op, const Tensor& a);

/// Per-row inner products of two m×n tensors -> m×1.
Tensor row_dot(const Tensor& a, const Tensor& b);
/// 1/x elementwise; entries with |x| < floor map to 0 with zero gradient.
Tensor safe_reciprocal(const Tensor& a, double floor);
/// log(max(x, floor)) elementwise; clamped entries pass no gradient.
Tensor log_clamped(const Tensor& a, double floor);

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);
Tensor concat_rows(const Tensor& a, const Tensor& b);
/// The single entry (r, c) as a 1×1 tensor.
Tensor pick(const Tensor& a, std::size_t r, std::size_t c);

/// Inverted dropout: Bernoulli keep-mask scaled by 1/(1-p) in train mode,
/// identity otherwise.
Tensor dropout(const Tensor& a, double p, std::mt19937_64& rng, bool train);

}  // namespace emgf

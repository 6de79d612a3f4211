#include "emgf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace emgf {

namespace {

thread_local Tape* g_active_tape = nullptr;

std::size_t product(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_rank2(const Tensor& t, std::string_view op) {
    if (!t.defined() || t.rank() != 2)
        throw ShapeError(std::string(op) + ": expected a rank-2 tensor, got " +
                         (t.defined() ? shape_to_string(t.shape()) : std::string("undefined")));
}

[[noreturn]] void mismatch(std::string_view op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                     " vs " + shape_to_string(b.shape()));
}

void require_same(std::string_view op, const Tensor& a, const Tensor& b) {
    require_rank2(a, op);
    require_rank2(b, op);
    if (a.shape() != b.shape()) mismatch(op, a, b);
}

bool any_requires_grad(std::initializer_list<const Tensor*> inputs) {
    if (Tape::active() == nullptr) return false;
    for (const Tensor* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

// Creates the output tensor and, when gradients flow, records `bw` on the tape.
Tensor finish(Shape shape, std::vector<double> data, std::initializer_list<const Tensor*> inputs,
              std::string_view op, std::function<void(const TensorImpl&)> bw) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    if (any_requires_grad(inputs)) {
        impl->requires_grad = true;
        impl->grad.assign(impl->data.size(), 0.0);
        Tape::active()->record(op, impl, std::move(bw));
    }
    return wrap_impl(std::move(impl));
}

// Gradient sink for an input; null when the input does not take gradients.
double* grad_of(const std::shared_ptr<TensorImpl>& impl) {
    if (!impl->requires_grad) return nullptr;
    if (impl->grad.size() != impl->data.size()) impl->grad.assign(impl->data.size(), 0.0);
    return impl->grad.data();
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor wrap_impl(std::shared_ptr<TensorImpl> impl) { return Tensor(std::move(impl)); }

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<TensorImpl>()) {
    if (product(shape) != data.size())
        throw ShapeError("tensor: shape " + shape_to_string(shape) + " does not hold " +
                         std::to_string(data.size()) + " values");
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    set_requires_grad(requires_grad);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    std::vector<double> data(product(shape), value);
    return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({1, 1}, {value}, requires_grad); }

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows, bool requires_grad) {
    const std::size_t m = rows.size();
    const std::size_t n = m ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(m * n);
    for (const auto& r : rows) {
        if (r.size() != n) throw ShapeError("tensor: ragged matrix literal");
        data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor({m, n}, std::move(data), requires_grad);
}

Tensor Tensor::row_vector(std::vector<double> values, bool requires_grad) {
    const std::size_t n = values.size();
    return Tensor({1, n}, std::move(values), requires_grad);
}

Tensor Tensor::column_vector(std::vector<double> values, bool requires_grad) {
    const std::size_t n = values.size();
    return Tensor({n, 1}, std::move(values), requires_grad);
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t = zeros({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw ShapeError("rows(): tensor is " + shape_to_string(shape()));
    return impl_->shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ShapeError("cols(): tensor is " + shape_to_string(shape()));
    return impl_->shape[1];
}

double Tensor::item() const {
    if (size() != 1) throw ShapeError("item(): tensor is " + shape_to_string(shape()));
    return impl_->data[0];
}

void Tensor::set_requires_grad(bool on) {
    impl_->requires_grad = on;
    if (on)
        impl_->grad.assign(impl_->data.size(), 0.0);
    else
        impl_->grad.clear();
}

void Tensor::zero_grad() {
    if (impl_->requires_grad) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->data, false); }

// ---------------------------------------------------------------------------
// Tape

Tape::Scope::Scope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
Tape::Scope::~Scope() { g_active_tape = previous_; }

Tape::NoGrad::NoGrad() : previous_(g_active_tape) { g_active_tape = nullptr; }
Tape::NoGrad::~NoGrad() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::string_view op, std::shared_ptr<TensorImpl> output,
                  std::function<void(const TensorImpl&)> backward) {
    entries_.push_back(Entry{op, std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss,
                    const std::function<void(std::size_t, std::string_view)>& visit) {
    if (loss.size() != 1)
        throw ShapeError("backward: loss must be a scalar, got " + shape_to_string(loss.shape()));
    if (!loss.requires_grad()) return;
    loss.impl()->grad.assign(1, 1.0);
    for (std::size_t i = entries_.size(); i-- > 0;) {
        const Entry& e = entries_[i];
        if (visit) visit(i, e.op);
        e.backward(*e.output);
    }
}

// ---------------------------------------------------------------------------
// Primitives

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank2(a, "matmul");
    require_rank2(b, "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) mismatch("matmul", a, b);
    std::vector<double> out(m * n, 0.0);
    const auto A = a.data();
    const auto B = b.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += av * B[p * n + j];
        }
    auto ai = a.impl(), bi = b.impl();
    return finish({m, n}, std::move(out), {&a, &b}, "matmul", [ai, bi, m, k, n](const TensorImpl& o) {
        const double* g = o.grad.data();
        if (double* ga = grad_of(ai)) {
            // ga += g · bᵀ
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * bi->data[p * n + j];
                    ga[i * k + p] += s;
                }
        }
        if (double* gb = grad_of(bi)) {
            // gb += aᵀ · g
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double av = ai->data[i * k + p];
                    if (av == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
                }
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_rank2(a, "transpose");
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.at(i, j);
    auto ai = a.impl();
    return finish({n, m}, std::move(out), {&a}, "transpose", [ai, m, n](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += o.grad[j * m + i];
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same("add", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    auto ai = a.impl(), bi = b.impl();
    return finish(a.shape(), std::move(out), {&a, &b}, "add", [ai, bi](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
        if (double* gb = grad_of(bi))
            for (std::size_t i = 0; i < o.grad.size(); ++i) gb[i] += o.grad[i];
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same("sub", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    auto ai = a.impl(), bi = b.impl();
    return finish(a.shape(), std::move(out), {&a, &b}, "sub", [ai, bi](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
        if (double* gb = grad_of(bi))
            for (std::size_t i = 0; i < o.grad.size(); ++i) gb[i] -= o.grad[i];
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same("mul", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
    auto ai = a.impl(), bi = b.impl();
    return finish(a.shape(), std::move(out), {&a, &b}, "mul", [ai, bi](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] * bi->data[i];
        if (double* gb = grad_of(bi))
            for (std::size_t i = 0; i < o.grad.size(); ++i) gb[i] += o.grad[i] * ai->data[i];
    });
}

Tensor scale(const Tensor& a, double s) {
    require_rank2(a, "scale");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * s;
    auto ai = a.impl();
    return finish(a.shape(), std::move(out), {&a}, "scale", [ai, s](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] * s;
    });
}

Tensor add_scalar(const Tensor& a, double s) {
    require_rank2(a, "add_scalar");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + s;
    auto ai = a.impl();
    return finish(a.shape(), std::move(out), {&a}, "add_scalar", [ai](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
    });
}

Tensor relu(const Tensor& a) {
    require_rank2(a, "relu");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] > 0.0 ? a.data()[i] : 0.0;
    auto ai = a.impl();
    return finish(a.shape(), std::move(out), {&a}, "relu", [ai](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < o.grad.size(); ++i)
                if (ai->data[i] > 0.0) ga[i] += o.grad[i];
    });
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b) {
    switch (op) {
        case ElementwiseOp::add: return add(a, b);
        case ElementwiseOp::sub: return sub(a, b);
        case ElementwiseOp::mul: return mul(a, b);
        case ElementwiseOp::relu: return relu(a);
        case ElementwiseOp::scale: return scale(a, b.item());
    }
    throw std::logic_error("elementwise: unknown op");
}

Tensor add_row(const Tensor& a, const Tensor& bias) {
    require_rank2(a, "add_row");
    require_rank2(bias, "add_row");
    const std::size_t m = a.rows(), n = a.cols();
    if (bias.rows() != 1 || bias.cols() != n) mismatch("add_row", a, bias);
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a.at(i, j) + bias.data()[j];
    auto ai = a.impl(), bi = bias.impl();
    return finish({m, n}, std::move(out), {&a, &bias}, "add_row", [ai, bi, m, n](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < m * n; ++i) ga[i] += o.grad[i];
        if (double* gb = grad_of(bi))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) gb[j] += o.grad[i * n + j];
    });
}

Tensor scale_cols(const Tensor& a, const Tensor& gain) {
    require_rank2(a, "scale_cols");
    require_rank2(gain, "scale_cols");
    const std::size_t m = a.rows(), n = a.cols();
    if (gain.rows() != 1 || gain.cols() != n) mismatch("scale_cols", a, gain);
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a.at(i, j) * gain.data()[j];
    auto ai = a.impl(), gi = gain.impl();
    return finish({m, n}, std::move(out), {&a, &gain}, "scale_cols", [ai, gi, m, n](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += o.grad[i * n + j] * gi->data[j];
        if (double* gg = grad_of(gi))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) gg[j] += o.grad[i * n + j] * ai->data[i * n + j];
    });
}

Tensor scale_rows(const Tensor& a, const Tensor& coef) {
    require_rank2(a, "scale_rows");
    require_rank2(coef, "scale_rows");
    const std::size_t m = a.rows(), n = a.cols();
    if (coef.rows() != m || coef.cols() != 1) mismatch("scale_rows", a, coef);
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a.at(i, j) * coef.data()[i];
    auto ai = a.impl(), ci = coef.impl();
    return finish({m, n}, std::move(out), {&a, &coef}, "scale_rows", [ai, ci, m, n](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += o.grad[i * n + j] * ci->data[i];
        if (double* gc = grad_of(ci))
            for (std::size_t i = 0; i < m; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) s += o.grad[i * n + j] * ai->data[i * n + j];
                gc[i] += s;
            }
    });
}

Tensor softmax_rows(const Tensor& a) {
    require_rank2(a, "softmax_rows");
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        double mx = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = a.at(i, j);
            if (std::isnan(v)) throw NumericError("softmax_rows: NaN input at row " + std::to_string(i));
            mx = std::max(mx, v);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += (out[i * n + j] = std::exp(a.at(i, j) - mx));
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= z;
    }
    auto ai = a.impl();
    return finish({m, n}, std::move(out), {&a}, "softmax_rows", [ai, m, n](const TensorImpl& o) {
        double* ga = grad_of(ai);
        if (!ga) return;
        // dx_j = y_j (g_j - Σ_k g_k y_k)
        for (std::size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += o.grad[i * n + j] * o.data[i * n + j];
            for (std::size_t j = 0; j < n; ++j)
                ga[i * n + j] += o.data[i * n + j] * (o.grad[i * n + j] - dot);
        }
    });
}

Tensor mean_rows(const Tensor& a) {
    require_rank2(a, "mean_rows");
    const std::size_t m = a.rows(), n = a.cols();
    if (m * n == 0) throw ShapeError("mean_rows: empty tensor " + shape_to_string(a.shape()));
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) out[i] += a.at(i, j);
        out[i] /= static_cast<double>(n);
    }
    auto ai = a.impl();
    return finish({m, 1}, std::move(out), {&a}, "mean_rows", [ai, m, n](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += o.grad[i] / static_cast<double>(n);
    });
}

Tensor sum(const Tensor& a) {
    require_rank2(a, "sum");
    if (a.size() == 0) throw ShapeError("sum: empty tensor " + shape_to_string(a.shape()));
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto ai = a.impl();
    return finish({1, 1}, {s}, {&a}, "sum", [ai](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < ai->data.size(); ++i) ga[i] += o.grad[0];
    });
}

Tensor mean_all(const Tensor& a) {
    require_rank2(a, "mean_all");
    if (a.size() == 0) throw ShapeError("mean_all: empty tensor " + shape_to_string(a.shape()));
    const double count = static_cast<double>(a.size());
    double s = 0.0;
    for (double v : a.data()) s += v;
    auto ai = a.impl();
    return finish({1, 1}, {s / count}, {&a}, "mean_all", [ai, count](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < ai->data.size(); ++i) ga[i] += o.grad[0] / count;
    });
}

Tensor l2norm_rows(const Tensor& a) {
    require_rank2(a, "l2norm_rows");
    const std::size_t m = a.rows(), n = a.cols();
    if (m * n == 0) throw ShapeError("l2norm_rows: empty tensor " + shape_to_string(a.shape()));
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += a.at(i, j) * a.at(i, j);
        out[i] = std::sqrt(s);
    }
    auto ai = a.impl();
    return finish({m, 1}, std::move(out), {&a}, "l2norm_rows", [ai, m, n](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < m; ++i) {
                const double norm = o.data[i];
                if (norm == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j)
                    ga[i * n + j] += o.grad[i] * ai->data[i * n + j] / norm;
            }
    });
}

Tensor reduce(ReduceOp op, const Tensor& a) {
    switch (op) {
        case ReduceOp::mean_rows: return mean_rows(a);
        case ReduceOp::mean_all: return mean_all(a);
        case ReduceOp::l2norm_rows: return l2norm_rows(a);
        case ReduceOp::sum: return sum(a);
    }
    throw std::logic_error("reduce: unknown op");
}

Tensor row_dot(const Tensor& a, const Tensor& b) {
    require_same("row_dot", a, b);
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i] += a.at(i, j) * b.at(i, j);
    auto ai = a.impl(), bi = b.impl();
    return finish({m, 1}, std::move(out), {&a, &b}, "row_dot", [ai, bi, m, n](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += o.grad[i] * bi->data[i * n + j];
        if (double* gb = grad_of(bi))
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) gb[i * n + j] += o.grad[i] * ai->data[i * n + j];
    });
}

Tensor safe_reciprocal(const Tensor& a, double floor) {
    require_rank2(a, "safe_reciprocal");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = a.data()[i];
        out[i] = std::abs(v) < floor ? 0.0 : 1.0 / v;
    }
    auto ai = a.impl();
    return finish(a.shape(), std::move(out), {&a}, "safe_reciprocal", [ai](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < o.grad.size(); ++i)
                ga[i] -= o.grad[i] * o.data[i] * o.data[i];
    });
}

Tensor log_clamped(const Tensor& a, double floor) {
    require_rank2(a, "log_clamped");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(a.data()[i], floor));
    auto ai = a.impl();
    return finish(a.shape(), std::move(out), {&a}, "log_clamped", [ai, floor](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < o.grad.size(); ++i)
                if (ai->data[i] > floor) ga[i] += o.grad[i] / ai->data[i];
    });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
    require_rank2(a, "gather_rows");
    const std::size_t m = a.rows(), n = a.cols();
    std::vector<double> out;
    out.reserve(rows.size() * n);
    for (std::size_t r : rows) {
        if (r >= m)
            throw ShapeError("gather_rows: row " + std::to_string(r) + " out of range for " +
                             shape_to_string(a.shape()));
        for (std::size_t j = 0; j < n; ++j) out.push_back(a.at(r, j));
    }
    std::vector<std::size_t> idx(rows.begin(), rows.end());
    auto ai = a.impl();
    return finish({rows.size(), n}, std::move(out), {&a}, "gather_rows",
                  [ai, idx = std::move(idx), n](const TensorImpl& o) {
                      if (double* ga = grad_of(ai))
                          for (std::size_t k = 0; k < idx.size(); ++k)
                              for (std::size_t j = 0; j < n; ++j) ga[idx[k] * n + j] += o.grad[k * n + j];
                  });
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
    require_rank2(a, "concat_rows");
    require_rank2(b, "concat_rows");
    if (a.cols() != b.cols()) mismatch("concat_rows", a, b);
    std::vector<double> out(a.data().begin(), a.data().end());
    out.insert(out.end(), b.data().begin(), b.data().end());
    const std::size_t split = a.size();
    auto ai = a.impl(), bi = b.impl();
    return finish({a.rows() + b.rows(), a.cols()}, std::move(out), {&a, &b}, "concat_rows",
                  [ai, bi, split](const TensorImpl& o) {
                      if (double* ga = grad_of(ai))
                          for (std::size_t i = 0; i < split; ++i) ga[i] += o.grad[i];
                      if (double* gb = grad_of(bi))
                          for (std::size_t i = split; i < o.grad.size(); ++i) gb[i - split] += o.grad[i];
                  });
}

Tensor pick(const Tensor& a, std::size_t r, std::size_t c) {
    require_rank2(a, "pick");
    if (r >= a.rows() || c >= a.cols())
        throw ShapeError("pick: (" + std::to_string(r) + ", " + std::to_string(c) + ") out of range for " +
                         shape_to_string(a.shape()));
    const std::size_t flat = r * a.cols() + c;
    auto ai = a.impl();
    return finish({1, 1}, {a.data()[flat]}, {&a}, "pick", [ai, flat](const TensorImpl& o) {
        if (double* ga = grad_of(ai)) ga[flat] += o.grad[0];
    });
}

Tensor dropout(const Tensor& a, double p, std::mt19937_64& rng, bool train) {
    require_rank2(a, "dropout");
    if (!train || p <= 0.0) return a;
    if (p >= 1.0) throw ConfigError("dropout: rate must be < 1");
    const double keep_scale = 1.0 / (1.0 - p);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> mask(a.size());
    for (double& m : mask) m = unit(rng) < p ? 0.0 : keep_scale;
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * mask[i];
    auto ai = a.impl();
    return finish(a.shape(), std::move(out), {&a}, "dropout", [ai, mask = std::move(mask)](const TensorImpl& o) {
        if (double* ga = grad_of(ai))
            for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] * mask[i];
    });
}

}  // namespace emgf

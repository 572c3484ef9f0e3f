#include "nevae/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace nevae {

namespace detail {

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;  // allocated once the node joins gradient flow
    bool tracked = false;

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

}  // namespace detail

using detail::TensorImpl;

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ']';
    return os.str();
}

namespace {

thread_local GradTape* g_active_tape = nullptr;

std::shared_ptr<TensorImpl> make_impl(Shape shape, std::vector<double> values) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(values);
    return impl;
}

void require_defined(const char* op, const Tensor& t) {
    if (!t.defined()) throw ValueError(std::string(op) + ": undefined tensor operand");
}

void check_finite(const char* op, const std::vector<double>& values) {
    for (double v : values) {
        if (!std::isfinite(v))
            throw ValueError(std::string(op) + ": non-finite result");
    }
}

Shape broadcast_shape(const char* op, const Shape& a, const Shape& b) {
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        const std::size_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (da != db && da != 1 && db != 1)
            throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(a) +
                             " with " + shape_str(b));
        out[i] = std::max(da, db);
    }
    return out;
}

// Maps flat indices of the broadcast result onto flat indices of one operand
// (stride 0 on expanded axes).
class BroadcastMap {
public:
    BroadcastMap(const Shape& out, const Shape& in) {
        const std::size_t rank = out.size();
        const std::size_t off = rank - in.size();
        dims_.resize(rank);
        strides_.resize(rank);
        std::size_t stride = 1;
        identity_ = true;
        for (std::size_t r = rank; r-- > 0;) {
            const std::size_t extent = r < off ? 1 : in[r - off];
            dims_[r] = out[r];
            strides_[r] = extent == 1 ? 0 : stride;
            if (extent != out[r]) identity_ = false;
            stride *= extent;
        }
        if (off != 0) identity_ = false;
    }

    bool identity() const { return identity_; }

    std::size_t operator()(std::size_t flat) const {
        if (identity_) return flat;
        std::size_t idx = 0;
        for (std::size_t r = dims_.size(); r-- > 0;) {
            idx += (flat % dims_[r]) * strides_[r];
            flat /= dims_[r];
        }
        return idx;
    }

private:
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> strides_;
    bool identity_ = true;
};

Tensor wrap(std::shared_ptr<TensorImpl> impl);

// Marks the output tracked and pre-allocates gradient buffers on the nodes
// that will receive contributions during replay.
bool start_recording(const std::vector<std::shared_ptr<TensorImpl>>& inputs,
                     const std::shared_ptr<TensorImpl>& out) {
    GradTape* tape = GradTape::active();
    if (!tape) return false;
    bool any = false;
    for (const auto& in : inputs) any = any || in->tracked;
    if (!any) return false;
    out->tracked = true;
    out->ensure_grad();
    for (const auto& in : inputs)
        if (in->tracked) in->ensure_grad();
    return true;
}

}  // namespace

Tensor wrap_impl(std::shared_ptr<TensorImpl> impl) { return Tensor(std::move(impl)); }

namespace {
Tensor wrap(std::shared_ptr<TensorImpl> impl) { return wrap_impl(std::move(impl)); }
}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor() = default;

Tensor::Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

Tensor Tensor::zeros(Shape shape) {
    auto n = shape_numel(shape);
    return wrap_impl(make_impl(std::move(shape), std::vector<double>(n, 0.0)));
}

Tensor Tensor::full(Shape shape, double value) {
    auto n = shape_numel(shape);
    return wrap_impl(make_impl(std::move(shape), std::vector<double>(n, value)));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != values.size())
        throw ShapeError("from_data: shape " + shape_str(shape) + " wants " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
    return wrap_impl(make_impl(std::move(shape), std::move(values)));
}

Tensor Tensor::scalar(double value) { return from_data({}, {value}); }

const Shape& Tensor::shape() const {
    static const Shape empty;
    return impl_ ? impl_->shape : empty;
}

std::size_t Tensor::numel() const { return impl_ ? impl_->data.size() : 0; }

std::span<const double> Tensor::data() const {
    return impl_ ? std::span<const double>(impl_->data) : std::span<const double>();
}

std::span<double> Tensor::mutable_data() {
    if (!impl_) throw ValueError("mutable_data: undefined tensor");
    return std::span<double>(impl_->data);
}

double Tensor::item() const {
    if (numel() != 1)
        throw ShapeError("item: tensor of shape " + shape_str(shape()) + " is not scalar");
    return impl_->data[0];
}

double Tensor::at(std::size_t i) const {
    if (!impl_ || i >= impl_->data.size())
        throw ShapeError("at: flat index " + std::to_string(i) + " out of range for " +
                         shape_str(shape()));
    return impl_->data[i];
}

double Tensor::at(std::size_t row, std::size_t col) const {
    if (rank() != 2)
        throw ShapeError("at(row, col): tensor has shape " + shape_str(shape()));
    const auto& s = impl_->shape;
    if (row >= s[0] || col >= s[1])
        throw ShapeError("at: index (" + std::to_string(row) + ", " + std::to_string(col) +
                         ") out of range for " + shape_str(s));
    return impl_->data[row * s[1] + col];
}

bool Tensor::tracked() const { return impl_ && impl_->tracked; }

bool Tensor::has_grad() const { return impl_ && impl_->grad.size() == impl_->data.size(); }

std::span<const double> Tensor::grad() const {
    if (!has_grad()) throw ValueError("grad: tensor has no gradient buffer");
    return std::span<const double>(impl_->grad);
}

Tensor Tensor::grad_tensor() const {
    if (!has_grad()) throw ValueError("grad_tensor: tensor has no gradient buffer");
    return from_data(impl_->shape, impl_->grad);
}

void Tensor::zero_grad() {
    if (impl_) impl_->ensure_grad(), std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
    if (!impl_) return Tensor();
    return from_data(impl_->shape, impl_->data);
}

// ---------------------------------------------------------------------------
// GradTape

GradTape::GradTape() {
    if (g_active_tape)
        throw Error("GradTape: a tape is already active on this thread");
    g_active_tape = this;
}

GradTape::~GradTape() {
    if (g_active_tape == this) g_active_tape = nullptr;
}

GradTape* GradTape::active() { return g_active_tape; }

void GradTape::watch(Tensor& t) {
    if (!t.defined()) throw ValueError("watch: undefined tensor");
    t.impl_->tracked = true;
    t.impl_->ensure_grad();
    std::fill(t.impl_->grad.begin(), t.impl_->grad.end(), 0.0);
}

void GradTape::record(std::function<void()> fn) { entries_.push_back(std::move(fn)); }

void GradTape::backward(const Tensor& root) {
    if (!root.defined() || root.numel() != 1)
        throw ShapeError("backward: root must be scalar, got shape " + shape_str(root.shape()));
    if (root.impl_->tracked) {
        root.impl_->ensure_grad();
        root.impl_->grad[0] = 1.0;
    }
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
    entries_.clear();
}

void backward(const Tensor& root) {
    GradTape* tape = GradTape::active();
    if (!tape) throw Error("backward: no active gradient tape");
    tape->backward(root);
}

// ---------------------------------------------------------------------------
// Elementwise binaries

namespace {

enum class BinaryKind { Add, Sub, Mul };

Tensor binary_op(const char* name, BinaryKind kind, const Tensor& a, const Tensor& b) {
    require_defined(name, a);
    require_defined(name, b);
    Shape os = broadcast_shape(name, a.shape(), b.shape());
    const std::size_t n = shape_numel(os);
    auto out = make_impl(std::move(os), std::vector<double>(n));

    const BroadcastMap ma(out->shape, a.shape());
    const BroadcastMap mb(out->shape, b.shape());
    const auto& ad = a.impl()->data;
    const auto& bd = b.impl()->data;

    if (ma.identity() && mb.identity()) {
        switch (kind) {
            case BinaryKind::Add:
                for (std::size_t i = 0; i < n; ++i) out->data[i] = ad[i] + bd[i];
                break;
            case BinaryKind::Sub:
                for (std::size_t i = 0; i < n; ++i) out->data[i] = ad[i] - bd[i];
                break;
            case BinaryKind::Mul:
                for (std::size_t i = 0; i < n; ++i) out->data[i] = ad[i] * bd[i];
                break;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double x = ad[ma(i)];
            const double y = bd[mb(i)];
            out->data[i] = kind == BinaryKind::Add   ? x + y
                           : kind == BinaryKind::Sub ? x - y
                                                     : x * y;
        }
    }
    check_finite(name, out->data);

    if (start_recording({a.impl(), b.impl()}, out)) {
        auto ai = a.impl();
        auto bi = b.impl();
        GradTape::active()->record([ai, bi, out, ma, mb, kind, n] {
            const auto& g = out->grad;
            if (ai->tracked) {
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = kind == BinaryKind::Mul ? g[i] * bi->data[mb(i)] : g[i];
                    ai->grad[ma(i)] += d;
                }
            }
            if (bi->tracked) {
                for (std::size_t i = 0; i < n; ++i) {
                    double d = kind == BinaryKind::Mul   ? g[i] * ai->data[ma(i)]
                               : kind == BinaryKind::Sub ? -g[i]
                                                         : g[i];
                    bi->grad[mb(i)] += d;
                }
            }
        });
    }
    return wrap(out);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return binary_op("add", BinaryKind::Add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op("sub", BinaryKind::Sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op("mul", BinaryKind::Mul, a, b); }

// ---------------------------------------------------------------------------
// Unary ops

namespace {

template <class Fwd, class Dfn>
Tensor unary_op(const char* name, const Tensor& a, Fwd f, Dfn df) {
    require_defined(name, a);
    const std::size_t n = a.numel();
    auto out = make_impl(a.shape(), std::vector<double>(n));
    const auto& ad = a.impl()->data;
    for (std::size_t i = 0; i < n; ++i) out->data[i] = f(ad[i]);
    check_finite(name, out->data);

    if (start_recording({a.impl()}, out)) {
        auto ai = a.impl();
        GradTape::active()->record([ai, out, df, n] {
            for (std::size_t i = 0; i < n; ++i)
                ai->grad[i] += out->grad[i] * df(ai->data[i], out->data[i]);
        });
    }
    return wrap(out);
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double stable_softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

Tensor exp(const Tensor& a) {
    return unary_op(
        "exp", a, [](double x) { return std::exp(x); },
        [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    require_defined("log", a);
    for (double v : a.impl()->data)
        if (!(v > 0.0))
            throw ValueError("log: non-positive input " + std::to_string(v));
    return unary_op(
        "log", a, [](double x) { return std::log(x); },
        [](double x, double) { return 1.0 / x; });
}

Tensor tanh(const Tensor& a) {
    return unary_op(
        "tanh", a, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
    // Subgradient at 0 is 0.
    return unary_op(
        "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
    return unary_op(
        "sigmoid", a, [](double x) { return stable_sigmoid(x); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor square(const Tensor& a) {
    return unary_op(
        "square", a, [](double x) { return x * x; },
        [](double x, double) { return 2.0 * x; });
}

Tensor softplus(const Tensor& a) {
    return unary_op(
        "softplus", a, [](double x) { return stable_softplus(x); },
        [](double x, double) { return stable_sigmoid(x); });
}

Tensor clamp_min(const Tensor& a, double lo) {
    return unary_op(
        "clamp_min", a, [lo](double x) { return x < lo ? lo : x; },
        [lo](double x, double) { return x > lo ? 1.0 : 0.0; });
}

Tensor add_scalar(const Tensor& a, double c) {
    return unary_op(
        "add_scalar", a, [c](double x) { return x + c; },
        [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double c) {
    return unary_op(
        "mul_scalar", a, [c](double x) { return x * c; },
        [c](double, double) { return c; });
}

// ---------------------------------------------------------------------------
// Matmul (2-D only)

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_defined("matmul", a);
    require_defined("matmul", b);
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0])
        throw ShapeError("matmul: shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " do not conform");
    const std::size_t m = a.shape()[0], k = a.shape()[1], nn = b.shape()[1];
    auto out = make_impl({m, nn}, std::vector<double>(m * nn, 0.0));
    const double* A = a.impl()->data.data();
    const double* B = b.impl()->data.data();
    double* C = out->data.data();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = A[i * k + p];
            if (av == 0.0) continue;
            const double* brow = B + p * nn;
            double* crow = C + i * nn;
            for (std::size_t j = 0; j < nn; ++j) crow[j] += av * brow[j];
        }
    }
    check_finite("matmul", out->data);

    if (start_recording({a.impl(), b.impl()}, out)) {
        auto ai = a.impl();
        auto bi = b.impl();
        GradTape::active()->record([ai, bi, out, m, k, nn] {
            const double* G = out->grad.data();
            if (ai->tracked) {
                double* dA = ai->grad.data();
                const double* B = bi->data.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        double s = 0.0;
                        const double* grow = G + i * nn;
                        const double* brow = B + p * nn;
                        for (std::size_t j = 0; j < nn; ++j) s += grow[j] * brow[j];
                        dA[i * k + p] += s;
                    }
            }
            if (bi->tracked) {
                double* dB = bi->grad.data();
                const double* A = ai->data.data();
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t p = 0; p < k; ++p) {
                        const double av = A[i * k + p];
                        if (av == 0.0) continue;
                        const double* grow = G + i * nn;
                        double* brow = dB + p * nn;
                        for (std::size_t j = 0; j < nn; ++j) brow[j] += av * grow[j];
                    }
            }
        });
    }
    return wrap(out);
}

// ---------------------------------------------------------------------------
// Reductions

namespace {

struct AxisSplit {
    std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_axis(const char* op, const Shape& shape, std::size_t axis) {
    if (axis >= shape.size())
        throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                         " out of range for shape " + shape_str(shape));
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    s.n = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

Tensor reduce_axis(const char* name, const Tensor& a, std::size_t axis, bool mean) {
    require_defined(name, a);
    const AxisSplit sp = split_axis(name, a.shape(), axis);
    Shape os = a.shape();
    os.erase(os.begin() + static_cast<std::ptrdiff_t>(axis));
    auto out = make_impl(std::move(os), std::vector<double>(sp.outer * sp.inner, 0.0));
    const auto& ad = a.impl()->data;
    const double scale = mean ? 1.0 / static_cast<double>(sp.n) : 1.0;
    for (std::size_t o = 0; o < sp.outer; ++o)
        for (std::size_t j = 0; j < sp.n; ++j)
            for (std::size_t i = 0; i < sp.inner; ++i)
                out->data[o * sp.inner + i] += ad[(o * sp.n + j) * sp.inner + i];
    if (mean)
        for (auto& v : out->data) v *= scale;
    check_finite(name, out->data);

    if (start_recording({a.impl()}, out)) {
        auto ai = a.impl();
        GradTape::active()->record([ai, out, sp, scale] {
            for (std::size_t o = 0; o < sp.outer; ++o)
                for (std::size_t j = 0; j < sp.n; ++j)
                    for (std::size_t i = 0; i < sp.inner; ++i)
                        ai->grad[(o * sp.n + j) * sp.inner + i] +=
                            out->grad[o * sp.inner + i] * scale;
        });
    }
    return wrap(out);
}

Tensor reduce_all(const char* name, const Tensor& a, bool mean) {
    require_defined(name, a);
    const std::size_t n = a.numel();
    const double scale = mean ? 1.0 / static_cast<double>(n) : 1.0;
    double s = 0.0;
    for (double v : a.impl()->data) s += v;
    auto out = make_impl({}, {s * scale});
    check_finite(name, out->data);

    if (start_recording({a.impl()}, out)) {
        auto ai = a.impl();
        GradTape::active()->record([ai, out, n, scale] {
            const double g = out->grad[0] * scale;
            for (std::size_t i = 0; i < n; ++i) ai->grad[i] += g;
        });
    }
    return wrap(out);
}

}  // namespace

Tensor sum_axis(const Tensor& a, std::size_t axis) { return reduce_axis("sum_axis", a, axis, false); }
Tensor mean_axis(const Tensor& a, std::size_t axis) { return reduce_axis("mean_axis", a, axis, true); }
Tensor sum_all(const Tensor& a) { return reduce_all("sum_all", a, false); }
Tensor mean_all(const Tensor& a) { return reduce_all("mean_all", a, true); }

// ---------------------------------------------------------------------------
// Concat / slice

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
    if (parts.empty()) throw ValueError("concat: no operands");
    for (const auto& p : parts) require_defined("concat", p);
    const Shape& ref = parts[0].shape();
    if (axis >= ref.size())
        throw ShapeError("concat: axis " + std::to_string(axis) + " out of range for shape " +
                         shape_str(ref));
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p.rank() != ref.size())
            throw ShapeError("concat: rank mismatch between " + shape_str(ref) + " and " +
                             shape_str(p.shape()));
        for (std::size_t i = 0; i < ref.size(); ++i)
            if (i != axis && p.shape()[i] != ref[i])
                throw ShapeError("concat: shapes " + shape_str(ref) + " and " +
                                 shape_str(p.shape()) + " differ off-axis");
        total += p.shape()[axis];
    }
    Shape os = ref;
    os[axis] = total;
    auto out = make_impl(os, std::vector<double>(shape_numel(os)));

    const AxisSplit osp = split_axis("concat", os, axis);
    std::size_t offset = 0;
    for (const auto& p : parts) {
        const std::size_t pn = p.shape()[axis];
        const auto& pd = p.impl()->data;
        for (std::size_t o = 0; o < osp.outer; ++o)
            std::copy_n(pd.begin() + static_cast<std::ptrdiff_t>(o * pn * osp.inner),
                        pn * osp.inner,
                        out->data.begin() +
                            static_cast<std::ptrdiff_t>((o * osp.n + offset) * osp.inner));
        offset += pn;
    }

    std::vector<std::shared_ptr<TensorImpl>> impls;
    impls.reserve(parts.size());
    for (const auto& p : parts) impls.push_back(p.impl());
    if (start_recording(impls, out)) {
        GradTape::active()->record([impls, out, osp] {
            std::size_t off = 0;
            for (const auto& pi : impls) {
                const std::size_t pn = pi->data.size() / (osp.outer * osp.inner);
                if (pi->tracked) {
                    for (std::size_t o = 0; o < osp.outer; ++o)
                        for (std::size_t j = 0; j < pn * osp.inner; ++j)
                            pi->grad[o * pn * osp.inner + j] +=
                                out->grad[(o * osp.n + off) * osp.inner + j];
                }
                off += pn;
            }
        });
    }
    return wrap(out);
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t len) {
    require_defined("slice", a);
    const AxisSplit sp = split_axis("slice", a.shape(), axis);
    if (start + len > sp.n)
        throw ShapeError("slice: range [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") exceeds extent " + std::to_string(sp.n) +
                         " of shape " + shape_str(a.shape()));
    Shape os = a.shape();
    os[axis] = len;
    auto out = make_impl(std::move(os), std::vector<double>(sp.outer * len * sp.inner));
    const auto& ad = a.impl()->data;
    for (std::size_t o = 0; o < sp.outer; ++o)
        std::copy_n(ad.begin() + static_cast<std::ptrdiff_t>((o * sp.n + start) * sp.inner),
                    len * sp.inner,
                    out->data.begin() + static_cast<std::ptrdiff_t>(o * len * sp.inner));

    if (start_recording({a.impl()}, out)) {
        auto ai = a.impl();
        GradTape::active()->record([ai, out, sp, start, len] {
            for (std::size_t o = 0; o < sp.outer; ++o)
                for (std::size_t j = 0; j < len * sp.inner; ++j)
                    ai->grad[(o * sp.n + start) * sp.inner + j] +=
                        out->grad[o * len * sp.inner + j];
        });
    }
    return wrap(out);
}

}  // namespace nevae

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nevae/errors.hpp"

namespace nevae {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct TensorImpl;
}

// Dense row-major tensor of 64-bit floats. Copies are cheap handles sharing
// storage (clone() deep-copies); a tensor participates in gradient flow once
// it is watched on the active tape or produced from tracked inputs.
class Tensor {
public:
    Tensor();

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor from_data(Shape shape, std::vector<double> values);
    static Tensor scalar(double value);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const;
    bool is_scalar() const { return numel() == 1; }

    std::span<const double> data() const;
    std::span<double> mutable_data();
    double item() const;
    double at(std::size_t i) const;
    double at(std::size_t row, std::size_t col) const;

    bool tracked() const;
    bool has_grad() const;
    std::span<const double> grad() const;
    Tensor grad_tensor() const;
    void zero_grad();

    Tensor clone() const;

    // Internal node handle; exposed for the op layer.
    const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

private:
    explicit Tensor(std::shared_ptr<detail::TensorImpl> impl);
    std::shared_ptr<detail::TensorImpl> impl_;

    friend class GradTape;
    friend Tensor wrap_impl(std::shared_ptr<detail::TensorImpl> impl);
};

// Define-by-run gradient tape. Constructing one makes it the active tape for
// the current thread (nesting is an error); ops record backward closures while
// it is active. One forward build per tape: backward() consumes the entries.
class GradTape {
public:
    GradTape();
    ~GradTape();
    GradTape(const GradTape&) = delete;
    GradTape& operator=(const GradTape&) = delete;

    // Marks a leaf: allocates and zeroes its gradient buffer.
    void watch(Tensor& t);

    // Populates d(root)/d(leaf) for every watched leaf reachable from root.
    // Unreachable leaves keep their zero gradient. root must be scalar.
    void backward(const Tensor& root);

    void record(std::function<void()> fn);
    std::size_t size() const { return entries_.size(); }

    static GradTape* active();

private:
    std::vector<std::function<void()>> entries_;
};

// Gradient of root w.r.t. the active tape's watched leaves.
void backward(const Tensor& root);

// Elementwise binaries broadcast right-aligned with size-1 expansion.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);

Tensor matmul(const Tensor& a, const Tensor& b);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor square(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor clamp_min(const Tensor& a, double lo);

Tensor sum_axis(const Tensor& a, std::size_t axis);
Tensor mean_axis(const Tensor& a, std::size_t axis);
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t len);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator+(const Tensor& a, double c) { return add_scalar(a, c); }
inline Tensor operator*(const Tensor& a, double c) { return mul_scalar(a, c); }
inline Tensor operator*(double c, const Tensor& a) { return mul_scalar(a, c); }

}  // namespace nevae

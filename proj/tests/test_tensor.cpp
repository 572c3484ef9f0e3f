#include <gtest/gtest.h>

#include <cmath>

#include "finite_diff.hpp"
#include "nevae/rng.hpp"
#include "nevae/tensor.hpp"

using namespace nevae;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, double lo = -2.0, double hi = 2.0) {
    return Tensor::from_data(shape, rng.uniform_vector(shape_numel(shape), lo, hi));
}

// Scalar objective mixing every output entry with fixed weights, so gradient
// checks exercise all positions.
Tensor weighted_sum(const Tensor& t, const std::vector<double>& weights) {
    return sum_all(mul(t, Tensor::from_data(t.shape(), weights)));
}

}  // namespace

TEST(Tensor, ShapesAndData) {
    Tensor t = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(t.shape(), (Shape{2, 3}));
    EXPECT_EQ(t.numel(), 6u);
    EXPECT_DOUBLE_EQ(t.at(1, 2), 6.0);
    EXPECT_THROW(Tensor::from_data({2, 2}, {1, 2, 3}), ShapeError);
    EXPECT_THROW(t.item(), ShapeError);
    EXPECT_DOUBLE_EQ(Tensor::scalar(4.5).item(), 4.5);
}

TEST(Tensor, MatmulIdentity) {
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
    Tensor c = matmul(a, eye);
    EXPECT_EQ(c.data()[0], 1.0);
    EXPECT_EQ(c.data()[1], 2.0);
    EXPECT_EQ(c.data()[2], 3.0);
    EXPECT_EQ(c.data()[3], 4.0);
}

TEST(Tensor, MatmulShapeErrorNamesBothShapes) {
    Tensor a = Tensor::zeros({2, 3});
    Tensor b = Tensor::zeros({4, 2});
    try {
        matmul(a, b);
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
        EXPECT_NE(msg.find("[4, 2]"), std::string::npos) << msg;
    }
}

TEST(Tensor, SigmoidAtZero) {
    EXPECT_DOUBLE_EQ(sigmoid(Tensor::scalar(0.0)).item(), 0.5);
}

TEST(Tensor, SumAxisExample) {
    Tensor t = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor s = sum_axis(t, 1);
    EXPECT_EQ(s.shape(), (Shape{2}));
    EXPECT_DOUBLE_EQ(s.data()[0], 3.0);
    EXPECT_DOUBLE_EQ(s.data()[1], 7.0);
}

TEST(Tensor, BroadcastingRowBias) {
    Tensor m = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor bias = Tensor::from_data({3}, {10, 20, 30});
    Tensor r = add(m, bias);
    EXPECT_DOUBLE_EQ(r.at(0, 0), 11.0);
    EXPECT_DOUBLE_EQ(r.at(1, 2), 36.0);

    Tensor col = Tensor::from_data({2, 1}, {100, 200});
    Tensor r2 = add(m, col);
    EXPECT_DOUBLE_EQ(r2.at(0, 2), 103.0);
    EXPECT_DOUBLE_EQ(r2.at(1, 0), 204.0);
}

TEST(Tensor, BroadcastingRejectsMismatch) {
    EXPECT_THROW(add(Tensor::zeros({2}), Tensor::zeros({3})), ShapeError);
    EXPECT_THROW(mul(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), ShapeError);
}

TEST(Tensor, LogDomainError) {
    EXPECT_THROW(log(Tensor::scalar(0.0)), ValueError);
    EXPECT_THROW(log(Tensor::from_data({2}, {1.0, -3.0})), ValueError);
}

TEST(Tensor, NonFiniteResultRejected) {
    EXPECT_THROW(exp(Tensor::scalar(1000.0)), ValueError);
}

TEST(Tensor, ForwardDeterminism) {
    Rng rng(7);
    Tensor a = random_tensor(rng, {8, 8});
    Tensor b = random_tensor(rng, {8, 8});
    Tensor c1 = matmul(a, b);
    Tensor c2 = matmul(a, b);
    for (std::size_t i = 0; i < c1.numel(); ++i) EXPECT_EQ(c1.data()[i], c2.data()[i]);
}

TEST(Backward, SumOfSquares) {
    Tensor x = Tensor::from_data({3}, {1, 2, 3});
    GradTape tape;
    tape.watch(x);
    Tensor loss = sum_all(square(x));
    tape.backward(loss);
    EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
    EXPECT_DOUBLE_EQ(x.grad()[1], 4.0);
    EXPECT_DOUBLE_EQ(x.grad()[2], 6.0);
}

TEST(Backward, DisconnectedRootLeavesZeroGrads) {
    Tensor x = Tensor::from_data({3}, {1, 2, 3});
    Tensor c = Tensor::scalar(5.0);
    GradTape tape;
    tape.watch(x);
    Tensor root = sum_all(square(c));  // no path to x
    tape.backward(root);
    EXPECT_DOUBLE_EQ(x.grad()[0], 0.0);
    EXPECT_DOUBLE_EQ(x.grad()[1], 0.0);
    EXPECT_DOUBLE_EQ(x.grad()[2], 0.0);
}

TEST(Backward, ReusedLeafAccumulates) {
    Tensor x = Tensor::from_data({2}, {3.0, -1.0});
    GradTape tape;
    tape.watch(x);
    Tensor loss = sum_all(add(mul(x, x), x));  // d/dx (x^2 + x) = 2x + 1
    tape.backward(loss);
    EXPECT_DOUBLE_EQ(x.grad()[0], 7.0);
    EXPECT_DOUBLE_EQ(x.grad()[1], -1.0);
}

TEST(Backward, NonScalarRootRejected) {
    Tensor x = Tensor::from_data({2}, {1, 2});
    GradTape tape;
    tape.watch(x);
    Tensor y = square(x);
    EXPECT_THROW(tape.backward(y), ShapeError);
}

TEST(Backward, NoActiveTapeRejected) {
    Tensor x = Tensor::scalar(1.0);
    EXPECT_THROW(backward(x), Error);
}

TEST(Backward, NestedTapeRejected) {
    GradTape tape;
    EXPECT_THROW(GradTape nested, Error);
}

TEST(Backward, ReluSubgradientZeroAtZero) {
    Tensor x = Tensor::from_data({3}, {-1.0, 0.0, 2.0});
    GradTape tape;
    tape.watch(x);
    tape.backward(sum_all(relu(x)));
    EXPECT_DOUBLE_EQ(x.grad()[0], 0.0);
    EXPECT_DOUBLE_EQ(x.grad()[1], 0.0);
    EXPECT_DOUBLE_EQ(x.grad()[2], 1.0);
}

TEST(Backward, ConcatSliceRoundTrip) {
    Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
    Tensor b = Tensor::from_data({2, 1}, {5, 6});
    Tensor c = concat({a, b}, 1);
    EXPECT_EQ(c.shape(), (Shape{2, 3}));
    EXPECT_DOUBLE_EQ(c.at(0, 2), 5.0);
    EXPECT_DOUBLE_EQ(c.at(1, 1), 4.0);
    Tensor back = slice(c, 1, 0, 2);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(back.data()[i], a.data()[i]);
    EXPECT_THROW(slice(c, 1, 2, 2), ShapeError);
}

// ---------------------------------------------------------------------------
// Finite-difference property checks over randomized small tensors.

namespace {

struct FdCase {
    const char* name;
    // Builds a scalar objective from the watched input.
    std::function<Tensor(const Tensor&, Rng&)> objective;
    double lo = -2.0, hi = 2.0;
};

void run_fd_trials(const FdCase& fd, int trials, double tol = 1e-4) {
    Rng rng(std::hash<std::string>{}(fd.name));
    for (int trial = 0; trial < trials; ++trial) {
        const std::size_t r = 1 + rng.below(6);
        const std::size_t c = 1 + rng.below(8);
        Tensor x = random_tensor(rng, {r, c}, fd.lo, fd.hi);
        Rng obj_rng(rng.next_u64());

        std::vector<double> analytic;
        {
            GradTape tape;
            tape.watch(x);
            Rng local = obj_rng;
            Tensor loss = fd.objective(x, local);
            tape.backward(loss);
            analytic.assign(x.grad().begin(), x.grad().end());
        }
        auto numeric = oracles::central_diff(x, [&] {
            Rng local = obj_rng;
            return fd.objective(x, local).item();
        });
        EXPECT_LT(oracles::max_rel_err(analytic, numeric), tol)
            << fd.name << " trial " << trial << " shape [" << r << ", " << c << "]";
    }
}

}  // namespace

TEST(FiniteDiff, ElementwiseUnaryOps) {
    auto spread = [](const Tensor& t, Rng& rng) {
        return weighted_sum(t, rng.uniform_vector(t.numel(), -1.0, 1.0));
    };
    run_fd_trials({"exp", [&](const Tensor& x, Rng& r) { return spread(exp(x), r); }}, 100);
    run_fd_trials({"log", [&](const Tensor& x, Rng& r) { return spread(log(x), r); }, 0.1, 3.0},
                  100);
    run_fd_trials({"tanh", [&](const Tensor& x, Rng& r) { return spread(tanh(x), r); }}, 100);
    run_fd_trials({"sigmoid", [&](const Tensor& x, Rng& r) { return spread(sigmoid(x), r); }},
                  100);
    run_fd_trials({"square", [&](const Tensor& x, Rng& r) { return spread(square(x), r); }}, 100);
    run_fd_trials({"softplus", [&](const Tensor& x, Rng& r) { return spread(softplus(x), r); }},
                  100);
    // Keep relu/clamp inputs away from the kink where the derivative jumps.
    run_fd_trials({"relu", [&](const Tensor& x, Rng& r) { return spread(relu(x), r); }, 0.2, 2.0},
                  50);
    run_fd_trials({"relu_neg",
                   [&](const Tensor& x, Rng& r) { return spread(relu(x), r); }, -2.0, -0.2},
                  50);
    run_fd_trials({"clamp_min",
                   [&](const Tensor& x, Rng& r) { return spread(clamp_min(x, 0.5), r); }, 0.7,
                   3.0},
                  50);
    run_fd_trials({"add_scalar",
                   [&](const Tensor& x, Rng& r) { return spread(add_scalar(x, 1.7), r); }},
                  50);
    run_fd_trials({"mul_scalar",
                   [&](const Tensor& x, Rng& r) { return spread(mul_scalar(x, -2.5), r); }},
                  50);
}

TEST(FiniteDiff, BinaryOpsWithBroadcast) {
    auto spread = [](const Tensor& t, Rng& rng) {
        return weighted_sum(t, rng.uniform_vector(t.numel(), -1.0, 1.0));
    };
    auto other_same = [](const Tensor& x, Rng& rng) {
        return random_tensor(rng, x.shape());
    };
    auto other_row = [](const Tensor& x, Rng& rng) {
        return random_tensor(rng, {x.shape()[1]});
    };
    run_fd_trials({"add", [&](const Tensor& x, Rng& r) { return spread(add(x, other_same(x, r)), r); }},
                  100);
    run_fd_trials({"sub", [&](const Tensor& x, Rng& r) { return spread(sub(other_same(x, r), x), r); }},
                  100);
    run_fd_trials({"mul", [&](const Tensor& x, Rng& r) { return spread(mul(x, other_same(x, r)), r); }},
                  100);
    run_fd_trials({"add_bcast",
                   [&](const Tensor& x, Rng& r) { return spread(add(x, other_row(x, r)), r); }},
                  50);
    run_fd_trials({"mul_bcast",
                   [&](const Tensor& x, Rng& r) { return spread(mul(x, other_row(x, r)), r); }},
                  50);
    // Gradient w.r.t. the broadcast (smaller) operand.
    run_fd_trials({"mul_bcast_small", [&](const Tensor& x, Rng& r) {
                       Tensor big = random_tensor(r, {4, x.shape()[0], x.shape()[1]});
                       return spread(mul(big, x), r);
                   }},
                  50);
}

TEST(FiniteDiff, MatmulBothSides) {
    auto spread = [](const Tensor& t, Rng& rng) {
        return weighted_sum(t, rng.uniform_vector(t.numel(), -1.0, 1.0));
    };
    run_fd_trials({"matmul_lhs", [&](const Tensor& x, Rng& r) {
                       Tensor w = random_tensor(r, {x.shape()[1], 5});
                       return spread(matmul(x, w), r);
                   }},
                  100);
    run_fd_trials({"matmul_rhs", [&](const Tensor& x, Rng& r) {
                       Tensor a = random_tensor(r, {5, x.shape()[0]});
                       return spread(matmul(a, x), r);
                   }},
                  100);
}

TEST(FiniteDiff, ReductionsConcatSlice) {
    auto spread = [](const Tensor& t, Rng& rng) {
        return weighted_sum(t, rng.uniform_vector(t.numel(), -1.0, 1.0));
    };
    run_fd_trials({"sum_axis0", [&](const Tensor& x, Rng& r) { return spread(sum_axis(x, 0), r); }},
                  50);
    run_fd_trials({"sum_axis1", [&](const Tensor& x, Rng& r) { return spread(sum_axis(x, 1), r); }},
                  50);
    run_fd_trials({"mean_axis1",
                   [&](const Tensor& x, Rng& r) { return spread(mean_axis(x, 1), r); }},
                  50);
    run_fd_trials({"sum_all", [&](const Tensor& x, Rng&) { return sum_all(x); }}, 25);
    run_fd_trials({"mean_all", [&](const Tensor& x, Rng&) { return mean_all(x); }}, 25);
    run_fd_trials({"concat", [&](const Tensor& x, Rng& r) {
                       Tensor pad = random_tensor(r, x.shape());
                       return spread(concat({x, pad}, 1), r);
                   }},
                  50);
    run_fd_trials({"slice", [&](const Tensor& x, Rng& r) {
                       const std::size_t len = 1 + x.shape()[1] / 2;
                       return spread(slice(x, 1, 0, len), r);
                   }},
                  50);
}

TEST(FiniteDiff, ChainComposition) {
    // f(g(x)) through a two-layer nonlinear pipeline.
    run_fd_trials({"chain", [](const Tensor& x, Rng& r) {
                       Tensor w1 = random_tensor(r, {x.shape()[1], 6}, -0.7, 0.7);
                       Tensor b1 = random_tensor(r, {6}, -0.3, 0.3);
                       Tensor w2 = random_tensor(r, {6, 3}, -0.7, 0.7);
                       Tensor h = tanh(add(matmul(x, w1), b1));
                       Tensor out = sigmoid(matmul(h, w2));
                       return mean_all(square(out));
                   }},
                  100);
}

TEST(FiniteDiff, LogisticRegressionLossMatrix) {
    // Gradient of a logistic-regression loss w.r.t. its 2x3 weight matrix.
    Rng rng(42);
    Tensor x = random_tensor(rng, {5, 2});
    Tensor y = Tensor::from_data({5, 3}, rng.uniform_vector(15, 0.0, 1.0));
    Tensor w = random_tensor(rng, {2, 3}, -1.0, 1.0);

    std::vector<double> analytic;
    {
        GradTape tape;
        tape.watch(w);
        Tensor p = sigmoid(matmul(x, w));
        Tensor loss = mean_all(square(sub(p, y)));
        tape.backward(loss);
        analytic.assign(w.grad().begin(), w.grad().end());
    }
    auto numeric = oracles::central_diff(w, [&] {
        Tensor p = sigmoid(matmul(x, w));
        return mean_all(square(sub(p, y))).item();
    });
    EXPECT_LT(oracles::max_rel_err(analytic, numeric), 1e-4);
}

#include <cmath>

#include <doctest.h>

#include "fisherplane/tensor.hpp"
#include "test_util.hpp"

using namespace fisherplane;
namespace tu = fisherplane::testutil;

TEST_CASE("matmul on hand-checked 2x2") {
    Tape t;
    const Tensor a = Tensor::from_vector({2, 2}, {1, 2, 3, 4});
    const Tensor b = Tensor::from_vector({2, 1}, {1, 1});
    const Tensor c = t.matmul(a, b);
    CHECK(c.shape() == Shape{2, 1});
    CHECK(c.at(0) == 3.0);
    CHECK(c.at(1) == 7.0);
}

TEST_CASE("exp of a zero tensor is ones") {
    Tape t;
    const Tensor x = Tensor::zeros({3});
    const Tensor y = t.exp(x);
    for (std::size_t i = 0; i < 3; ++i) CHECK(y.at(i) == 1.0);
}

TEST_CASE("sum of squares, pythagorean values") {
    Tape t;
    const Tensor x = Tensor::from_vector({2}, {3, 4});
    CHECK(t.sum(t.square(x)).item() == 25.0);
}

TEST_CASE("backward of sum(x^2) is 2x") {
    Tape t;
    Tensor x = Tensor::from_vector({3}, {1, 2, 3});
    x.track_grad();
    const Tensor root = t.sum(t.square(x));
    t.backward(root);
    CHECK(x.grad()[0] == doctest::Approx(2.0));
    CHECK(x.grad()[1] == doctest::Approx(4.0));
    CHECK(x.grad()[2] == doctest::Approx(6.0));
}

TEST_CASE("sigmoid gradient at zero is 1/4") {
    Tape t;
    Tensor w = Tensor::zeros({1});
    w.track_grad();
    const Tensor root = t.sum(t.sigmoid(w));
    t.backward(root);
    CHECK(w.grad()[0] == doctest::Approx(0.25));
}

TEST_CASE("abs gradient: -1 left of the kink, 0 at the kink") {
    {
        Tensor x = Tensor::from_vector({1}, {-2.0});
        const double worst = tu::gradient_check(
            {x}, [](Tape& t, std::vector<Tensor>& leaves) { return t.sum(t.abs(leaves[0])); });
        CHECK(worst < 1e-4);
        Tape t;
        Tensor y = Tensor::from_vector({1}, {-2.0});
        y.track_grad();
        t.backward(t.sum(t.abs(y)));
        CHECK(y.grad()[0] == -1.0);
    }
    {
        Tape t;
        Tensor y = Tensor::from_vector({1}, {0.0});
        y.track_grad();
        t.backward(t.sum(t.abs(y)));
        CHECK(y.grad()[0] == 0.0);  // subgradient pinned to 0
    }
}

TEST_CASE("every differentiable op matches central finite differences") {
    Rng rng(42);
    auto scalarize = [](Tape& t, const Tensor& v) {
        // mean of tanh keeps the root scale O(1) regardless of op output range
        return t.mean(v);
    };

    for (int rep = 0; rep < 12; ++rep) {
        const std::size_t n = 1 + rng.next_u64() % 4;
        const std::size_t m = 1 + rng.next_u64() % 4;

        auto unary_case = [&](const char* name, auto op, double lo, double hi) {
            Tensor x = tu::random_tensor({n, m}, rng, lo, hi);
            const double worst = tu::gradient_check(
                {x}, [&](Tape& t, std::vector<Tensor>& l) { return scalarize(t, op(t, l[0])); });
            INFO("op ", name, " rep ", rep);
            CHECK(worst < 1e-4);
        };
        unary_case("neg", [](Tape& t, const Tensor& x) { return t.neg(x); }, -2, 2);
        unary_case("exp", [](Tape& t, const Tensor& x) { return t.exp(x); }, -2, 2);
        unary_case("log", [](Tape& t, const Tensor& x) { return t.log(x); }, 0.1, 2);
        unary_case("square", [](Tape& t, const Tensor& x) { return t.square(x); }, -2, 2);
        unary_case("sqrt", [](Tape& t, const Tensor& x) { return t.sqrt(x); }, 0.1, 2);
        unary_case("tanh", [](Tape& t, const Tensor& x) { return t.tanh(x); }, -2, 2);
        unary_case("sigmoid", [](Tape& t, const Tensor& x) { return t.sigmoid(x); }, -2, 2);
        unary_case("softplus", [](Tape& t, const Tensor& x) { return t.softplus(x); }, -2, 2);
        unary_case("scale", [](Tape& t, const Tensor& x) { return t.scale(x, -1.7); }, -2, 2);
        unary_case("add_scalar", [](Tape& t, const Tensor& x) { return t.add_scalar(x, 0.3); }, -2, 2);
        unary_case("reshape", [n, m](Tape& t, const Tensor& x) { return t.reshape(x, {m * n}); },
                   -2, 2);
        unary_case("sum_cols", [](Tape& t, const Tensor& x) { return t.sum(t.square(t.sum_cols(x))); },
                   -2, 2);
        unary_case("logsumexp_rows",
                   [](Tape& t, const Tensor& x) { return t.sum(t.logsumexp_rows(x)); }, -2, 2);
        // kinked ops: keep inputs away from the kink (|x| > 1e-3 >> h)
        {
            Tensor x = tu::random_tensor({n, m}, rng, 0.05, 2.0);
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (rng.uniform() < 0.5) x.data_mut()[i] *= -1.0;
            }
            for (auto op : {+[](Tape& t, const Tensor& v) { return t.abs(v); },
                            +[](Tape& t, const Tensor& v) { return t.relu(v); }}) {
                const double worst = tu::gradient_check(
                    {x}, [&](Tape& t, std::vector<Tensor>& l) { return scalarize(t, op(t, l[0])); });
                CHECK(worst < 1e-4);
            }
        }
        // clamp away from its boundaries
        {
            Tensor x = tu::random_tensor({n, m}, rng, -2.0, 2.0);
            const double worst = tu::gradient_check({x}, [&](Tape& t, std::vector<Tensor>& l) {
                return scalarize(t, t.clamp(l[0], -2.5, 2.5));
            });
            CHECK(worst < 1e-4);
        }

        auto binary_case = [&](const char* name, auto op, Tensor a, Tensor b) {
            const double worst = tu::gradient_check({a, b}, [&](Tape& t, std::vector<Tensor>& l) {
                return scalarize(t, op(t, l[0], l[1]));
            });
            INFO("op ", name, " rep ", rep);
            CHECK(worst < 1e-4);
        };
        binary_case("add", [](Tape& t, const Tensor& a, const Tensor& b) { return t.add(a, b); },
                    tu::random_tensor({n, m}, rng), tu::random_tensor({n, m}, rng));
        binary_case("sub", [](Tape& t, const Tensor& a, const Tensor& b) { return t.sub(a, b); },
                    tu::random_tensor({n, m}, rng), tu::random_tensor({n, m}, rng));
        binary_case("mul", [](Tape& t, const Tensor& a, const Tensor& b) { return t.mul(a, b); },
                    tu::random_tensor({n, m}, rng), tu::random_tensor({n, m}, rng));
        {
            Tensor denom = tu::random_tensor({n, m}, rng, 0.3, 2.0);
            for (std::size_t i = 0; i < denom.size(); ++i) {
                if (rng.uniform() < 0.5) denom.data_mut()[i] *= -1.0;
            }
            binary_case("div", [](Tape& t, const Tensor& a, const Tensor& b) { return t.div(a, b); },
                        tu::random_tensor({n, m}, rng), denom);
        }
        binary_case("matmul",
                    [](Tape& t, const Tensor& a, const Tensor& b) { return t.matmul(a, b); },
                    tu::random_tensor({n, m}, rng), tu::random_tensor({m, 3}, rng));
        binary_case("matmul_nt",
                    [](Tape& t, const Tensor& a, const Tensor& b) { return t.matmul_nt(a, b); },
                    tu::random_tensor({n, m}, rng), tu::random_tensor({3, m}, rng));
        binary_case("concat",
                    [](Tape& t, const Tensor& a, const Tensor& b) { return t.concat_cols(a, b); },
                    tu::random_tensor({n, m}, rng), tu::random_tensor({n, 2}, rng));
        {
            Tensor a = tu::random_tensor({n, m}, rng);
            const std::size_t len = 1 + rng.next_u64() % m;
            const std::size_t start = rng.next_u64() % (m - len + 1);
            const double worst = tu::gradient_check({a}, [&](Tape& t, std::vector<Tensor>& l) {
                return scalarize(t, t.slice_cols(l[0], start, len));
            });
            CHECK(worst < 1e-4);
        }
        {
            Tensor bias = tu::random_tensor({m}, rng);
            const double worst = tu::gradient_check({bias}, [&](Tape& t, std::vector<Tensor>& l) {
                return scalarize(t, t.broadcast(l[0], {n, m}));
            });
            CHECK(worst < 1e-4);
        }
    }
}

TEST_CASE("backward of a sum of roots equals the sum of separate backward passes") {
    Rng rng(7);
    Tensor x = tu::random_tensor({3, 3}, rng);
    x.track_grad();
    Tape t;
    const Tensor shared = t.tanh(x);
    const Tensor r1 = t.sum(t.square(shared));
    const Tensor r2 = t.mean(t.exp(shared));

    t.backward(r1);
    std::vector<double> g1(x.grad().begin(), x.grad().end());
    x.zero_grad();
    t.backward(r2);
    std::vector<double> g2(x.grad().begin(), x.grad().end());
    x.zero_grad();
    t.backward(t.add(r1, r2));
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(x.grad()[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-12));
    }

    // Accumulation form of the same linearity: two backward passes add up.
    x.zero_grad();
    t.backward(r1);
    t.backward(r2);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(x.grad()[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-12));
    }
}

TEST_CASE("identical seeds give bit-identical gradients") {
    auto run = [] {
        Rng rng(123);
        Tensor x = tu::random_tensor({4, 4}, rng);
        Tensor w = tu::random_tensor({4, 4}, rng);
        x.track_grad();
        w.track_grad();
        Tape t;
        const Tensor root = t.mean(t.tanh(t.matmul(x, w)));
        t.backward(root);
        std::vector<double> out(x.grad().begin(), x.grad().end());
        out.insert(out.end(), w.grad().begin(), w.grad().end());
        out.push_back(root.item());
        return out;
    };
    const auto a = run();
    const auto b = run();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("leaves not reachable from the root keep zero gradients") {
    Tape t;
    Tensor used = Tensor::from_vector({2}, {1, 2});
    Tensor unused = Tensor::from_vector({2}, {3, 4});
    used.track_grad();
    unused.track_grad();
    t.sum(unused);  // recorded but not part of the root's history
    t.backward(t.sum(t.square(used)));
    CHECK(unused.grad()[0] == 0.0);
    CHECK(unused.grad()[1] == 0.0);
    CHECK(used.grad()[0] == 2.0);
}

TEST_CASE("shape errors") {
    Tape t;
    const Tensor a = Tensor::zeros({2, 3});
    const Tensor b = Tensor::zeros({3, 2});
    CHECK_THROWS_AS(t.add(a, b), ShapeError);
    CHECK_THROWS_AS(t.matmul(a, a), ShapeError);
    CHECK_THROWS_AS(t.slice_cols(a, 2, 2), ShapeError);
    CHECK_THROWS_AS(Tensor::from_vector({2, 2}, {1, 2, 3}), ShapeError);
    CHECK_THROWS_AS(Tensor::zeros({0, 2}), ShapeError);
}

TEST_CASE("non-finite values are rejected at op boundaries, naming the op") {
    Tape t;
    Tensor x = Tensor::from_vector({2}, {1, 2});
    x.data_mut()[0] = std::nan("");
    try {
        t.exp(x);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("exp") != std::string::npos);
    }
    // overflow is caught on the producing op's output
    const Tensor big = Tensor::from_vector({1}, {800.0});
    try {
        t.exp(big);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("exp") != std::string::npos);
    }
}

TEST_CASE("backward contract errors") {
    Tape t;
    Tensor x = Tensor::from_vector({2}, {1, 2});
    x.track_grad();
    const Tensor y = t.square(x);
    CHECK_THROWS_AS(t.backward(y), ContractError);  // non-scalar root
    Tape other;
    const Tensor r = other.sum(y);
    CHECK_THROWS_AS(t.backward(r), ContractError);  // produced on another tape
}

TEST_CASE("log and div clamp instead of failing, and count the events") {
    Tape t;
    const Tensor x = Tensor::from_vector({3}, {-1.0, 0.0, 1.0});
    const Tensor y = t.log(x);
    CHECK(t.clamp_count() == 2);
    CHECK(y.at(0) == doctest::Approx(std::log(1e-12)));
    CHECK(y.at(2) == 0.0);

    const Tensor num = Tensor::from_vector({2}, {1.0, 1.0});
    const Tensor den = Tensor::from_vector({2}, {0.0, 2.0});
    const Tensor q = t.div(num, den);
    CHECK(t.clamp_count() == 3);
    CHECK(q.at(0) == doctest::Approx(1e12));
    CHECK(q.at(1) == 0.5);
}

TEST_CASE("scalar rank-0 outputs behave like scalars") {
    Tape t;
    const Tensor x = Tensor::from_vector({2, 2}, {1, 2, 3, 4});
    const Tensor s = t.mean(x);
    CHECK(s.size() == 1);
    CHECK(s.item() == 2.5);
    const Tensor b = t.broadcast(s, {2, 2});
    CHECK(b.at(1, 1) == 2.5);
}

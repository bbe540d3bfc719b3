#include "inrshape/adam.hpp"
#include "inrshape/autodiff.hpp"
#include "inrshape/errors.hpp"
#include "inrshape/mlp.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace inrshape;

namespace {

Tensor2 random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Tensor2 t(r, c);
    for (double& v : t.values()) v = dist(rng);
    return t;
}

std::vector<std::vector<double>> to_rows(const Tensor2& t) {
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < t.rows(); ++r) rows.emplace_back(t.row_span(r).begin(), t.row_span(r).end());
    return rows;
}

}  // namespace

TEST_CASE("forward_mlp with zero parameters returns zeros") {
    Mlp mlp = Mlp::kaiming_uniform(4, 5, 2, 1, 3);
    for (auto& l : mlp.layers) {
        l.weight.fill(0.0);
        l.bias.fill(0.0);
    }
    Tape tape;
    const auto in = tape.constant(Tensor2{{1, -2, 3, 4}, {0.5, 0.1, 0.2, 9}});
    const auto out = forward_mlp(tape, mlp, in).output;
    CHECK(tape.value(out) == Tensor2{{0.0}, {0.0}});
}

TEST_CASE("single identity layer passes input through") {
    Mlp mlp;
    mlp.layers.push_back({Tensor2{{1, 0}, {0, 1}}, Tensor2{{0, 0}}});
    Tape tape;
    const auto out = forward_mlp(tape, mlp, tape.constant(Tensor2{{1, 2}})).output;
    CHECK(tape.value(out) == Tensor2{{1, 2}});
    CHECK(mlp.evaluate(Tensor2{{1, 2}}) == Tensor2{{1, 2}});
}

TEST_CASE("taped forward matches scalar re-implementation on a 2-3-1 net") {
    std::mt19937_64 rng(11);
    Mlp mlp = Mlp::kaiming_uniform(2, 3, 1, 1, 5);
    const Tensor2 x = random_tensor(6, 2, rng);
    Tape tape;
    const auto out = forward_mlp(tape, mlp, tape.constant(x)).output;
    const auto expected = oracle::mlp_forward(mlp, to_rows(x));
    for (std::size_t r = 0; r < x.rows(); ++r) CHECK(tape.value(out)(r, 0) == doctest::Approx(expected[r][0]).epsilon(1e-12));
}

TEST_CASE("frozen evaluate is bit-identical to the taped forward and repeatable") {
    std::mt19937_64 rng(2);
    Mlp mlp = Mlp::kaiming_uniform(7, 16, 3, 1, 9);
    const Tensor2 x = random_tensor(33, 7, rng);
    Tape tape;
    const auto out = forward_mlp(tape, mlp, tape.constant(x)).output;
    CHECK(mlp.evaluate(x) == tape.value(out));
    CHECK(mlp.evaluate(x) == mlp.evaluate(x));
}

TEST_CASE("forward rejects a width mismatch") {
    Mlp mlp = Mlp::kaiming_uniform(3, 4, 1, 1, 1);
    Tape tape;
    const auto in = tape.constant(Tensor2(2, 5));
    CHECK_THROWS_AS(forward_mlp(tape, mlp, in), Error);
    CHECK_THROWS_AS(mlp.evaluate(Tensor2(2, 2)), Error);
}

TEST_CASE("gradient of w*w at 3 is 6") {
    Tape tape;
    const auto w = tape.leaf(Tensor2::scalar(3.0));
    const auto f = tape.mul(w, w);
    const auto grads = tape.backward(f);
    CHECK(grads.at(w)[0] == 6.0);
}

TEST_CASE("constant output gives zero gradients") {
    Tape tape;
    const auto w = tape.leaf(Tensor2{{1.0, 2.0}});
    const auto c = tape.constant(Tensor2{{5.0, 5.0}});
    const auto out = tape.sum_squares(c);
    const auto grads = tape.backward(out);
    CHECK(grads.at(w) == Tensor2{{0.0, 0.0}});
}

TEST_CASE("backward before forward is a state error") {
    Tape tape;
    try {
        tape.backward(VarId{0});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::State);
    }
}

TEST_CASE("backward seed must match the output shape") {
    Tape tape;
    const auto w = tape.leaf(Tensor2{{1.0, 2.0}});
    CHECK_THROWS_AS(tape.backward(w, Tensor2::scalar(1.0)), Error);
}

TEST_CASE("ReLU subgradient at exactly zero is zero") {
    Tape tape;
    const auto x = tape.leaf(Tensor2{{0.0, 1.0, -1.0}});
    const auto y = tape.relu(x);
    const auto grads = tape.backward(y, Tensor2{{1.0, 1.0, 1.0}});
    CHECK(grads.at(x) == Tensor2{{0.0, 1.0, 0.0}});
}

TEST_CASE("two-layer ReLU net gradients match central differences") {
    std::mt19937_64 rng(42);
    int checked = 0;
    for (int trial = 0; trial < 10; ++trial) {
        Mlp mlp = Mlp::kaiming_uniform(3, 5, 1, 1, 100 + std::uint64_t(trial));
        Tensor2 x = random_tensor(4, 3, rng);
        if (oracle::min_kink_distance(mlp, to_rows(x)) < 1e-4) continue;
        const Tensor2 probe = random_tensor(4, 1, rng);

        Tape tape;
        const auto in = tape.leaf(x);
        const auto trace = forward_mlp(tape, mlp, in);
        const auto loss = tape.sum_squares(tape.mul(trace.output, tape.constant(probe)));
        const auto grads = tape.backward(loss);

        auto objective = [&] {
            const auto y = oracle::mlp_forward(mlp, to_rows(x));
            double s = 0;
            for (std::size_t r = 0; r < y.size(); ++r) s += (y[r][0] * probe(r, 0)) * (y[r][0] * probe(r, 0));
            return s;
        };
        for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
            for (std::size_t i = 0; i < mlp.layers[l].weight.size(); ++i) {
                const double fd = oracle::central_difference(objective, &mlp.layers[l].weight[i], 1e-5);
                CHECK(oracle::relative_error(grads.at(trace.weights[l])[i], fd) < 1e-5);
            }
            for (std::size_t i = 0; i < mlp.layers[l].bias.size(); ++i) {
                const double fd = oracle::central_difference(objective, &mlp.layers[l].bias[i], 1e-5);
                CHECK(oracle::relative_error(grads.at(trace.biases[l])[i], fd) < 1e-5);
            }
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double fd = oracle::central_difference(objective, &x[i], 1e-5);
            CHECK(oracle::relative_error(grads.at(in)[i], fd) < 1e-5);
        }
        ++checked;
    }
    CHECK(checked >= 5);
}

TEST_CASE("broadcast and concat route gradients back to a latent row") {
    Tape tape;
    const auto pts = tape.constant(Tensor2{{1, 2}, {3, 4}, {5, 6}});
    const auto code = tape.leaf(Tensor2{{0.5, -1.0}});
    const auto in = tape.concat_cols(pts, tape.broadcast_rows(code, 3));
    const auto loss = tape.sum_squares(in);
    const auto grads = tape.backward(loss);
    // d/dz sum_rows z^2 = 2 * rows * z
    CHECK(grads.at(code) == Tensor2{{3.0, -6.0}});
}

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
    Tensor2 p{{1.0, -2.0, 3.0}};
    auto state = AdamState::for_shapes(std::span(&p, 1), AdamConfig{0.1});
    Tensor2* params[] = {&p};
    const Tensor2 g(1, 3);
    for (int i = 0; i < 5; ++i) adam_step(state, params, std::span(&g, 1));
    CHECK(p == Tensor2{{1.0, -2.0, 3.0}});
    CHECK(state.step == 5);
}

TEST_CASE("adam first step on a scalar follows the bias-corrected formula") {
    Tensor2 p = Tensor2::scalar(1.0);
    auto state = AdamState::for_shapes(std::span(&p, 1), AdamConfig{0.1, 0.9, 0.999, 1e-8});
    Tensor2* params[] = {&p};
    const Tensor2 g = Tensor2::scalar(1.0);
    adam_step(state, params, std::span(&g, 1));
    // m_hat = 0.1/0.1 = 1, v_hat = 0.001/0.001 = 1
    const double expected = 1.0 - 0.1 * 1.0 / (1.0 + 1e-8);
    CHECK(p[0] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-7));
}

TEST_CASE("adam trajectories are identical for identical inputs") {
    Tensor2 a{{0.3}}, b{{0.3}};
    auto sa = AdamState::for_shapes(std::span(&a, 1), {});
    auto sb = AdamState::for_shapes(std::span(&b, 1), {});
    Tensor2* pa[] = {&a};
    Tensor2* pb[] = {&b};
    for (int i = 0; i < 50; ++i) {
        const Tensor2 g = Tensor2::scalar(std::sin(i * 0.7));
        adam_step(sa, pa, std::span(&g, 1));
        adam_step(sb, pb, std::span(&g, 1));
        REQUIRE(a == b);
    }
}

TEST_CASE("adam rejects mismatched shapes") {
    Tensor2 p(2, 2);
    auto state = AdamState::for_shapes(std::span(&p, 1), {});
    Tensor2* params[] = {&p};
    const Tensor2 g(1, 2);
    CHECK_THROWS_AS(adam_step(state, params, std::span(&g, 1)), Error);
}

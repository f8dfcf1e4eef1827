#include <doctest.h>

#include <cmath>
#include <semproto/mlp.hpp>
#include <semproto/npm.hpp>

using namespace semproto;

namespace {

/// Independent forward pass over the same stored weights, written as plain
/// loops against the layer lists; the oracle for MlpSegment::forward.
std::vector<double> reference_forward(const MlpSegment& seg, std::vector<double> x) {
    for (std::size_t l = 0; l + 1 < seg.layer_sizes.size(); ++l) {
        const int in = seg.layer_sizes[l];
        const int out = seg.layer_sizes[l + 1];
        std::vector<double> y(out, 0.0);
        for (int o = 0; o < out; ++o) {
            y[o] = seg.biases[l][o];
            for (int i = 0; i < in; ++i) y[o] += seg.weights[l][o * in + i] * x[i];
        }
        if (l + 2 < seg.layer_sizes.size() || seg.rectified_output)
            for (double& v : y) v = std::max(0.0, v);
        x = std::move(y);
    }
    return x;
}

double loss_of(const MlpSegment& seg, const std::vector<double>& input, int target_index,
               double target_value, double delta) {
    const std::vector<double> out = seg.forward(input);
    return huber(out[target_index] - target_value, delta);
}

}  // namespace

TEST_CASE("huber: frozen values") {
    CHECK(huber(0.0, 1.0) == 0.0);
    CHECK(huber(2.0, 1.0) == doctest::Approx(1.5));  // delta*(|x| - delta/2)
    CHECK(huber(-2.0, 1.0) == doctest::Approx(1.5));
    CHECK(huber(0.5, 1.0) == doctest::Approx(0.125));
    CHECK(huber_grad(0.5, 1.0) == doctest::Approx(0.5));
    CHECK(huber_grad(3.0, 1.0) == doctest::Approx(1.0));
    CHECK(huber_grad(-3.0, 1.0) == doctest::Approx(-1.0));
}

TEST_CASE("forward: zero weights give a zero vector") {
    Rng rng(1);
    MlpSegment seg = MlpSegment::make({6, 16, 16, 8}, true, rng);
    for (auto& w : seg.weights) std::fill(w.begin(), w.end(), 0.0);
    const std::vector<double> out = seg.forward(one_hot(3, 6));
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("forward: matches the independent loop oracle") {
    Rng rng(21);
    for (bool rectified : {true, false}) {
        MlpSegment seg = MlpSegment::make({5, 7, 4}, rectified, rng);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<double> x(5);
            for (double& v : x) v = rng.next_gaussian();
            const std::vector<double> got = seg.forward(x);
            const std::vector<double> want = reference_forward(seg, x);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i)
                CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("forward: deterministic across calls") {
    Rng rng(5);
    MlpSegment seg = MlpSegment::make({6, 16, 16, 8}, true, rng);
    const std::vector<double> a = seg.forward(one_hot(2, 6));
    const std::vector<double> b = seg.forward(one_hot(2, 6));
    CHECK(a == b);
}

TEST_CASE("backward: analytic gradient matches central finite differences") {
    Rng rng(33);
    MlpSegment seg = MlpSegment::make({4, 6, 5, 3}, false, rng);
    std::vector<double> input(4);
    for (double& v : input) v = rng.next_gaussian();
    const int target_index = 1;
    const double target_value = 0.7;
    const double delta = 1.0;

    MlpSegment::Cache cache;
    const std::vector<double> out = seg.forward_cached(input, cache);
    std::vector<double> grad_out(3, 0.0);
    grad_out[target_index] = huber_grad(out[target_index] - target_value, delta);
    MlpGrads grads = MlpGrads::zeros_like(seg);
    mlp_backward(seg, cache, grad_out, grads);

    const double h = 1e-6;
    int checked = 0;
    for (std::size_t l = 0; l < seg.weights.size(); ++l) {
        for (std::size_t k = 0; k < seg.weights[l].size(); k += 3) {
            MlpSegment plus = seg, minus = seg;
            plus.weights[l][k] += h;
            minus.weights[l][k] -= h;
            const double fd = (loss_of(plus, input, target_index, target_value, delta) -
                               loss_of(minus, input, target_index, target_value, delta)) /
                              (2 * h);
            const double an = grads.weights[l][k];
            CHECK(std::abs(an - fd) <= 1e-4 * std::max({std::abs(an), std::abs(fd), 1e-6}));
            if (std::abs(an) > 1e-9) ++checked;
        }
        for (std::size_t k = 0; k < seg.biases[l].size(); k += 2) {
            MlpSegment plus = seg, minus = seg;
            plus.biases[l][k] += h;
            minus.biases[l][k] -= h;
            const double fd = (loss_of(plus, input, target_index, target_value, delta) -
                               loss_of(minus, input, target_index, target_value, delta)) /
                              (2 * h);
            const double an = grads.biases[l][k];
            CHECK(std::abs(an - fd) <= 1e-4 * std::max({std::abs(an), std::abs(fd), 1e-6}));
            if (std::abs(an) > 1e-9) ++checked;
        }
    }
    CHECK(checked > 5);  // ReLU dead units zero out many entries; enough live ones remain
}

TEST_CASE("backward: input gradient matches finite differences") {
    Rng rng(44);
    MlpSegment seg = MlpSegment::make({3, 8, 2}, true, rng);
    std::vector<double> input{0.9, -0.2, 0.4};

    MlpSegment::Cache cache;
    const std::vector<double> out = seg.forward_cached(input, cache);
    std::vector<double> grad_out(2, 0.0);
    grad_out[0] = out[0] - 1.3;
    grad_out[1] = out[1] + 0.2;
    MlpGrads grads = MlpGrads::zeros_like(seg);
    const std::vector<double> grad_in = mlp_backward(seg, cache, grad_out, grads);

    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
        const auto eval = [&](double shift) {
            std::vector<double> x = input;
            x[i] += shift;
            const std::vector<double> o = seg.forward(x);
            return 0.5 * (o[0] - 1.3) * (o[0] - 1.3) + 0.5 * (o[1] + 0.2) * (o[1] + 0.2);
        };
        const double fd = (eval(h) - eval(-h)) / (2 * h);
        CHECK(std::abs(grad_in[i] - fd) <=
              1e-4 * std::max({std::abs(grad_in[i]), std::abs(fd), 1e-6}));
    }
}

TEST_CASE("adam: fresh state with zero gradient is a no-op") {
    Rng rng(9);
    MlpSegment seg = MlpSegment::make({4, 5, 2}, true, rng);
    const MlpSegment before = seg;
    MlpGrads zero = MlpGrads::zeros_like(seg);
    AdamState state = AdamState::zeros_like(seg);
    AdamParams params;
    adam_step(seg, zero, state, params);
    CHECK(seg.weights == before.weights);
    CHECK(seg.biases == before.biases);
}

TEST_CASE("adam: nonzero gradient moves parameters opposite the gradient") {
    Rng rng(10);
    MlpSegment seg = MlpSegment::make({2, 2}, false, rng);
    MlpGrads grads = MlpGrads::zeros_like(seg);
    grads.weights[0][0] = 1.0;
    AdamState state = AdamState::zeros_like(seg);
    AdamParams params;
    params.learning_rate = 0.1;
    const double before = seg.weights[0][0];
    adam_step(seg, grads, state, params);
    CHECK(seg.weights[0][0] < before);
}

TEST_CASE("greedy action: argmax with S<A<D tie-break is affine invariant") {
    CHECK(argmax_action({1.0, 1.0, 1.0}) == UeAction::Silence);
    CHECK(argmax_action({0.0, 5.0, -1.0}) == UeAction::Access);
    CHECK(argmax_action({0.0, 0.0, 0.1}) == UeAction::Discard);

    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        std::array<double, 3> q;
        for (double& v : q) v = rng.next_gaussian();
        const double scale = 0.01 + 3.0 * rng.next_double();
        const double shift = rng.next_gaussian();
        std::array<double, 3> scaled;
        for (int a = 0; a < 3; ++a) scaled[a] = scale * q[a] + shift;
        CHECK(argmax_action(q) == argmax_action(scaled));
    }
}

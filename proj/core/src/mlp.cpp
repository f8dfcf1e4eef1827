#include "semproto/mlp.hpp"

#include <cmath>
#include <cstdint>

#include "semproto/errors.hpp"

namespace semproto {

MlpSegment MlpSegment::make(std::vector<int> sizes, bool rectified_output, Rng& rng) {
    if (sizes.size() < 2) throw ConfigError("MLP needs at least input and output sizes");
    for (int s : sizes)
        if (s < 1) throw ConfigError("MLP layer sizes must be positive");

    MlpSegment seg;
    seg.layer_sizes = std::move(sizes);
    seg.rectified_output = rectified_output;
    for (std::size_t l = 0; l + 1 < seg.layer_sizes.size(); ++l) {
        const int in = seg.layer_sizes[l];
        const int out = seg.layer_sizes[l + 1];
        std::vector<double> w(static_cast<std::size_t>(in) * out);
        const double scale = std::sqrt(2.0 / in);  // He init for rectifiers
        for (double& x : w) x = scale * rng.next_gaussian();
        seg.weights.push_back(std::move(w));
        seg.biases.emplace_back(out, 0.0);
    }
    return seg;
}

std::size_t MlpSegment::param_count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.size();
    for (const auto& b : biases) n += b.size();
    return n;
}

std::vector<double> MlpSegment::forward(std::span<const double> input) const {
    Cache cache;
    return forward_cached(input, cache);
}

std::vector<double> MlpSegment::forward_cached(std::span<const double> input,
                                               Cache& cache) const {
    if (static_cast<int>(input.size()) != input_size())
        throw Error("MLP input width mismatch: got " + std::to_string(input.size()) +
                    ", expected " + std::to_string(input_size()));

    cache.activations.clear();
    cache.activations.emplace_back(input.begin(), input.end());
    std::vector<double> current(input.begin(), input.end());
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const int in = layer_sizes[l];
        const int out = layer_sizes[l + 1];
        std::vector<double> next(out);
        const double* w = weights[l].data();
        for (int o = 0; o < out; ++o) {
            double acc = biases[l][o];
            const double* row = w + static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += row[i] * current[i];
            next[o] = acc;
        }
        const bool rectify = (l + 1 < weights.size()) || rectified_output;
        if (rectify) {
            for (double& x : next) x = x > 0.0 ? x : 0.0;
        }
        cache.activations.push_back(next);
        current = std::move(next);
    }
    return current;
}

MlpGrads MlpGrads::zeros_like(const MlpSegment& seg) {
    MlpGrads g;
    for (const auto& w : seg.weights) g.weights.emplace_back(w.size(), 0.0);
    for (const auto& b : seg.biases) g.biases.emplace_back(b.size(), 0.0);
    return g;
}

void MlpGrads::zero() {
    for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
}

std::vector<double> mlp_backward(const MlpSegment& seg, const MlpSegment::Cache& cache,
                                 std::span<const double> grad_output, MlpGrads& grads) {
    std::vector<double> delta(grad_output.begin(), grad_output.end());
    for (std::size_t l = seg.weights.size(); l-- > 0;) {
        const int in = seg.layer_sizes[l];
        const int out = seg.layer_sizes[l + 1];
        const std::vector<double>& post = cache.activations[l + 1];
        const std::vector<double>& prev = cache.activations[l];

        const bool rectified = (l + 1 < seg.weights.size()) || seg.rectified_output;
        if (rectified) {
            for (int o = 0; o < out; ++o)
                if (post[o] <= 0.0) delta[o] = 0.0;
        }

        double* gw = grads.weights[l].data();
        const double* w = seg.weights[l].data();
        std::vector<double> next_delta(in, 0.0);
        for (int o = 0; o < out; ++o) {
            grads.biases[l][o] += delta[o];
            const std::size_t row = static_cast<std::size_t>(o) * in;
            for (int i = 0; i < in; ++i) {
                gw[row + i] += delta[o] * prev[i];
                next_delta[i] += w[row + i] * delta[o];
            }
        }
        delta = std::move(next_delta);
    }
    return delta;
}

AdamState AdamState::zeros_like(const MlpSegment& seg) {
    AdamState s;
    for (const auto& w : seg.weights) {
        s.m_w.emplace_back(w.size(), 0.0);
        s.v_w.emplace_back(w.size(), 0.0);
    }
    for (const auto& b : seg.biases) {
        s.m_b.emplace_back(b.size(), 0.0);
        s.v_b.emplace_back(b.size(), 0.0);
    }
    return s;
}

namespace {

void adam_update(std::vector<double>& params, const std::vector<double>& grads,
                 std::vector<double>& m, std::vector<double>& v,
                 const AdamParams& p, double bias1, double bias2) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = p.beta1 * m[i] + (1.0 - p.beta1) * grads[i];
        v[i] = p.beta2 * v[i] + (1.0 - p.beta2) * grads[i] * grads[i];
        const double m_hat = m[i] / bias1;
        const double v_hat = v[i] / bias2;
        params[i] -= p.learning_rate * m_hat / (std::sqrt(v_hat) + p.eps);
    }
}

}  // namespace

void adam_step(MlpSegment& seg, const MlpGrads& grads, AdamState& state,
               const AdamParams& params) {
    state.step += 1;
    const double bias1 = 1.0 - std::pow(params.beta1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(params.beta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < seg.weights.size(); ++l) {
        adam_update(seg.weights[l], grads.weights[l], state.m_w[l], state.v_w[l],
                    params, bias1, bias2);
        adam_update(seg.biases[l], grads.biases[l], state.m_b[l], state.v_b[l],
                    params, bias1, bias2);
    }
}

double huber(double residual, double delta) {
    const double a = std::fabs(residual);
    if (a <= delta) return 0.5 * residual * residual;
    return delta * (a - 0.5 * delta);
}

double huber_grad(double residual, double delta) {
    if (residual > delta) return delta;
    if (residual < -delta) return -delta;
    return residual;
}

}  // namespace semproto

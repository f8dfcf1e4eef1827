#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "semproto/rng.hpp"

namespace semproto {

/// Fully connected network with rectifier hidden layers. CM segments also
/// rectify their output layer (activation patterns need non-negative
/// outputs); Q-value heads keep a linear output.
struct MlpSegment {
    std::vector<int> layer_sizes;  // input, hidden..., output
    bool rectified_output = true;
    // weights[l] is row-major (out x in) for layer l; biases[l] has out entries.
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static MlpSegment make(std::vector<int> sizes, bool rectified_output, Rng& rng);

    int input_size() const { return layer_sizes.front(); }
    int output_size() const { return layer_sizes.back(); }
    std::size_t num_layers() const { return weights.size(); }
    std::size_t param_count() const;

    std::vector<double> forward(std::span<const double> input) const;

    /// Post-activation values per layer, input first; what backward() needs.
    struct Cache {
        std::vector<std::vector<double>> activations;
    };
    std::vector<double> forward_cached(std::span<const double> input, Cache& cache) const;
};

struct MlpGrads {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;

    static MlpGrads zeros_like(const MlpSegment& seg);
    void zero();
};

/// Backprop for one sample; accumulates into `grads`, returns dL/d(input).
std::vector<double> mlp_backward(const MlpSegment& seg, const MlpSegment::Cache& cache,
                                 std::span<const double> grad_output, MlpGrads& grads);

struct AdamParams {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;
};

struct AdamState {
    std::vector<std::vector<double>> m_w, v_w, m_b, v_b;
    std::int64_t step = 0;

    static AdamState zeros_like(const MlpSegment& seg);
};

void adam_step(MlpSegment& seg, const MlpGrads& grads, AdamState& state,
               const AdamParams& params);

/// Huber loss and its derivative in the residual.
double huber(double residual, double delta);
double huber_grad(double residual, double delta);

}  // namespace semproto

#pragma once

#include <cstdint>
#include <vector>

#include "driftlab/matrix.hpp"

namespace driftlab {

// One dense layer: weights are fan_in x fan_out, bias has fan_out entries.
struct LayerParams {
    Matrix weights;
    std::vector<double> bias;
};

// Weights of the shared feed-forward model. Hidden layers use a rectifier,
// the output layer is linear (logits).
struct ModelParams {
    std::vector<int> layer_dims;
    std::vector<LayerParams> layers;

    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    size_t parameter_count() const;
    bool all_finite() const;
    bool same_shape(const ModelParams& other) const;
};

// Partial derivatives, shape-identical to the ModelParams they came from.
struct Gradients {
    std::vector<LayerParams> layers;
};

// A training batch: one row per sample, features in [0,1], integer class labels.
struct Batch {
    Matrix inputs;
    std::vector<int> labels;
};

// Zero-mean uniform init scaled by 1/sqrt(fan_in); biases zero.
ModelParams init_params(const std::vector<int>& layer_dims, uint64_t seed);

// Logits for a batch of inputs (n x input_dim -> n x output_dim).
Matrix forward(const ModelParams& params, const Matrix& inputs);

struct LossGrad {
    double loss = 0.0;
    Gradients grads;
};

// Mean softmax cross-entropy over the batch and its exact analytic gradient.
// Softmax is computed with max-subtraction; the evaluation order is fixed so
// results are bit-reproducible.
LossGrad loss_and_grad(const ModelParams& params, const Batch& batch);

// Plain SGD: p' = p - lr * g. Inputs are untouched.
ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double lr);

// Argmax class per row; ties resolve to the lowest index.
std::vector<int> predict_classes(const ModelParams& params, const Matrix& inputs);

}  // namespace driftlab

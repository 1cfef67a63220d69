#include "driftlab/nn.hpp"

#include <cmath>
#include <string>

#include "driftlab/errors.hpp"
#include "driftlab/rng.hpp"

namespace driftlab {

namespace {

// out = A (n x k) * B (k x m), accumulated row by row so the inner loop
// walks contiguous memory.
Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.cols, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (int k = 0; k < a.cols; ++k) {
            double av = arow[k];
            if (av == 0.0) continue;
            const double* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

// out = A^T (k x n)^T... i.e. (n x k)^T * B (n x m) -> k x m.
Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    Matrix out(a.cols, b.cols, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        const double* brow = b.row(i);
        for (int k = 0; k < a.cols; ++k) {
            double av = arow[k];
            if (av == 0.0) continue;
            double* orow = out.row(k);
            for (int j = 0; j < b.cols; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

// out = A (n x m) * B^T where B is k x m -> n x k.
Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.rows, 0.0);
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row(i);
        double* orow = out.row(i);
        for (int k = 0; k < b.rows; ++k) {
            const double* brow = b.row(k);
            double acc = 0.0;
            for (int j = 0; j < a.cols; ++j) acc += arow[j] * brow[j];
            orow[k] = acc;
        }
    }
    return out;
}

void check_dims(const std::vector<int>& layer_dims) {
    if (layer_dims.size() < 2)
        throw ConfigError("layer_dims needs at least an input and an output dimension");
    for (int d : layer_dims)
        if (d <= 0) throw ConfigError("layer_dims entries must be positive");
}

}  // namespace

size_t ModelParams::parameter_count() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.weights.data.size() + l.bias.size();
    return n;
}

bool ModelParams::all_finite() const {
    for (const auto& l : layers) {
        if (!l.weights.all_finite()) return false;
        for (double b : l.bias)
            if (!std::isfinite(b)) return false;
    }
    return true;
}

bool ModelParams::same_shape(const ModelParams& other) const {
    if (layer_dims != other.layer_dims || layers.size() != other.layers.size()) return false;
    for (size_t i = 0; i < layers.size(); ++i) {
        if (!layers[i].weights.same_shape(other.layers[i].weights)) return false;
        if (layers[i].bias.size() != other.layers[i].bias.size()) return false;
    }
    return true;
}

ModelParams init_params(const std::vector<int>& layer_dims, uint64_t seed) {
    check_dims(layer_dims);
    ModelParams params;
    params.layer_dims = layer_dims;
    params.layers.resize(layer_dims.size() - 1);
    for (size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        int fan_in = layer_dims[l];
        int fan_out = layer_dims[l + 1];
        LayerParams& layer = params.layers[l];
        layer.weights = Matrix(fan_in, fan_out);
        layer.bias.assign(static_cast<size_t>(fan_out), 0.0);
        Rng rng(derive_key(seed, 0x696e6974u, static_cast<uint64_t>(l)));
        double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& w : layer.weights.data) w = rng.next_range(-scale, scale);
    }
    return params;
}

Matrix forward(const ModelParams& params, const Matrix& inputs) {
    if (params.layers.empty()) throw ShapeError("model has no layers");
    if (inputs.cols != params.input_dim())
        throw ShapeError("input dimension " + std::to_string(inputs.cols) +
                         " does not match model input " + std::to_string(params.input_dim()));
    Matrix act = inputs;
    for (size_t l = 0; l < params.layers.size(); ++l) {
        const LayerParams& layer = params.layers[l];
        Matrix z = matmul(act, layer.weights);
        for (int i = 0; i < z.rows; ++i) {
            double* zrow = z.row(i);
            for (int j = 0; j < z.cols; ++j) zrow[j] += layer.bias[static_cast<size_t>(j)];
        }
        if (l + 1 < params.layers.size()) {
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
        }
        act = std::move(z);
    }
    return act;
}

LossGrad loss_and_grad(const ModelParams& params, const Batch& batch) {
    const Matrix& x = batch.inputs;
    if (x.rows < 1) throw ShapeError("batch must contain at least one sample");
    if (x.cols != params.input_dim())
        throw ShapeError("batch feature dimension does not match model input");
    if (static_cast<int>(batch.labels.size()) != x.rows)
        throw ShapeError("label count does not match batch size");
    int k = params.output_dim();
    for (int y : batch.labels)
        if (y < 0 || y >= k)
            throw InvalidLabelError("label " + std::to_string(y) + " outside [0," +
                                    std::to_string(k) + ")");

    size_t num_layers = params.layers.size();
    // activations[0] = inputs, activations[l+1] = output of layer l
    // (rectified for hidden layers, raw logits for the last).
    std::vector<Matrix> activations(num_layers + 1);
    activations[0] = x;
    for (size_t l = 0; l < num_layers; ++l) {
        const LayerParams& layer = params.layers[l];
        Matrix z = matmul(activations[l], layer.weights);
        for (int i = 0; i < z.rows; ++i) {
            double* zrow = z.row(i);
            for (int j = 0; j < z.cols; ++j) zrow[j] += layer.bias[static_cast<size_t>(j)];
        }
        if (l + 1 < num_layers)
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
        activations[l + 1] = std::move(z);
    }

    const Matrix& logits = activations[num_layers];
    int n = x.rows;
    double loss = 0.0;
    Matrix delta(n, k);  // d(loss)/d(logits)
    for (int i = 0; i < n; ++i) {
        const double* lrow = logits.row(i);
        double m = lrow[0];
        for (int j = 1; j < k; ++j) m = std::max(m, lrow[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(lrow[j] - m);
        double log_sum = std::log(sum);
        int y = batch.labels[static_cast<size_t>(i)];
        loss += -(lrow[y] - m - log_sum);
        double* drow = delta.row(i);
        double inv_n = 1.0 / static_cast<double>(n);
        for (int j = 0; j < k; ++j) {
            double p = std::exp(lrow[j] - m) / sum;
            drow[j] = (p - (j == y ? 1.0 : 0.0)) * inv_n;
        }
    }
    loss /= static_cast<double>(n);

    LossGrad out;
    out.loss = loss;
    out.grads.layers.resize(num_layers);
    Matrix current = std::move(delta);
    for (size_t l = num_layers; l-- > 0;) {
        const LayerParams& layer = params.layers[l];
        LayerParams& grad = out.grads.layers[l];
        grad.weights = matmul_at_b(activations[l], current);
        grad.bias.assign(layer.bias.size(), 0.0);
        for (int i = 0; i < current.rows; ++i) {
            const double* crow = current.row(i);
            for (int j = 0; j < current.cols; ++j) grad.bias[static_cast<size_t>(j)] += crow[j];
        }
        if (l > 0) {
            Matrix prev = matmul_a_bt(current, layer.weights);
            const Matrix& act = activations[l];
            for (int i = 0; i < prev.rows; ++i) {
                double* prow = prev.row(i);
                const double* arow = act.row(i);
                for (int j = 0; j < prev.cols; ++j)
                    if (arow[j] <= 0.0) prow[j] = 0.0;
            }
            current = std::move(prev);
        }
    }
    return out;
}

ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double lr) {
    if (grads.layers.size() != params.layers.size())
        throw ShapeError("gradient layer count does not match params");
    ModelParams out = params;
    for (size_t l = 0; l < out.layers.size(); ++l) {
        LayerParams& layer = out.layers[l];
        const LayerParams& g = grads.layers[l];
        if (!layer.weights.same_shape(g.weights) || layer.bias.size() != g.bias.size())
            throw ShapeError("gradient shape does not match params at layer " + std::to_string(l));
        for (size_t i = 0; i < layer.weights.data.size(); ++i)
            layer.weights.data[i] -= lr * g.weights.data[i];
        for (size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= lr * g.bias[i];
    }
    return out;
}

std::vector<int> predict_classes(const ModelParams& params, const Matrix& inputs) {
    Matrix logits = forward(params, inputs);
    std::vector<int> pred(static_cast<size_t>(logits.rows));
    for (int i = 0; i < logits.rows; ++i) {
        const double* row = logits.row(i);
        int best = 0;
        for (int j = 1; j < logits.cols; ++j)
            if (row[j] > row[best]) best = j;
        pred[static_cast<size_t>(i)] = best;
    }
    return pred;
}

}  // namespace driftlab

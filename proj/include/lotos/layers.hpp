#pragma once

#include <optional>
#include <variant>

#include "lotos/numerics.hpp"

namespace lotos {

struct DenseLayer {
    Matrix weights;  // out x in
    std::optional<Vector> bias;

    std::size_t in_dim() const { return weights.cols; }
    std::size_t out_dim() const { return weights.rows; }
};

struct ConvFilter {
    Vector taps;
    std::size_t length() const { return taps.size(); }
};

// Circular 1-D convolution, single channel, correlation convention:
//   (A v)_i = sum_t f_t v_{(i+t) mod n}
struct Conv1dCircular {
    ConvFilter filter;
    std::size_t n = 0;
    std::optional<double> bias;  // one shared bias, added at every position

    std::size_t in_dim() const { return n; }
    std::size_t out_dim() const { return n; }
};

enum class Padding { Circular, Zero };

// 2-D convolution on (channels, height, width) inputs flattened row-major.
// Correlation convention: out[co][y][x] += k[co][ci][dy][dx] * in[ci][y+dy][x+dx]
// with circular wrap-around or zero outside, output same spatial size.
struct Conv2dLayer {
    std::size_t out_channels = 0, in_channels = 0, kh = 0, kw = 0;
    Vector kernel;  // [co][ci][dy][dx] row-major
    Padding padding = Padding::Circular;
    std::size_t in_h = 0, in_w = 0;
    std::optional<Vector> bias;  // per output channel

    double& k(std::size_t co, std::size_t ci, std::size_t dy, std::size_t dx) {
        return kernel[((co * in_channels + ci) * kh + dy) * kw + dx];
    }
    double k(std::size_t co, std::size_t ci, std::size_t dy, std::size_t dx) const {
        return kernel[((co * in_channels + ci) * kh + dy) * kw + dx];
    }
    std::size_t in_dim() const { return in_channels * in_h * in_w; }
    std::size_t out_dim() const { return out_channels * in_h * in_w; }
};

using Layer = std::variant<DenseLayer, Conv1dCircular, Conv2dLayer>;

std::size_t layer_in_dim(const Layer& layer);
std::size_t layer_out_dim(const Layer& layer);

// Flat parameter view: weights first (in the layer's natural order), then bias.
std::size_t parameter_count(const Layer& layer);
Vector get_parameters(const Layer& layer);
void set_parameters(Layer& layer, const Vector& params);

Vector forward(const Layer& layer, const Vector& input);

struct BackwardResult {
    Vector input_grad;
    Vector weight_grads;  // aligned with get_parameters
};

// Exact gradients of the affine map: upstream_grad is dLoss/dOutput.
BackwardResult backward(const Layer& layer, const Vector& input, const Vector& upstream_grad);

// Linear part only (bias excluded); adjoint verified by <Ax,y> = <x,A^T y>.
LinearOperator as_operator(const Layer& layer);

// Explicit matrix of the linear part, built by applying to basis vectors.
Matrix materialize_operator(const Layer& layer);

}  // namespace lotos

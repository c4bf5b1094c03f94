#include "lotos/layers.hpp"

namespace lotos {

namespace {

Vector conv1d_apply(const Vector& taps, const Vector& v) {
    const std::size_t n = v.size(), T = taps.size();
    Vector out(n, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const double f = taps[t];
        for (std::size_t i = 0; i < n; ++i) out[i] += f * v[(i + t) % n];
    }
    return out;
}

Vector conv1d_adjoint(const Vector& taps, const Vector& g) {
    const std::size_t n = g.size(), T = taps.size();
    Vector out(n, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const double f = taps[t];
        const std::size_t shift = t % n;
        for (std::size_t j = 0; j < n; ++j) out[j] += f * g[(j + n - shift) % n];  // (j - t) mod n
    }
    return out;
}

Vector conv2d_apply(const Conv2dLayer& l, const Vector& v) {
    const std::size_t H = l.in_h, W = l.in_w;
    Vector out(l.out_dim(), 0.0);
    for (std::size_t co = 0; co < l.out_channels; ++co)
        for (std::size_t ci = 0; ci < l.in_channels; ++ci)
            for (std::size_t dy = 0; dy < l.kh; ++dy)
                for (std::size_t dx = 0; dx < l.kw; ++dx) {
                    const double kv = l.k(co, ci, dy, dx);
                    if (kv == 0.0) continue;
                    for (std::size_t y = 0; y < H; ++y) {
                        std::size_t sy = y + dy;
                        if (l.padding == Padding::Circular) sy %= H;
                        else if (sy >= H) continue;
                        for (std::size_t x = 0; x < W; ++x) {
                            std::size_t sx = x + dx;
                            if (l.padding == Padding::Circular) sx %= W;
                            else if (sx >= W) continue;
                            out[(co * H + y) * W + x] += kv * v[(ci * H + sy) * W + sx];
                        }
                    }
                }
    return out;
}

Vector conv2d_adjoint(const Conv2dLayer& l, const Vector& g) {
    const std::size_t H = l.in_h, W = l.in_w;
    Vector out(l.in_dim(), 0.0);
    for (std::size_t co = 0; co < l.out_channels; ++co)
        for (std::size_t ci = 0; ci < l.in_channels; ++ci)
            for (std::size_t dy = 0; dy < l.kh; ++dy)
                for (std::size_t dx = 0; dx < l.kw; ++dx) {
                    const double kv = l.k(co, ci, dy, dx);
                    if (kv == 0.0) continue;
                    for (std::size_t y = 0; y < H; ++y) {
                        std::size_t sy = y + dy;
                        if (l.padding == Padding::Circular) sy %= H;
                        else if (sy >= H) continue;
                        for (std::size_t x = 0; x < W; ++x) {
                            std::size_t sx = x + dx;
                            if (l.padding == Padding::Circular) sx %= W;
                            else if (sx >= W) continue;
                            out[(ci * H + sy) * W + sx] += kv * g[(co * H + y) * W + x];
                        }
                    }
                }
    return out;
}

}  // namespace

std::size_t layer_in_dim(const Layer& layer) {
    return std::visit([](const auto& l) { return l.in_dim(); }, layer);
}

std::size_t layer_out_dim(const Layer& layer) {
    return std::visit([](const auto& l) { return l.out_dim(); }, layer);
}

std::size_t parameter_count(const Layer& layer) {
    if (const auto* d = std::get_if<DenseLayer>(&layer))
        return d->weights.data.size() + (d->bias ? d->bias->size() : 0);
    if (const auto* c = std::get_if<Conv1dCircular>(&layer))
        return c->filter.taps.size() + (c->bias ? 1 : 0);
    const auto& c2 = std::get<Conv2dLayer>(layer);
    return c2.kernel.size() + (c2.bias ? c2.bias->size() : 0);
}

Vector get_parameters(const Layer& layer) {
    Vector p;
    p.reserve(parameter_count(layer));
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
        p.insert(p.end(), d->weights.data.begin(), d->weights.data.end());
        if (d->bias) p.insert(p.end(), d->bias->begin(), d->bias->end());
    } else if (const auto* c = std::get_if<Conv1dCircular>(&layer)) {
        p.insert(p.end(), c->filter.taps.begin(), c->filter.taps.end());
        if (c->bias) p.push_back(*c->bias);
    } else {
        const auto& c2 = std::get<Conv2dLayer>(layer);
        p.insert(p.end(), c2.kernel.begin(), c2.kernel.end());
        if (c2.bias) p.insert(p.end(), c2.bias->begin(), c2.bias->end());
    }
    return p;
}

void set_parameters(Layer& layer, const Vector& params) {
    if (params.size() != parameter_count(layer))
        throw ShapeError("set_parameters: size mismatch");
    std::size_t off = 0;
    if (auto* d = std::get_if<DenseLayer>(&layer)) {
        std::copy(params.begin(), params.begin() + d->weights.data.size(), d->weights.data.begin());
        off = d->weights.data.size();
        if (d->bias) std::copy(params.begin() + off, params.end(), d->bias->begin());
    } else if (auto* c = std::get_if<Conv1dCircular>(&layer)) {
        std::copy(params.begin(), params.begin() + c->filter.taps.size(), c->filter.taps.begin());
        if (c->bias) *c->bias = params.back();
    } else {
        auto& c2 = std::get<Conv2dLayer>(layer);
        std::copy(params.begin(), params.begin() + c2.kernel.size(), c2.kernel.begin());
        off = c2.kernel.size();
        if (c2.bias) std::copy(params.begin() + off, params.end(), c2.bias->begin());
    }
}

Vector forward(const Layer& layer, const Vector& input) {
    if (input.size() != layer_in_dim(layer)) throw ShapeError("forward: input dimension mismatch");
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
        Vector y = d->weights.apply(input);
        if (d->bias) axpy(1.0, *d->bias, y);
        return y;
    }
    if (const auto* c = std::get_if<Conv1dCircular>(&layer)) {
        Vector y = conv1d_apply(c->filter.taps, input);
        if (c->bias)
            for (auto& x : y) x += *c->bias;
        return y;
    }
    const auto& c2 = std::get<Conv2dLayer>(layer);
    Vector y = conv2d_apply(c2, input);
    if (c2.bias) {
        const std::size_t plane = c2.in_h * c2.in_w;
        for (std::size_t co = 0; co < c2.out_channels; ++co)
            for (std::size_t i = 0; i < plane; ++i) y[co * plane + i] += (*c2.bias)[co];
    }
    return y;
}

BackwardResult backward(const Layer& layer, const Vector& input, const Vector& upstream_grad) {
    if (input.size() != layer_in_dim(layer) || upstream_grad.size() != layer_out_dim(layer))
        throw ShapeError("backward: dimension mismatch");
    BackwardResult res;
    res.weight_grads.assign(parameter_count(layer), 0.0);

    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
        res.input_grad = d->weights.apply_transposed(upstream_grad);
        // dW = upstream (outer) input
        const std::size_t in = d->in_dim(), out = d->out_dim();
        for (std::size_t i = 0; i < out; ++i)
            for (std::size_t j = 0; j < in; ++j)
                res.weight_grads[i * in + j] = upstream_grad[i] * input[j];
        if (d->bias)
            for (std::size_t i = 0; i < out; ++i) res.weight_grads[out * in + i] = upstream_grad[i];
        return res;
    }
    if (const auto* c = std::get_if<Conv1dCircular>(&layer)) {
        res.input_grad = conv1d_adjoint(c->filter.taps, upstream_grad);
        const std::size_t n = c->n, T = c->filter.taps.size();
        for (std::size_t t = 0; t < T; ++t) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += upstream_grad[i] * input[(i + t) % n];
            res.weight_grads[t] = s;
        }
        if (c->bias) {
            double s = 0.0;
            for (double g : upstream_grad) s += g;
            res.weight_grads[T] = s;
        }
        return res;
    }
    const auto& c2 = std::get<Conv2dLayer>(layer);
    res.input_grad = conv2d_adjoint(c2, upstream_grad);
    const std::size_t H = c2.in_h, W = c2.in_w;
    for (std::size_t co = 0; co < c2.out_channels; ++co)
        for (std::size_t ci = 0; ci < c2.in_channels; ++ci)
            for (std::size_t dy = 0; dy < c2.kh; ++dy)
                for (std::size_t dx = 0; dx < c2.kw; ++dx) {
                    double s = 0.0;
                    for (std::size_t y = 0; y < H; ++y) {
                        std::size_t sy = y + dy;
                        if (c2.padding == Padding::Circular) sy %= H;
                        else if (sy >= H) continue;
                        for (std::size_t x = 0; x < W; ++x) {
                            std::size_t sx = x + dx;
                            if (c2.padding == Padding::Circular) sx %= W;
                            else if (sx >= W) continue;
                            s += upstream_grad[(co * H + y) * W + x] * input[(ci * H + sy) * W + sx];
                        }
                    }
                    res.weight_grads[((co * c2.in_channels + ci) * c2.kh + dy) * c2.kw + dx] = s;
                }
    if (c2.bias) {
        const std::size_t plane = H * W;
        for (std::size_t co = 0; co < c2.out_channels; ++co) {
            double s = 0.0;
            for (std::size_t i = 0; i < plane; ++i) s += upstream_grad[co * plane + i];
            res.weight_grads[c2.kernel.size() + co] = s;
        }
    }
    return res;
}

LinearOperator as_operator(const Layer& layer) {
    if (const auto* d = std::get_if<DenseLayer>(&layer)) {
        Matrix w = d->weights;
        return LinearOperator{w.cols, w.rows,
                              [w](const Vector& x) { return w.apply(x); },
                              [w](const Vector& y) { return w.apply_transposed(y); }};
    }
    if (const auto* c = std::get_if<Conv1dCircular>(&layer)) {
        Vector taps = c->filter.taps;
        const std::size_t n = c->n;
        return LinearOperator{n, n,
                              [taps](const Vector& x) { return conv1d_apply(taps, x); },
                              [taps](const Vector& y) { return conv1d_adjoint(taps, y); }};
    }
    Conv2dLayer c2 = std::get<Conv2dLayer>(layer);
    c2.bias.reset();
    return LinearOperator{c2.in_dim(), c2.out_dim(),
                          [c2](const Vector& x) { return conv2d_apply(c2, x); },
                          [c2](const Vector& y) { return conv2d_adjoint(c2, y); }};
}

Matrix materialize_operator(const Layer& layer) {
    const std::size_t in = layer_in_dim(layer), out = layer_out_dim(layer);
    if (in * out > (1u << 20)) throw TooLarge("materialize_operator: operator too large");
    auto op = as_operator(layer);
    Matrix m(out, in);
    Vector basis(in, 0.0);
    for (std::size_t j = 0; j < in; ++j) {
        basis[j] = 1.0;
        Vector col = op.apply(basis);
        basis[j] = 0.0;
        for (std::size_t i = 0; i < out; ++i) m(i, j) = col[i];
    }
    return m;
}

}  // namespace lotos

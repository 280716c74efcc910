#include "imd2/nn.hpp"

#include <cmath>

#include "imd2/error.hpp"
#include "imd2/rng.hpp"

namespace imd2 {

namespace {

double activate(Activation a, double z) {
    switch (a) {
    case Activation::tanh: return std::tanh(z);
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    }
    return z;
}

// Derivative expressed through the activation output s = act(z).
double activate_deriv(Activation a, double s) {
    switch (a) {
    case Activation::tanh: return 1.0 - s * s;
    case Activation::relu: return s > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return s * (1.0 - s);
    }
    return 1.0;
}

} // namespace

std::string to_string(Activation a) {
    switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

Activation activation_from_string(const std::string& name) {
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    throw ConfigError("unknown activation '" + name + "' (expected tanh, relu or sigmoid)");
}

std::size_t NNShape::param_count() const noexcept {
    std::size_t n = 0, fan_in = inputs;
    for (auto w : widths) {
        n += w * fan_in;
        fan_in = w;
    }
    return n;
}

void NNShape::validate() const {
    if (inputs == 0) throw InvalidArgument("network needs at least one input");
    if (widths.size() < 2) throw InvalidArgument("network needs at least one hidden layer and an output layer");
    if (widths.back() != 1) throw InvalidArgument("output layer must have width 1");
    for (auto w : widths)
        if (w == 0) throw InvalidArgument("layer width must be positive");
}

NNModel::NNModel(DelaySet delays, std::vector<std::size_t> widths, Activation activation, double input_scale)
    : delays_(std::move(delays)), activation_(activation), input_scale_(1.0) {
    shape_ = NNShape{delays_.size(), std::move(widths)};
    shape_.validate();
    std::size_t fan_in = shape_.inputs;
    for (auto w : shape_.widths) {
        weights_.push_back(RowMatrix::Zero(w, fan_in));
        fan_in = w;
    }
    set_input_scale(input_scale);
}

NNModel::NNModel(DelaySet delays, std::vector<RowMatrix> weights, Activation activation, double input_scale)
    : delays_(std::move(delays)), weights_(std::move(weights)), activation_(activation), input_scale_(1.0) {
    shape_.inputs = delays_.size();
    std::size_t fan_in = shape_.inputs;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        if (static_cast<std::size_t>(weights_[i].cols()) != fan_in)
            throw InvalidArgument("layer " + std::to_string(i) + " expects " + std::to_string(fan_in) +
                                  " inputs, has " + std::to_string(weights_[i].cols()));
        if (!weights_[i].allFinite()) throw InvalidArgument("non-finite weight in layer " + std::to_string(i));
        shape_.widths.push_back(weights_[i].rows());
        fan_in = weights_[i].rows();
    }
    shape_.validate();
    set_input_scale(input_scale);
}

void NNModel::set_input_scale(double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidArgument("input_scale must be positive");
    input_scale_ = scale;
}

Vector NNModel::flatten() const {
    Vector out(param_count());
    Eigen::Index off = 0;
    for (const auto& w : weights_) {
        out.segment(off, w.size()) = Eigen::Map<const Vector>(w.data(), w.size());
        off += w.size();
    }
    return out;
}

void NNModel::unflatten(const Vector& params) {
    if (static_cast<std::size_t>(params.size()) != param_count())
        throw InvalidArgument("expected " + std::to_string(param_count()) + " parameters, got " +
                              std::to_string(params.size()));
    Eigen::Index off = 0;
    for (auto& w : weights_) {
        Eigen::Map<Vector>(w.data(), w.size()) = params.segment(off, w.size());
        off += w.size();
    }
}

NNWorkspace NNModel::make_workspace() const {
    NNWorkspace ws;
    ws.act.emplace_back(shape_.inputs);
    for (auto w : shape_.widths) {
        ws.act.emplace_back(w);
        ws.delta.emplace_back(w);
    }
    return ws;
}

double NNModel::forward(std::span<const double> f, NNWorkspace& ws) const {
    if (f.size() != shape_.inputs)
        throw InvalidArgument("input length " + std::to_string(f.size()) + " does not match " +
                              std::to_string(shape_.inputs) + " delays");
    ws.act[0] = Eigen::Map<const Vector>(f.data(), f.size());
    const std::size_t hidden = weights_.size() - 1;
    for (std::size_t i = 0; i < hidden; ++i) {
        ws.act[i + 1].noalias() = weights_[i] * ws.act[i];
        for (auto& v : ws.act[i + 1]) v = activate(activation_, v);
    }
    ws.act[hidden + 1].noalias() = weights_[hidden] * ws.act[hidden];
    return ws.act[hidden + 1](0);
}

void NNModel::backward_into(NNWorkspace& ws, double upstream, std::span<double> grad) const {
    if (grad.size() != param_count()) throw InvalidArgument("gradient buffer has wrong length");
    const std::size_t layers = weights_.size();
    ws.delta[layers - 1](0) = upstream;
    for (std::size_t i = layers - 1; i > 0; --i) {
        ws.delta[i - 1].noalias() = weights_[i].transpose() * ws.delta[i];
        for (Eigen::Index j = 0; j < ws.delta[i - 1].size(); ++j)
            ws.delta[i - 1](j) *= activate_deriv(activation_, ws.act[i](j));
    }
    // Offsets of each layer in the flat vector.
    std::size_t off = 0;
    for (std::size_t i = 0; i < layers; ++i) {
        const auto& w = weights_[i];
        Eigen::Map<RowMatrix> g(grad.data() + off, w.rows(), w.cols());
        g.noalias() += ws.delta[i] * ws.act[i].transpose();
        off += w.size();
    }
}

double NNModel::forward(std::span<const double> f) const {
    auto ws = make_workspace();
    return forward(f, ws);
}

Vector NNModel::backward(std::span<const double> f, double upstream) const {
    auto ws = make_workspace();
    forward(f, ws);
    Vector g = Vector::Zero(param_count());
    backward_into(ws, upstream, std::span<double>(g.data(), g.size()));
    return g;
}

NNModel init_weights(const DelaySet& delays, const std::vector<std::size_t>& widths, Activation activation,
                     std::uint64_t seed, double input_scale) {
    NNModel model(delays, widths, activation, input_scale);
    Rng rng(seed);
    Vector params(model.param_count());
    Eigen::Index off = 0;
    std::size_t fan_in = delays.size();
    for (auto fan_out : widths) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (std::size_t j = 0; j < fan_in * fan_out; ++j) params(off++) = rng.uniform(-bound, bound);
        fan_in = fan_out;
    }
    model.unflatten(params);
    return model;
}

} // namespace imd2

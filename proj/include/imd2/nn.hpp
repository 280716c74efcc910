#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "imd2/signal.hpp"

namespace imd2 {

enum class Activation { tanh, relu, sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

/// Layer sizes of a bias-free feed-forward canceller. `widths` lists every
/// dense layer's output size, the last entry being the scalar output (1).
/// The default network is inputs=3, widths={3, 2, 1}.
struct NNShape {
    std::size_t inputs = 0;
    std::vector<std::size_t> widths;

    std::size_t layers() const noexcept { return widths.size(); }
    std::size_t param_count() const noexcept;
    void validate() const;
};

/// Scratch buffers for one forward/backward pass. Reusable across samples.
struct NNWorkspace {
    std::vector<Vector> act;   ///< act[0] = input, act[i+1] = output of layer i
    std::vector<Vector> delta; ///< dy/d(pre-activation) per layer
};

/// y = W_out s(W_{L-1} ... s(W_0 f)), no biases, linear output layer.
class NNModel {
public:
    NNModel(DelaySet delays, std::vector<std::size_t> widths, Activation activation, double input_scale = 1.0);
    NNModel(DelaySet delays, std::vector<RowMatrix> weights, Activation activation, double input_scale);

    const DelaySet& delays() const noexcept { return delays_; }
    const NNShape& shape() const noexcept { return shape_; }
    const std::vector<RowMatrix>& weights() const noexcept { return weights_; }
    Activation activation() const noexcept { return activation_; }
    double input_scale() const noexcept { return input_scale_; }
    void set_input_scale(double scale);

    std::size_t param_count() const noexcept { return shape_.param_count(); }
    /// Layer major, row major within each matrix.
    Vector flatten() const;
    void unflatten(const Vector& params);

    /// Scales the output layer; the output is linear in it.
    void scale_output(double factor) { weights_.back() *= factor; }

    double forward(std::span<const double> f) const;
    /// d(upstream * y)/dW in flatten() order.
    Vector backward(std::span<const double> f, double upstream) const;

    NNWorkspace make_workspace() const;
    /// Forward pass that leaves activations in `ws` for a following backward_into.
    double forward(std::span<const double> f, NNWorkspace& ws) const;
    /// Adds upstream * dy/dW into `grad` (flatten() order). Needs the matching forward(f, ws).
    void backward_into(NNWorkspace& ws, double upstream, std::span<double> grad) const;

private:
    DelaySet delays_;
    NNShape shape_;
    std::vector<RowMatrix> weights_;
    Activation activation_;
    double input_scale_;
};

/// Glorot-uniform weights, U(-sqrt(6/(fan_in+fan_out)), +...), drawn from Rng(seed)
/// layer by layer in flatten() order.
NNModel init_weights(const DelaySet& delays, const std::vector<std::size_t>& widths, Activation activation,
                     std::uint64_t seed, double input_scale = 1.0);

} // namespace imd2

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cavat/grid.hpp"
#include "cavat/rng.hpp"
#include "cavat/tensor.hpp"

namespace cavat {

/// Fully-convolutional per-pixel classifier: a stack of zero-padded square
/// convolutions with ReLU between them and a softmax over classes.
struct NetConfig {
    std::vector<int> hidden{8, 16};
    int classes = 2;
    int kernel = 3;

    friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// Logits are clamped to this magnitude before the softmax so every class
/// keeps a strictly positive probability.
inline constexpr double kLogitClamp = 30.0;
/// Probability floor applied before every log.
inline constexpr double kProbFloor = 1e-12;

/// Activations kept from a forward pass for the backward pass.
struct ForwardPass {
    Image input;
    std::vector<std::vector<double>> pre;   // pre-activation of each layer, [channel][row][col]
    std::vector<std::vector<double>> post;  // ReLU outputs of the hidden layers
    std::vector<double> logits;             // unclamped, [class][row][col]
    ProbMap probs;
};

struct Gradients {
    GradientSet params;
    std::optional<Image> input;
};

class Network {
public:
    explicit Network(NetConfig config = {});

    const NetConfig& config() const noexcept { return config_; }
    std::size_t layers() const noexcept { return config_.hidden.size() + 1; }

    NetworkParams zero_params() const;
    /// Glorot-uniform weights, zero biases.
    NetworkParams init_params(Rng& rng) const;

    /// Throws InvalidArgument if `params` does not fit this architecture.
    void check_params(const NetworkParams& params) const;

    ProbMap forward(const Image& x, const NetworkParams& params) const;
    ForwardPass forward_pass(const Image& x, const NetworkParams& params) const;

    /// Reverse-mode gradient of a scalar loss given dLoss/dProbs.
    /// Throws NumericalFailure naming the tensor on any non-finite value.
    Gradients backward(const ForwardPass& pass, const NetworkParams& params, const ProbAdjoint& dprobs,
                       bool want_input_gradient = false) const;

private:
    int in_channels(std::size_t layer) const { return layer == 0 ? 1 : config_.hidden[layer - 1]; }
    int out_channels(std::size_t layer) const {
        return layer + 1 == layers() ? config_.classes : config_.hidden[layer];
    }

    NetConfig config_;
};

}  // namespace cavat

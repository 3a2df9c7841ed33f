#include "cavat/net.hpp"

#include <algorithm>
#include <cmath>

namespace cavat {

namespace {

// Zero-padded "same" convolution, channel-major buffers of h*w per channel.
void conv_forward(const double* in, int in_ch, const double* weight, const double* bias, int out_ch, int kernel,
                  int h, int w, double* out) {
    const int half = kernel / 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int oc = 0; oc < out_ch; ++oc) {
        double* o = out + oc * plane;
        std::fill(o, o + plane, bias[oc]);
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* src = in + ic * plane;
            for (int ky = 0; ky < kernel; ++ky) {
                const int dy = ky - half;
                const int r0 = std::max(0, -dy);
                const int r1 = std::min(h, h - dy);
                for (int kx = 0; kx < kernel; ++kx) {
                    const int dx = kx - half;
                    const int c0 = std::max(0, -dx);
                    const int c1 = std::min(w, w - dx);
                    const double wt = weight[((oc * in_ch + ic) * kernel + ky) * kernel + kx];
                    for (int r = r0; r < r1; ++r) {
                        double* orow = o + static_cast<std::size_t>(r) * w;
                        const double* irow = src + static_cast<std::size_t>(r + dy) * w + dx;
                        for (int c = c0; c < c1; ++c) orow[c] += wt * irow[c];
                    }
                }
            }
        }
    }
}

// Accumulates weight/bias gradients and, when din is non-null, the input gradient.
void conv_backward(const double* in, int in_ch, const double* weight, int out_ch, int kernel, int h, int w,
                   const double* dout, double* dweight, double* dbias, double* din) {
    const int half = kernel / 2;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    for (int oc = 0; oc < out_ch; ++oc) {
        const double* g = dout + oc * plane;
        double bsum = 0.0;
        for (std::size_t i = 0; i < plane; ++i) bsum += g[i];
        dbias[oc] += bsum;
        for (int ic = 0; ic < in_ch; ++ic) {
            const double* src = in + ic * plane;
            double* dsrc = din ? din + ic * plane : nullptr;
            for (int ky = 0; ky < kernel; ++ky) {
                const int dy = ky - half;
                const int r0 = std::max(0, -dy);
                const int r1 = std::min(h, h - dy);
                for (int kx = 0; kx < kernel; ++kx) {
                    const int dx = kx - half;
                    const int c0 = std::max(0, -dx);
                    const int c1 = std::min(w, w - dx);
                    const std::size_t widx = ((oc * in_ch + ic) * kernel + ky) * kernel + kx;
                    const double wt = weight[widx];
                    double acc = 0.0;
                    for (int r = r0; r < r1; ++r) {
                        const double* grow = g + static_cast<std::size_t>(r) * w;
                        const double* irow = src + static_cast<std::size_t>(r + dy) * w + dx;
                        for (int c = c0; c < c1; ++c) acc += grow[c] * irow[c];
                        if (dsrc) {
                            double* drow = dsrc + static_cast<std::size_t>(r + dy) * w + dx;
                            for (int c = c0; c < c1; ++c) drow[c] += wt * grow[c];
                        }
                    }
                    dweight[widx] += acc;
                }
            }
        }
    }
}

void check_finite(const std::vector<double>& v, const std::string& name) {
    for (double x : v)
        if (!std::isfinite(x)) throw NumericalFailure(name, "non-finite value in backward pass");
}

std::string weight_name(std::size_t layer) { return "conv" + std::to_string(layer + 1) + ".weight"; }
std::string bias_name(std::size_t layer) { return "conv" + std::to_string(layer + 1) + ".bias"; }

}  // namespace

Network::Network(NetConfig config) : config_(std::move(config)) {
    if (config_.classes < 2) throw InvalidArgument("network needs at least two classes");
    if (config_.kernel <= 0 || config_.kernel % 2 == 0) throw InvalidArgument("kernel size must be odd and positive");
    for (int c : config_.hidden)
        if (c <= 0) throw InvalidArgument("hidden channel widths must be positive");
}

NetworkParams Network::zero_params() const {
    std::vector<Tensor> tensors;
    const int k = config_.kernel;
    for (std::size_t l = 0; l < layers(); ++l) {
        tensors.push_back(Tensor::zeros(weight_name(l), {out_channels(l), in_channels(l), k, k}));
        tensors.push_back(Tensor::zeros(bias_name(l), {out_channels(l)}));
    }
    return NetworkParams(std::move(tensors));
}

NetworkParams Network::init_params(Rng& rng) const {
    NetworkParams params = zero_params();
    const int k2 = config_.kernel * config_.kernel;
    for (std::size_t l = 0; l < layers(); ++l) {
        const double fan_in = in_channels(l) * k2;
        const double fan_out = out_channels(l) * k2;
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& v : params[2 * l].values) v = (2.0 * rng.uniform() - 1.0) * bound;
    }
    return params;
}

void Network::check_params(const NetworkParams& params) const {
    if (!params.same_shape(zero_params())) throw InvalidArgument("parameters do not match the network architecture");
}

ForwardPass Network::forward_pass(const Image& x, const NetworkParams& params) const {
    check_params(params);
    if (x.empty()) throw InvalidArgument("empty input image");
    const int h = x.height();
    const int w = x.width();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const int k = config_.kernel;

    ForwardPass pass;
    pass.input = x;
    const double* in = x.values().data();
    for (std::size_t l = 0; l < layers(); ++l) {
        std::vector<double> z(plane * out_channels(l));
        conv_forward(in, in_channels(l), params[2 * l].values.data(), params[2 * l + 1].values.data(), out_channels(l),
                     k, h, w, z.data());
        pass.pre.push_back(std::move(z));
        if (l + 1 < layers()) {
            std::vector<double> a = pass.pre.back();
            for (double& v : a) v = std::max(v, 0.0);
            pass.post.push_back(std::move(a));
            in = pass.post.back().data();
        }
    }
    pass.logits = pass.pre.back();

    const int classes = config_.classes;
    pass.probs = ProbMap(h, w, classes);
    std::vector<double> z(classes);
    for (std::size_t i = 0; i < plane; ++i) {
        double zmax = -kLogitClamp;
        for (int c = 0; c < classes; ++c) {
            z[c] = std::clamp(pass.logits[c * plane + i], -kLogitClamp, kLogitClamp);
            zmax = std::max(zmax, z[c]);
        }
        double total = 0.0;
        for (int c = 0; c < classes; ++c) {
            z[c] = std::exp(z[c] - zmax);
            total += z[c];
        }
        for (int c = 0; c < classes; ++c) pass.probs(i, c) = z[c] / total;
    }
    return pass;
}

ProbMap Network::forward(const Image& x, const NetworkParams& params) const {
    return forward_pass(x, params).probs;
}

Gradients Network::backward(const ForwardPass& pass, const NetworkParams& params, const ProbAdjoint& dprobs,
                            bool want_input_gradient) const {
    check_params(params);
    if (!dprobs.same_shape(pass.probs)) throw InvalidArgument("probability adjoint does not match forward pass");
    const int h = pass.input.height();
    const int w = pass.input.width();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const int classes = config_.classes;
    const int k = config_.kernel;

    // Softmax then clamp: dz_c = p_c (g_c - sum_j p_j g_j), zero where the clamp is active.
    std::vector<double> delta(plane * classes);
    for (std::size_t i = 0; i < plane; ++i) {
        double dot = 0.0;
        for (int c = 0; c < classes; ++c) dot += pass.probs(i, c) * dprobs(i, c);
        for (int c = 0; c < classes; ++c) {
            const double raw = pass.logits[c * plane + i];
            const bool clamped = raw > kLogitClamp || raw < -kLogitClamp;
            delta[c * plane + i] = clamped ? 0.0 : pass.probs(i, c) * (dprobs(i, c) - dot);
        }
    }
    check_finite(delta, "logits");

    Gradients out{GradientSet::zeros_like(params), std::nullopt};
    for (std::size_t l = layers(); l-- > 0;) {
        const double* in = l == 0 ? pass.input.values().data() : pass.post[l - 1].data();
        const bool need_din = l > 0 || want_input_gradient;
        std::vector<double> din(need_din ? plane * in_channels(l) : 0, 0.0);
        conv_backward(in, in_channels(l), params[2 * l].values.data(), out_channels(l), k, h, w, delta.data(),
                      out.params[2 * l].values.data(), out.params[2 * l + 1].values.data(),
                      need_din ? din.data() : nullptr);
        check_finite(out.params[2 * l].values, weight_name(l));
        check_finite(out.params[2 * l + 1].values, bias_name(l));
        if (l > 0) {
            const auto& z = pass.pre[l - 1];
            for (std::size_t j = 0; j < din.size(); ++j)
                if (z[j] <= 0.0) din[j] = 0.0;
            check_finite(din, "relu" + std::to_string(l));
            delta = std::move(din);
        } else if (want_input_gradient) {
            check_finite(din, "input");
            out.input = Image(h, w, std::move(din));
        }
    }
    return out;
}

}  // namespace cavat

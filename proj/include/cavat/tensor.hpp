#pragma once

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "cavat/errors.hpp"

namespace cavat {

struct Tensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;

    static Tensor zeros(std::string name, std::vector<int> shape) {
        const auto n = std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                                       [](std::size_t a, int d) { return a * static_cast<std::size_t>(d); });
        return Tensor{std::move(name), std::move(shape), std::vector<double>(n, 0.0)};
    }

    std::size_t size() const noexcept { return values.size(); }
    friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Ordered list of named tensors. The tag keeps parameters, gradients and
/// optimizer moments from being mixed up.
template <class Tag>
class TensorSet {
public:
    TensorSet() = default;
    explicit TensorSet(std::vector<Tensor> tensors) : tensors_(std::move(tensors)) {}

    template <class OtherTag>
    static TensorSet zeros_like(const TensorSet<OtherTag>& other) {
        std::vector<Tensor> out;
        out.reserve(other.tensors().size());
        for (const auto& t : other.tensors()) out.push_back(Tensor::zeros(t.name, t.shape));
        return TensorSet(std::move(out));
    }

    const std::vector<Tensor>& tensors() const noexcept { return tensors_; }
    std::vector<Tensor>& tensors() noexcept { return tensors_; }
    std::size_t count() const noexcept { return tensors_.size(); }
    Tensor& operator[](std::size_t i) { return tensors_[i]; }
    const Tensor& operator[](std::size_t i) const { return tensors_[i]; }

    std::size_t parameter_count() const noexcept {
        std::size_t n = 0;
        for (const auto& t : tensors_) n += t.size();
        return n;
    }

    template <class OtherTag>
    bool same_shape(const TensorSet<OtherTag>& other) const noexcept {
        if (other.tensors().size() != tensors_.size()) return false;
        for (std::size_t i = 0; i < tensors_.size(); ++i)
            if (tensors_[i].shape != other.tensors()[i].shape) return false;
        return true;
    }

    /// this += scale * other
    template <class OtherTag>
    void add_scaled(const TensorSet<OtherTag>& other, double scale) {
        if (!same_shape(other)) throw InvalidArgument("tensor set shape mismatch");
        for (std::size_t i = 0; i < tensors_.size(); ++i) {
            auto& dst = tensors_[i].values;
            const auto& src = other.tensors()[i].values;
            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
        }
    }

    double squared_norm() const noexcept {
        double s = 0.0;
        for (const auto& t : tensors_)
            for (double v : t.values) s += v * v;
        return s;
    }
    double norm() const noexcept { return std::sqrt(squared_norm()); }

    /// Throws NumericalFailure naming the first tensor with a non-finite value.
    void check_finite(const char* what) const {
        for (const auto& t : tensors_)
            for (double v : t.values)
                if (!std::isfinite(v)) throw NumericalFailure(t.name, std::string("non-finite ") + what);
    }

    friend bool operator==(const TensorSet&, const TensorSet&) = default;

private:
    std::vector<Tensor> tensors_;
};

using NetworkParams = TensorSet<struct ParamsTag>;
using GradientSet = TensorSet<struct GradientTag>;

}  // namespace cavat

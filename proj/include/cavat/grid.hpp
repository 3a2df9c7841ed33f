#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cavat/errors.hpp"
#include "cavat/rng.hpp"

namespace cavat {

struct Coord {
    int row = 0;
    int col = 0;
    friend auto operator<=>(const Coord&, const Coord&) = default;
};

/// Row-major H x W grid of values.
template <class T>
class Grid {
public:
    using value_type = T;

    Grid() = default;
    Grid(int height, int width, T fill = T{}) : height_(height), width_(width) {
        if (height <= 0 || width <= 0) throw InvalidArgument("grid dimensions must be positive");
        data_.assign(static_cast<std::size_t>(height) * width, fill);
    }
    Grid(int height, int width, std::vector<T> values) : height_(height), width_(width), data_(std::move(values)) {
        if (height <= 0 || width <= 0) throw InvalidArgument("grid dimensions must be positive");
        if (data_.size() != static_cast<std::size_t>(height) * width)
            throw InvalidArgument("grid value count does not match height*width");
    }

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    bool contains(Coord c) const noexcept { return c.row >= 0 && c.row < height_ && c.col >= 0 && c.col < width_; }
    std::size_t index(Coord c) const noexcept { return static_cast<std::size_t>(c.row) * width_ + c.col; }

    T& operator()(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }
    const T& operator()(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }
    T& at(Coord c) { return data_[index(c)]; }
    const T& at(Coord c) const { return data_[index(c)]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    bool same_shape(const auto& other) const noexcept {
        return height_ == other.height() && width_ == other.width();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

using Image = Grid<double>;
using DiscreteMask = Grid<std::int32_t>;
using BinaryMask = Grid<std::uint8_t>;
using RewardMap = Grid<std::uint8_t>;

/// Per-pixel categorical distribution over `classes` labels, pixel-major.
class ProbMap {
public:
    static constexpr double kNormTolerance = 1e-6;

    ProbMap() = default;
    ProbMap(int height, int width, int classes, double fill = 0.0);

    static ProbMap uniform(int height, int width, int classes);
    /// Probability one on mask's label at every pixel.
    static ProbMap one_hot(const DiscreteMask& mask, int classes);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int classes() const noexcept { return classes_; }
    std::size_t pixels() const noexcept { return static_cast<std::size_t>(height_) * width_; }

    double& operator()(std::size_t pixel, int cls) { return data_[pixel * classes_ + cls]; }
    double operator()(std::size_t pixel, int cls) const { return data_[pixel * classes_ + cls]; }
    std::span<const double> pixel(std::size_t p) const {
        return std::span<const double>(data_).subspan(p * classes_, classes_);
    }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool same_shape(const ProbMap& o) const noexcept {
        return height_ == o.height_ && width_ == o.width_ && classes_ == o.classes_;
    }
    template <class T>
    bool same_shape(const Grid<T>& g) const noexcept {
        return height_ == g.height() && width_ == g.width();
    }

    /// Throws InvalidDistribution if any pixel is out of [0,1] or does not sum to one.
    void validate() const;

    friend bool operator==(const ProbMap&, const ProbMap&) = default;

private:
    int height_ = 0;
    int width_ = 0;
    int classes_ = 0;
    std::vector<double> data_;
};

/// Gradient of a scalar loss with respect to each entry of a ProbMap.
class ProbAdjoint {
public:
    ProbAdjoint() = default;
    ProbAdjoint(int height, int width, int classes)
        : height_(height), width_(width), classes_(classes),
          data_(static_cast<std::size_t>(height) * width * classes, 0.0) {}
    explicit ProbAdjoint(const ProbMap& like) : ProbAdjoint(like.height(), like.width(), like.classes()) {}

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int classes() const noexcept { return classes_; }
    std::size_t pixels() const noexcept { return static_cast<std::size_t>(height_) * width_; }

    double& operator()(std::size_t pixel, int cls) { return data_[pixel * classes_ + cls]; }
    double operator()(std::size_t pixel, int cls) const { return data_[pixel * classes_ + cls]; }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    bool same_shape(const ProbMap& p) const noexcept {
        return height_ == p.height() && width_ == p.width() && classes_ == p.classes();
    }

    /// this += scale * other
    void add_scaled(const ProbAdjoint& other, double scale);

private:
    int height_ = 0;
    int width_ = 0;
    int classes_ = 0;
    std::vector<double> data_;
};

enum class Adjacency { Four = 4, Eight = 8 };

Adjacency adjacency_from_int(int n);

/// Binary view of a label mask: 1 where label == foreground.
BinaryMask foreground(const DiscreteMask& mask, int foreground_label = 1);

std::size_t count_foreground(const BinaryMask& mask);

/// Sum over the window x window neighbourhood centred on each cell, zero padded.
Grid<std::int32_t> box_sum(const BinaryMask& grid, int window);
Grid<std::int32_t> box_sum(const Grid<std::int32_t>& grid, int window);
Grid<double> box_sum(const Grid<double>& grid, int window);

/// Connected component of the foreground that contains `seed`.
/// Throws InvalidSeed if the seed is out of bounds or on background.
std::vector<Coord> flood_fill(const BinaryMask& mask, Coord seed, Adjacency adjacency = Adjacency::Four);

/// Same component as flood_fill, returned as a mask.
BinaryMask component_mask(const BinaryMask& mask, Coord seed, Adjacency adjacency = Adjacency::Four);

/// True when the foreground is empty or forms a single component.
bool is_connected(const BinaryMask& mask, Adjacency adjacency = Adjacency::Four);

/// Draws one label per pixel from its categorical distribution; one uniform per pixel.
DiscreteMask sample_mask(const ProbMap& probs, Rng& rng);

/// Per-pixel argmax (first maximum on ties).
DiscreteMask argmax(const ProbMap& probs);

}  // namespace cavat

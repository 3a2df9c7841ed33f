#include "cavat/grid.hpp"

#include <array>
#include <cmath>

namespace cavat {

ProbMap::ProbMap(int height, int width, int classes, double fill)
    : height_(height), width_(width), classes_(classes) {
    if (height <= 0 || width <= 0) throw InvalidArgument("probability map dimensions must be positive");
    if (classes < 2) throw InvalidArgument("probability map needs at least two classes");
    data_.assign(static_cast<std::size_t>(height) * width * classes, fill);
}

ProbMap ProbMap::uniform(int height, int width, int classes) {
    return ProbMap(height, width, classes, 1.0 / classes);
}

ProbMap ProbMap::one_hot(const DiscreteMask& mask, int classes) {
    ProbMap p(mask.height(), mask.width(), classes);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] < 0 || mask[i] >= classes) throw InvalidArgument("label out of range for one-hot map");
        p(i, mask[i]) = 1.0;
    }
    return p;
}

void ProbMap::validate() const {
    for (std::size_t i = 0; i < pixels(); ++i) {
        double total = 0.0;
        for (double v : pixel(i)) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw InvalidDistribution("probability outside [0,1] at pixel " + std::to_string(i));
            }
            total += v;
        }
        if (std::abs(total - 1.0) > kNormTolerance) {
            throw InvalidDistribution("probabilities at pixel " + std::to_string(i) + " sum to " +
                                      std::to_string(total));
        }
    }
}

void ProbAdjoint::add_scaled(const ProbAdjoint& other, double scale) {
    if (other.height_ != height_ || other.width_ != width_ || other.classes_ != classes_)
        throw InvalidArgument("adjoint shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
}

Adjacency adjacency_from_int(int n) {
    if (n == 4) return Adjacency::Four;
    if (n == 8) return Adjacency::Eight;
    throw InvalidArgument("adjacency must be 4 or 8, got " + std::to_string(n));
}

BinaryMask foreground(const DiscreteMask& mask, int foreground_label) {
    BinaryMask out(mask.height(), mask.width());
    for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] == foreground_label ? 1 : 0;
    return out;
}

std::size_t count_foreground(const BinaryMask& mask) {
    std::size_t n = 0;
    for (auto v : mask.values()) n += v != 0;
    return n;
}

namespace {

void check_window(int window, int height, int width) {
    if (window <= 0 || window % 2 == 0) {
        throw InvalidArgument("box window must be odd and positive, got " + std::to_string(window));
    }
    if (window > height || window > width) {
        throw InvalidArgument("box window " + std::to_string(window) + " exceeds grid size");
    }
}

// Separable box filter: horizontal pass then vertical pass.
template <class Out, class In>
Grid<Out> separable_box(const Grid<In>& grid, int window) {
    check_window(window, grid.height(), grid.width());
    const int h = grid.height();
    const int w = grid.width();
    const int half = window / 2;
    Grid<Out> rows(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            Out acc{};
            const int lo = std::max(0, c - half);
            const int hi = std::min(w - 1, c + half);
            for (int cc = lo; cc <= hi; ++cc) acc += static_cast<Out>(grid(r, cc));
            rows(r, c) = acc;
        }
    }
    Grid<Out> out(h, w);
    for (int r = 0; r < h; ++r) {
        const int lo = std::max(0, r - half);
        const int hi = std::min(h - 1, r + half);
        for (int c = 0; c < w; ++c) {
            Out acc{};
            for (int rr = lo; rr <= hi; ++rr) acc += rows(rr, c);
            out(r, c) = acc;
        }
    }
    return out;
}

constexpr std::array<Coord, 8> kNeighbours{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}}};

}  // namespace

Grid<std::int32_t> box_sum(const BinaryMask& grid, int window) { return separable_box<std::int32_t>(grid, window); }
Grid<std::int32_t> box_sum(const Grid<std::int32_t>& grid, int window) {
    return separable_box<std::int32_t>(grid, window);
}
Grid<double> box_sum(const Grid<double>& grid, int window) { return separable_box<double>(grid, window); }

BinaryMask component_mask(const BinaryMask& mask, Coord seed, Adjacency adjacency) {
    if (!mask.contains(seed)) throw InvalidSeed("flood-fill seed out of bounds");
    if (!mask.at(seed)) throw InvalidSeed("flood-fill seed lies on background");
    const int neighbours = static_cast<int>(adjacency);
    BinaryMask visited(mask.height(), mask.width());
    std::vector<Coord> stack{seed};
    visited.at(seed) = 1;
    while (!stack.empty()) {
        const Coord p = stack.back();
        stack.pop_back();
        for (int n = 0; n < neighbours; ++n) {
            const Coord q{p.row + kNeighbours[n].row, p.col + kNeighbours[n].col};
            if (!mask.contains(q) || visited.at(q) || !mask.at(q)) continue;
            visited.at(q) = 1;
            stack.push_back(q);
        }
    }
    return visited;
}

std::vector<Coord> flood_fill(const BinaryMask& mask, Coord seed, Adjacency adjacency) {
    const BinaryMask comp = component_mask(mask, seed, adjacency);
    std::vector<Coord> out;
    for (int r = 0; r < comp.height(); ++r)
        for (int c = 0; c < comp.width(); ++c)
            if (comp(r, c)) out.push_back({r, c});
    return out;
}

bool is_connected(const BinaryMask& mask, Adjacency adjacency) {
    const std::size_t total = count_foreground(mask);
    if (total == 0) return true;
    for (int r = 0; r < mask.height(); ++r)
        for (int c = 0; c < mask.width(); ++c)
            if (mask(r, c)) return count_foreground(component_mask(mask, {r, c}, adjacency)) == total;
    return true;
}

DiscreteMask sample_mask(const ProbMap& probs, Rng& rng) {
    probs.validate();
    DiscreteMask out(probs.height(), probs.width());
    const int classes = probs.classes();
    for (std::size_t i = 0; i < probs.pixels(); ++i) {
        const double u = rng.uniform();
        double cumulative = 0.0;
        int label = classes - 1;
        for (int k = 0; k < classes - 1; ++k) {
            cumulative += probs(i, k);
            if (u < cumulative) {
                label = k;
                break;
            }
        }
        out[i] = label;
    }
    return out;
}

DiscreteMask argmax(const ProbMap& probs) {
    DiscreteMask out(probs.height(), probs.width());
    for (std::size_t i = 0; i < probs.pixels(); ++i) {
        int best = 0;
        for (int k = 1; k < probs.classes(); ++k)
            if (probs(i, k) > probs(i, best)) best = k;
        out[i] = best;
    }
    return out;
}

}  // namespace cavat

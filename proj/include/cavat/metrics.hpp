#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cavat/grid.hpp"

namespace cavat {

/// Dice overlap 2|A n B| / (|A| + |B|). Both empty gives 1.
double dsc(const BinaryMask& pred, const BinaryMask& gt);

/// Physical size of one pixel step along each axis.
struct Spacing {
    double row = 1.0;
    double col = 1.0;
};

/// Symmetric Hausdorff distance with Euclidean pixel distance.
/// Throws UndefinedMetric when either mask is empty.
double hausdorff(const BinaryMask& a, const BinaryMask& b, Spacing spacing = {});

/// Percentage of foreground outside the component of a uniformly drawn
/// foreground seed. Empty foreground gives 0.
double n_conn(const BinaryMask& pred, Rng& rng, Adjacency adjacency = Adjacency::Four);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for fewer than two values
    std::size_t count = 0;
};

MeanStd mean_std(std::span<const double> values);

struct ImageMetrics {
    double dsc = 0.0;
    std::optional<double> hd;  // missing when either mask is empty
    MeanStd n_conn;            // over repeated seed draws
};

struct MetricConfig {
    int n_conn_draws = 5;
    Adjacency adjacency = Adjacency::Four;
    Spacing spacing;
    int foreground_label = 1;
};

ImageMetrics image_metrics(const DiscreteMask& pred, const DiscreteMask& gt, const MetricConfig& cfg, Rng& rng);

struct MetricReport {
    std::vector<ImageMetrics> per_image;
    double dsc = 0.0;
    double hd = 0.0;  // mean over images where it is defined
    std::size_t hd_missing = 0;
    double n_conn = 0.0;
};

MetricReport evaluate_masks(std::span<const DiscreteMask> preds, std::span<const DiscreteMask> gts,
                            const MetricConfig& cfg, Rng& rng);

}  // namespace cavat

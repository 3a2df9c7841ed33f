#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cavat/losses.hpp"

namespace cavat {

/// Parameters of the synthetic connected-blob generator.
struct ShapeParams {
    int height = 32;
    int width = 32;
    double min_area = 0.05;  // foreground fraction band
    double max_area = 0.40;
    int min_discs = 2;
    int max_discs = 6;
    double min_radius = 2.0;  // pixels
    double max_radius = 6.0;
    double foreground_offset = 1.0;
    double noise_sigma = 0.5;
    double gradient_amplitude = 0.5;  // peak-to-peak of the smooth background ramp
    int clutter_spots = 0;            // small bright spots that are not part of the mask
    double clutter_offset = 0.8;
    double clutter_radius = 1.2;
    int max_retries = 200;

    void validate() const;
};

struct SplitManifest {
    std::vector<int> labeled;
    std::vector<int> unlabeled;
    std::vector<int> validation;

    friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

struct Dataset {
    std::vector<Sample> samples;
    int classes = 2;
    std::uint64_t seed = 0;
    ShapeParams params;
    SplitManifest split;

    friend bool operator==(const Dataset& a, const Dataset& b) {
        return a.samples == b.samples && a.classes == b.classes && a.seed == b.seed && a.split == b.split;
    }
};

/// n noisy renderings of single connected blobs (unions of overlapping discs).
/// Masks are re-checked with flood fill and regenerated on failure; throws
/// GenerationFailure after params.max_retries attempts for one image.
Dataset gen_shapes(int n, const ShapeParams& params, Rng& rng);

/// Seeded partition: round(val_fraction * n) validation images, then
/// round(labeled_ratio * n_train) labeled (at least one), the rest unlabeled.
void split_dataset(Dataset& ds, double labeled_ratio, double val_fraction, Rng& rng);

/// Zero mean, unit variance. A constant image maps to zeros.
Image normalize_image(const Image& x);
void normalize_images(Dataset& ds);

// On-disk layout (one directory per dataset):
//   manifest.txt       "key = value" lines
//   images/NNNNN.txt   "H W 1" header, then H rows of W decimal reals
//   masks/NNNNN.txt    same header, integer labels
// Reals are written in shortest round-trip form so reading back is bit exact.
void write_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& dir);

Image read_image_file(const std::filesystem::path& path);
DiscreteMask read_mask_file(const std::filesystem::path& path);
void write_image_file(const std::filesystem::path& path, const Image& image);
void write_mask_file(const std::filesystem::path& path, const DiscreteMask& mask);

}  // namespace cavat

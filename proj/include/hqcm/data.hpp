#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hqcm/rng.hpp"
#include "hqcm/tensor.hpp"

namespace hqcm {

// ---------------------------------------------------------------- PGM I/O

/// 8-bit binary PGM (P5, maxval 255). Values as bytes, row-major.
struct PgmImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};

PgmImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const PgmImage& img);

// ----------------------------------------------------------------- dataset

enum class Split { train, val, test };

std::string split_name(Split s);
Split split_from_name(const std::string& name);

struct Sample {
    Tensor<float> image;  // [1, H, W] in [0, 1]
    Tensor<float> mask;   // [1, H, W] in {0, 1}
    int label = 0;
    Split split = Split::train;
    bool degenerate = false;  // constant source image mapped to all zeros
};

struct Dataset {
    std::vector<Sample> samples;
    int num_classes = 0;
    int image_size = 0;

    std::vector<std::size_t> indices(Split split) const;
    std::vector<int> labels(Split split) const;
};

struct ManifestRow {
    std::string image_path;
    std::string mask_path;
    int label = 0;
    Split split = Split::train;
};

/// CSV with header `image,mask,label,split`; paths relative to the manifest.
std::vector<ManifestRow> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestRow>& rows);

// ------------------------------------------------------------- generation

struct SyntheticSummary {
    std::string manifest_path;
    std::vector<int> class_counts;                 // per class
    std::vector<std::vector<int>> split_counts;    // [class][train, val, test]
};

/// Writes n image+mask PGM pairs under out_dir plus manifest.csv. Four
/// balanced classes: 0 = textured ellipse with no lesion, 1 = bright
/// peripheral blob, 2 = irregular mid-intensity multi-lobe blob, 3 = small
/// bright central blob. Gaussian noise sigma 0.05; masks are the exact
/// lesion support; byte-identical output per (n, size, seed). The 70/15/15
/// split is per class via a seeded shuffle.
SyntheticSummary generate_synthetic(int n, int size, std::uint64_t seed, const std::string& out_dir);

/// Reads a manifest, resizes to image_size (nearest neighbour), min-max
/// scales each image to [0,1] (constant images map to zero and are
/// flagged), binarizes masks at 0.5.
Dataset load_dataset(const std::string& manifest_path, int image_size);

// ----------------------------------------------------------- augmentation

/// Independent horizontal flip (p=0.5), vertical flip (p=0.5) and rotation
/// by k*90 degrees (k uniform in 0..3), identical on image and mask. Draw
/// order: hflip, vflip, k. Augmentation PRNG convention: Pcg32(seed + epoch,
/// stream = sample index).
Sample augment(const Sample& sample, Pcg32& rng);

// transform primitives, exposed for tests
Tensor<float> flip_horizontal(const Tensor<float>& img);
Tensor<float> flip_vertical(const Tensor<float>& img);
/// 90-degree clockwise rotation (square images).
Tensor<float> rotate90(const Tensor<float>& img);

}  // namespace hqcm

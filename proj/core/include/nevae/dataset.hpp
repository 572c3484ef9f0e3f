#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "nevae/rng.hpp"
#include "nevae/tensor.hpp"

namespace nevae {

// Immutable after load; rows are flattened images with values in [0, 1].
struct Dataset {
    std::vector<double> images;  // [n, pixels] row-major
    std::size_t n = 0;
    std::size_t pixels = 0;
    std::size_t image_side = 0;  // 0 when the pixel count is not a square
    std::vector<int> labels;     // empty when unlabeled

    bool has_labels() const { return !labels.empty(); }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(images).subspan(i * pixels, pixels);
    }
    Tensor batch(std::span<const std::size_t> indices) const;
};

struct SyntheticSpec {
    std::size_t intrinsic_dim = 4;
    std::size_t ambient_dim = 784;
    std::size_t n_samples = 1024;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

// IDX containers: big-endian magic 0x00000803 (images, dims [n, rows, cols])
// or 0x00000801 (labels, dims [n]), unsigned-byte payload. Pixels are scaled
// to [0, 1] on load.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::optional<std::filesystem::path>& labels_path = std::nullopt);
void write_idx_images(const std::filesystem::path& path, const Dataset& dataset);
void write_idx_labels(const std::filesystem::path& path, const std::vector<int>& labels);

enum class BinarizeMode { Threshold, Stochastic };

// Threshold mode maps x >= 0.5 to 1; stochastic mode draws Bernoulli(x) once,
// fixed by the seed.
Dataset binarize(const Dataset& dataset, BinarizeMode mode, std::uint64_t seed = 0);

// Uniform latent factors in [-1, 1]^k pushed through a fixed random linear map
// and a sigmoid, plus optional Gaussian pixel noise clamped back to [0, 1].
Dataset make_synthetic(const SyntheticSpec& spec);

// Deterministic stratified subsample; requires labels.
Dataset subsample_per_class(const Dataset& dataset, std::size_t n_per_class, std::uint64_t seed);

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices);

std::uint64_t fnv1a64(std::span<const unsigned char> bytes);
std::uint64_t hash_file(const std::filesystem::path& path);
std::uint64_t hash_dataset(const Dataset& dataset);

}  // namespace nevae

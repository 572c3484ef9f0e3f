#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nevae/image.hpp"
#include "nevae/model.hpp"

namespace nevae {

enum class TraverseKind { SingleDim, RandomDirection };

struct TraverseSpec {
    TraverseKind kind = TraverseKind::SingleDim;
    std::size_t dim = 0;        // single_dim target dimension
    std::size_t n_points = 100;
    double lo = -10.0;          // single_dim grid endpoints
    double hi = 10.0;
    double radius = 10.0;       // random_direction endpoint norm
    std::vector<std::size_t> zero_dims;  // random_direction: dims pinned to 0
    std::uint64_t seed = 0;
};

// single_dim: a linear grid on one dimension with all others at zero.
// random_direction: n_points equally spaced from the origin to radius times a
// uniform sphere direction, drawn with zero_dims masked out and the remainder
// renormalized. Returns [n_points, n_z].
Tensor traverse_codes(const TraverseSpec& spec, std::size_t n_z);

// Indices of the k largest activity values; ties go to the lower index.
std::vector<std::size_t> zero_top_active(const std::vector<double>& activity, std::size_t k);

// Decodes each code, quantizes probabilities with round-half-up of 255 * p,
// and tiles row-major with 1-pixel black separators (outer border included).
GrayImage render_grid(const Tensor& codes, const DecoderParams& decoder, std::size_t rows,
                      std::size_t cols);

// traverse_<kind>_<dim|seed>.pgm
std::string traverse_filename(const TraverseSpec& spec);

}  // namespace nevae

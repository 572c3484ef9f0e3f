#include "nevae/traverse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nevae/rng.hpp"

namespace nevae {

Tensor traverse_codes(const TraverseSpec& spec, std::size_t n_z) {
    if (spec.n_points < 2)
        throw ConfigError("traverse_codes: need at least 2 points");
    for (auto d : spec.zero_dims)
        if (d >= n_z)
            throw ConfigError("traverse_codes: zero_dim " + std::to_string(d) +
                              " out of range for n_z = " + std::to_string(n_z));

    std::vector<double> codes(spec.n_points * n_z, 0.0);

    if (spec.kind == TraverseKind::SingleDim) {
        if (spec.dim >= n_z)
            throw ConfigError("traverse_codes: dim " + std::to_string(spec.dim) +
                              " out of range for n_z = " + std::to_string(n_z));
        if (!(spec.lo < spec.hi))
            throw ConfigError("traverse_codes: need lo < hi");
        const double step = (spec.hi - spec.lo) / static_cast<double>(spec.n_points - 1);
        for (std::size_t i = 0; i < spec.n_points; ++i)
            codes[i * n_z + spec.dim] = spec.lo + step * static_cast<double>(i);
        return Tensor::from_data({spec.n_points, n_z}, std::move(codes));
    }

    if (!(spec.radius > 0.0)) throw ConfigError("traverse_codes: radius must be positive");
    if (spec.zero_dims.size() >= n_z) {
        std::vector<std::size_t> uniq = spec.zero_dims;
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        if (uniq.size() >= n_z)
            throw ConfigError("traverse_codes: zero_dims pin every dimension");
    }

    Rng rng(spec.seed);
    std::vector<double> dir(n_z);
    double norm = 0.0;
    do {
        dir = rng.normal_vector(n_z);
        for (auto d : spec.zero_dims) dir[d] = 0.0;
        norm = std::sqrt(std::inner_product(dir.begin(), dir.end(), dir.begin(), 0.0));
    } while (norm < 1e-12);
    for (auto& v : dir) v /= norm;

    for (std::size_t i = 0; i < spec.n_points; ++i) {
        const double t =
            spec.radius * static_cast<double>(i) / static_cast<double>(spec.n_points - 1);
        for (std::size_t j = 0; j < n_z; ++j) codes[i * n_z + j] = t * dir[j];
    }
    return Tensor::from_data({spec.n_points, n_z}, std::move(codes));
}

std::vector<std::size_t> zero_top_active(const std::vector<double>& activity, std::size_t k) {
    if (k > activity.size())
        throw ConfigError("zero_top_active: k = " + std::to_string(k) + " exceeds " +
                          std::to_string(activity.size()) + " dimensions");
    std::vector<std::size_t> order(activity.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return activity[a] > activity[b];  // stable: ties keep the lower index first
    });
    order.resize(k);
    std::sort(order.begin(), order.end());
    return order;
}

GrayImage render_grid(const Tensor& codes, const DecoderParams& decoder, std::size_t rows,
                      std::size_t cols) {
    if (codes.rank() != 2)
        throw ShapeError("render_grid: codes must be [n, n_z], got " + shape_str(codes.shape()));
    const std::size_t n = codes.shape()[0];
    if (rows * cols < n)
        throw ConfigError("render_grid: layout " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " too small for " + std::to_string(n) + " tiles");
    const auto side = static_cast<std::size_t>(
        std::llround(std::sqrt(static_cast<double>(decoder.pixels))));
    if (side * side != decoder.pixels)
        throw ConfigError("render_grid: decoder pixel count " + std::to_string(decoder.pixels) +
                          " is not square");

    const Reconstruction recon = decode(codes, decoder);
    const auto probs = recon.probs.data();

    GrayImage img;
    img.width = cols * side + cols + 1;
    img.height = rows * side + rows + 1;
    img.pixels.assign(img.width * img.height, 0);

    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t r = t / cols;
        const std::size_t c = t % cols;
        const std::size_t y0 = 1 + r * (side + 1);
        const std::size_t x0 = 1 + c * (side + 1);
        for (std::size_t y = 0; y < side; ++y)
            for (std::size_t x = 0; x < side; ++x) {
                const double p = probs[t * decoder.pixels + y * side + x];
                const auto v = static_cast<std::uint8_t>(std::floor(255.0 * p + 0.5));
                img.pixels[(y0 + y) * img.width + (x0 + x)] = v;
            }
    }
    return img;
}

std::string traverse_filename(const TraverseSpec& spec) {
    if (spec.kind == TraverseKind::SingleDim)
        return "traverse_single_dim_" + std::to_string(spec.dim) + ".pgm";
    return "traverse_random_direction_" + std::to_string(spec.seed) + ".pgm";
}

}  // namespace nevae

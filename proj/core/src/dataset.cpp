#include "nevae/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

namespace nevae {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;
constexpr std::uint64_t kMaxElements = 1ull << 32;

std::uint32_t read_u32_be(std::ifstream& is, const std::filesystem::path& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw TruncatedFileError(path.string() + " ends inside the IDX header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

void write_u32_be(std::ofstream& os, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::string hex_magic(std::uint32_t m) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", m);
    return buf;
}

std::size_t isqrt_exact(std::size_t n) {
    const auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    return r * r == n ? r : 0;
}

}  // namespace

Tensor Dataset::batch(std::span<const std::size_t> indices) const {
    std::vector<double> out(indices.size() * pixels);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto r = row(indices[i]);
        std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(i * pixels));
    }
    return Tensor::from_data({indices.size(), pixels}, std::move(out));
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::optional<std::filesystem::path>& labels_path) {
    std::ifstream is(images_path, std::ios::binary);
    if (!is) throw IoError("cannot open " + images_path.string());

    const std::uint32_t magic = read_u32_be(is, images_path);
    if (magic != kImagesMagic)
        throw BadMagicError(images_path.string() + ": magic " + hex_magic(magic) +
                            " is not an IDX image file (" + hex_magic(kImagesMagic) + ")");
    const std::uint64_t n = read_u32_be(is, images_path);
    const std::uint64_t rows = read_u32_be(is, images_path);
    const std::uint64_t cols = read_u32_be(is, images_path);
    if (rows != 0 && cols != 0 && n > kMaxElements / rows / cols)
        throw DimensionOverflowError(images_path.string() + ": declared " + std::to_string(n) +
                                     "x" + std::to_string(rows) + "x" + std::to_string(cols) +
                                     " exceeds the supported size");

    Dataset ds;
    ds.n = n;
    ds.pixels = rows * cols;
    ds.image_side = rows == cols ? rows : isqrt_exact(ds.pixels);
    std::vector<unsigned char> raw(ds.n * ds.pixels);
    if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw TruncatedFileError(images_path.string() + " is shorter than its declared " +
                                 std::to_string(ds.n) + " images");
    ds.images.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) ds.images[i] = raw[i] / 255.0;

    if (labels_path) {
        std::ifstream ls(*labels_path, std::ios::binary);
        if (!ls) throw IoError("cannot open " + labels_path->string());
        const std::uint32_t lmagic = read_u32_be(ls, *labels_path);
        if (lmagic != kLabelsMagic)
            throw BadMagicError(labels_path->string() + ": magic " + hex_magic(lmagic) +
                                " is not an IDX label file (" + hex_magic(kLabelsMagic) + ")");
        const std::uint64_t ln = read_u32_be(ls, *labels_path);
        if (ln != ds.n)
            throw IoError("label count " + std::to_string(ln) + " does not match " +
                          std::to_string(ds.n) + " images");
        std::vector<unsigned char> lraw(ln);
        if (!ls.read(reinterpret_cast<char*>(lraw.data()), static_cast<std::streamsize>(ln)))
            throw TruncatedFileError(labels_path->string() + " is shorter than its declared " +
                                     std::to_string(ln) + " labels");
        ds.labels.assign(lraw.begin(), lraw.end());
    }
    return ds;
}

void write_idx_images(const std::filesystem::path& path, const Dataset& dataset) {
    const std::size_t side = dataset.image_side ? dataset.image_side : 1;
    const std::size_t rows = dataset.image_side ? side : 1;
    const std::size_t cols = dataset.image_side ? side : dataset.pixels;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    write_u32_be(os, kImagesMagic);
    write_u32_be(os, static_cast<std::uint32_t>(dataset.n));
    write_u32_be(os, static_cast<std::uint32_t>(rows));
    write_u32_be(os, static_cast<std::uint32_t>(cols));
    std::vector<unsigned char> raw(dataset.images.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        raw[i] = static_cast<unsigned char>(std::llround(dataset.images[i] * 255.0));
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!os) throw IoError("write failed for " + path.string());
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<int>& labels) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    write_u32_be(os, kLabelsMagic);
    write_u32_be(os, static_cast<std::uint32_t>(labels.size()));
    for (int v : labels) {
        const auto b = static_cast<unsigned char>(v);
        os.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!os) throw IoError("write failed for " + path.string());
}

Dataset binarize(const Dataset& dataset, BinarizeMode mode, std::uint64_t seed) {
    Dataset out = dataset;
    if (mode == BinarizeMode::Threshold) {
        for (auto& v : out.images) v = v >= 0.5 ? 1.0 : 0.0;
    } else {
        Rng rng(seed);
        for (auto& v : out.images) v = rng.bernoulli(v) ? 1.0 : 0.0;
    }
    return out;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.intrinsic_dim < 1 || spec.intrinsic_dim >= spec.ambient_dim)
        throw ConfigError("make_synthetic: need 1 <= intrinsic_dim < ambient_dim");
    const std::size_t k = spec.intrinsic_dim;
    const std::size_t d = spec.ambient_dim;
    Rng rng(spec.seed);

    // Fixed map with column scale 3/sqrt(k): pre-sigmoid values spread over a
    // few units without saturating.
    const double scale = 3.0 / std::sqrt(static_cast<double>(k));
    std::vector<double> map = rng.normal_vector(k * d);
    for (auto& m : map) m *= scale;

    std::vector<double> factors = rng.uniform_vector(spec.n_samples * k, -1.0, 1.0);

    Dataset ds;
    ds.n = spec.n_samples;
    ds.pixels = d;
    ds.image_side = isqrt_exact(d);
    ds.images.assign(spec.n_samples * d, 0.0);
    for (std::size_t i = 0; i < spec.n_samples; ++i) {
        for (std::size_t f = 0; f < k; ++f) {
            const double fv = factors[i * k + f];
            for (std::size_t j = 0; j < d; ++j) ds.images[i * d + j] += fv * map[f * d + j];
        }
    }
    for (auto& v : ds.images) v = 1.0 / (1.0 + std::exp(-v));
    if (spec.noise_sigma > 0.0) {
        for (auto& v : ds.images)
            v = std::clamp(v + spec.noise_sigma * rng.normal(), 0.0, 1.0);
    }
    return ds;
}

Dataset subset(const Dataset& dataset, std::span<const std::size_t> indices) {
    Dataset out;
    out.n = indices.size();
    out.pixels = dataset.pixels;
    out.image_side = dataset.image_side;
    out.images.resize(out.n * out.pixels);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto r = dataset.row(indices[i]);
        std::copy(r.begin(), r.end(), out.images.begin() + static_cast<std::ptrdiff_t>(i * out.pixels));
    }
    if (dataset.has_labels()) {
        out.labels.resize(out.n);
        for (std::size_t i = 0; i < indices.size(); ++i) out.labels[i] = dataset.labels[indices[i]];
    }
    return out;
}

Dataset subsample_per_class(const Dataset& dataset, std::size_t n_per_class, std::uint64_t seed) {
    if (!dataset.has_labels())
        throw ConfigError("subsample_per_class: dataset has no labels");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < dataset.n; ++i) by_class[dataset.labels[i]].push_back(i);

    std::vector<std::size_t> chosen;
    Rng rng(seed);
    for (auto& [label, members] : by_class) {
        Rng class_rng = rng.split(static_cast<std::uint64_t>(label));
        class_rng.shuffle(members);
        const std::size_t take = std::min(n_per_class, members.size());
        chosen.insert(chosen.end(), members.begin(),
                      members.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(chosen.begin(), chosen.end());
    return subset(dataset, chosen);
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (is.read(buf, sizeof buf) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::uint64_t hash_dataset(const Dataset& dataset) {
    const auto* p = reinterpret_cast<const unsigned char*>(dataset.images.data());
    std::uint64_t h = fnv1a64({p, dataset.images.size() * sizeof(double)});
    if (dataset.has_labels()) {
        const auto* lp = reinterpret_cast<const unsigned char*>(dataset.labels.data());
        h ^= fnv1a64({lp, dataset.labels.size() * sizeof(int)});
    }
    return h;
}

}  // namespace nevae

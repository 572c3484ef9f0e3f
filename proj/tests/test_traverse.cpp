#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "linalg.hpp"
#include "nevae/traverse.hpp"

using namespace nevae;
namespace fs = std::filesystem;

TEST(TraverseCodes, SingleDimGrid) {
    TraverseSpec spec;
    spec.kind = TraverseKind::SingleDim;
    spec.dim = 0;
    spec.n_points = 3;
    const Tensor codes = traverse_codes(spec, 2);
    ASSERT_EQ(codes.shape(), (Shape{3, 2}));
    EXPECT_DOUBLE_EQ(codes.at(0, 0), -10.0);
    EXPECT_DOUBLE_EQ(codes.at(1, 0), 0.0);
    EXPECT_DOUBLE_EQ(codes.at(2, 0), 10.0);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(codes.at(i, 1), 0.0);
}

TEST(TraverseCodes, SingleDimMidpointOfSymmetricRangeIsZero) {
    TraverseSpec spec;
    spec.n_points = 101;
    spec.dim = 3;
    const Tensor codes = traverse_codes(spec, 5);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_DOUBLE_EQ(codes.at(50, j), 0.0);
}

TEST(TraverseCodes, RandomDirectionEndpointNorm) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        TraverseSpec spec;
        spec.kind = TraverseKind::RandomDirection;
        spec.n_points = 100;
        spec.radius = 10.0;
        spec.seed = seed;
        const Tensor codes = traverse_codes(spec, 32);
        double norm2 = 0.0;
        for (std::size_t j = 0; j < 32; ++j) {
            const double v = codes.at(99, j);
            norm2 += v * v;
        }
        EXPECT_NEAR(std::sqrt(norm2), 10.0, 1e-9);
        for (std::size_t j = 0; j < 32; ++j) EXPECT_DOUBLE_EQ(codes.at(0, j), 0.0);
    }
}

TEST(TraverseCodes, ZeroDimsMaskedAndRenormalized) {
    TraverseSpec spec;
    spec.kind = TraverseKind::RandomDirection;
    spec.n_points = 10;
    spec.radius = 10.0;
    spec.seed = 4;
    spec.zero_dims = {1, 3};
    const Tensor codes = traverse_codes(spec, 6);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_DOUBLE_EQ(codes.at(i, 1), 0.0);
        EXPECT_DOUBLE_EQ(codes.at(i, 3), 0.0);
    }
    double norm2 = 0.0;
    for (std::size_t j = 0; j < 6; ++j) norm2 += codes.at(9, j) * codes.at(9, j);
    EXPECT_NEAR(std::sqrt(norm2), 10.0, 1e-9);
}

TEST(TraverseCodes, RandomDirectionIsCollinear) {
    TraverseSpec spec;
    spec.kind = TraverseKind::RandomDirection;
    spec.n_points = 25;
    spec.seed = 5;
    const Tensor codes = traverse_codes(spec, 8);
    std::vector<double> m(codes.data().begin(), codes.data().end());
    EXPECT_EQ(oracles::numerical_rank(m, 25, 8, 1e-9), 1u);
}

TEST(TraverseCodes, DegenerateSpecsRejected) {
    TraverseSpec all_zeroed;
    all_zeroed.kind = TraverseKind::RandomDirection;
    all_zeroed.zero_dims = {0, 1, 2};
    EXPECT_THROW(traverse_codes(all_zeroed, 3), ConfigError);

    TraverseSpec one_point;
    one_point.n_points = 1;
    EXPECT_THROW(traverse_codes(one_point, 3), ConfigError);

    TraverseSpec bad_dim;
    bad_dim.dim = 9;
    EXPECT_THROW(traverse_codes(bad_dim, 3), ConfigError);
}

TEST(ZeroTopActive, OrderStatisticAndTies) {
    EXPECT_EQ(zero_top_active({0.5, 0.001, 0.3}, 2), (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(zero_top_active({0.5, 0.001, 0.3}, 0), (std::vector<std::size_t>{}));
    // Tie at 0.3: the lower index wins the second slot.
    EXPECT_EQ(zero_top_active({0.3, 0.5, 0.3}, 2), (std::vector<std::size_t>{0, 1}));
    EXPECT_THROW(zero_top_active({0.1}, 2), ConfigError);
}

namespace {

DecoderParams zero_decoder(std::size_t n_z, std::size_t pixels) {
    Rng rng(1);
    DecoderParams dec = make_decoder(n_z, {4}, pixels, rng);
    for (auto* p : dec.net.params()) {
        auto d = p->mutable_data();
        std::fill(d.begin(), d.end(), 0.0);
    }
    return dec;
}

}  // namespace

TEST(RenderGrid, MidGrayTileWithBorder) {
    DecoderParams dec = zero_decoder(2, 16);  // probs = 0.5 everywhere
    const Tensor code = Tensor::zeros({1, 2});
    const GrayImage img = render_grid(code, dec, 1, 1);
    // One 4x4 tile plus a 1-pixel border on every side.
    EXPECT_EQ(img.width, 6u);
    EXPECT_EQ(img.height, 6u);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) {
            const bool border = y == 0 || y == 5 || x == 0 || x == 5;
            EXPECT_EQ(img.pixels[y * img.width + x], border ? 0 : 128);
        }
}

TEST(RenderGrid, LayoutValidation) {
    DecoderParams dec = zero_decoder(2, 16);
    const Tensor codes = Tensor::zeros({5, 2});
    EXPECT_THROW(render_grid(codes, dec, 2, 2), ConfigError);
    const GrayImage img = render_grid(codes, dec, 2, 3);
    EXPECT_EQ(img.width, 3u * 4 + 4);
    EXPECT_EQ(img.height, 2u * 4 + 3);
}

TEST(RenderGrid, ByteReproducible) {
    Rng rng(6);
    DecoderParams dec = make_decoder(3, {8}, 16, rng);
    const Tensor codes = Tensor::from_data({4, 3}, rng.normal_vector(12));
    const GrayImage a = render_grid(codes, dec, 2, 2);
    const GrayImage b = render_grid(codes, dec, 2, 2);
    EXPECT_EQ(a.pixels, b.pixels);
}

TEST(Pgm, WriteReadRoundTrip) {
    GrayImage img;
    img.width = 3;
    img.height = 2;
    img.pixels = {0, 127, 255, 10, 20, 30};
    const fs::path path = fs::temp_directory_path() / "nevae_test.pgm";
    write_pgm(path, img);

    std::ifstream is(path, std::ios::binary);
    std::string header;
    std::getline(is, header);
    EXPECT_EQ(header, "P5");

    const GrayImage back = read_pgm(path);
    EXPECT_EQ(back.width, 3u);
    EXPECT_EQ(back.height, 2u);
    EXPECT_EQ(back.pixels, img.pixels);
    fs::remove(path);
}

TEST(TraverseFilename, Patterns) {
    TraverseSpec single;
    single.dim = 3;
    EXPECT_EQ(traverse_filename(single), "traverse_single_dim_3.pgm");
    TraverseSpec random;
    random.kind = TraverseKind::RandomDirection;
    random.seed = 17;
    EXPECT_EQ(traverse_filename(random), "traverse_random_direction_17.pgm");
}

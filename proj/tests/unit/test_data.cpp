#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "cavat/data.hpp"
#include "oracles.hpp"

using namespace cavat;
namespace fs = std::filesystem;

namespace {

const fs::path kGolden = fs::path(CAVAT_TEST_DATA_DIR) / "golden";

Dataset make_plain(int n) {
    Dataset ds;
    for (int i = 0; i < n; ++i) ds.samples.push_back({Image(2, 2, i), DiscreteMask(2, 2)});
    return ds;
}

class TempDir : public ::testing::Test {
protected:
    fs::path dir = fs::temp_directory_path() / ("cavat_data_" + std::to_string(::getpid()));
    void SetUp() override { fs::create_directories(dir); }
    void TearDown() override { fs::remove_all(dir); }
};

}  // namespace

TEST(GenShapes, EveryMaskIsOneConnectedBlob) {
    ShapeParams p;
    Rng rng(1);
    const auto ds = gen_shapes(100, p, rng);
    ASSERT_EQ(ds.samples.size(), 100u);
    int in_band = 0;
    for (const auto& s : ds.samples) {
        const auto fg = foreground(s.mask);
        const auto n = oracle::foreground_pixels(fg).size();
        ASSERT_GT(n, 0u);
        ASSERT_TRUE(oracle::globally_connected(fg));
        const double frac = static_cast<double>(n) / fg.size();
        in_band += frac >= p.min_area && frac <= p.max_area;
        for (double v : s.image.values()) ASSERT_TRUE(std::isfinite(v));
    }
    EXPECT_GE(in_band, 95);
}

TEST(GenShapes, ForegroundIsBrighterOnAverage) {
    ShapeParams p;
    Rng rng(2);
    const auto ds = gen_shapes(20, p, rng);
    double fg = 0, bg = 0;
    int nf = 0, nb = 0;
    for (const auto& s : ds.samples)
        for (std::size_t i = 0; i < s.image.size(); ++i) {
            if (s.mask[i]) {
                fg += s.image[i];
                ++nf;
            } else {
                bg += s.image[i];
                ++nb;
            }
        }
    EXPECT_GT(fg / nf - bg / nb, 0.5 * p.foreground_offset);
}

TEST(GenShapes, DeterministicAndPrefixStable) {
    ShapeParams p;
    Rng a(3), b(3), c(3);
    const auto da = gen_shapes(12, p, a);
    EXPECT_EQ(da, gen_shapes(12, p, b));
    const auto dc = gen_shapes(5, p, c);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(dc.samples[i], da.samples[i]);
}

TEST(GenShapes, ClutterStaysOutOfTheMask) {
    ShapeParams p;
    p.clutter_spots = 3;
    p.noise_sigma = 0.0;
    p.gradient_amplitude = 0.0;
    Rng rng(4);
    const auto ds = gen_shapes(10, p, rng);
    for (const auto& s : ds.samples) {
        EXPECT_TRUE(oracle::globally_connected(foreground(s.mask)));
        int bright_bg = 0;
        for (std::size_t i = 0; i < s.image.size(); ++i) bright_bg += !s.mask[i] && s.image[i] > 0.4;
        EXPECT_GT(bright_bg, 0);
    }
}

TEST(GenShapes, InvalidAndImpossibleParams) {
    Rng rng(5);
    ShapeParams small;
    small.height = 8;
    EXPECT_THROW(gen_shapes(1, small, rng), InvalidArgument);
    EXPECT_THROW(gen_shapes(0, ShapeParams{}, rng), InvalidArgument);
    ShapeParams impossible;
    impossible.min_area = 0.9;
    impossible.max_area = 0.95;
    impossible.max_radius = 3;
    impossible.max_discs = 2;
    impossible.max_retries = 5;
    EXPECT_THROW(gen_shapes(1, impossible, rng), GenerationFailure);
}

TEST(Split, CountsFollowRounding) {
    auto ds = make_plain(500);
    Rng rng(6);
    split_dataset(ds, 0.05, 0.2, rng);
    EXPECT_EQ(ds.split.validation.size(), 100u);
    EXPECT_EQ(ds.split.labeled.size(), 20u);
    EXPECT_EQ(ds.split.unlabeled.size(), 380u);
}

TEST(Split, IsAPartition) {
    auto ds = make_plain(97);
    Rng rng(7);
    split_dataset(ds, 0.1, 0.25, rng);
    std::set<int> all;
    for (const auto* part : {&ds.split.labeled, &ds.split.unlabeled, &ds.split.validation})
        for (int id : *part) EXPECT_TRUE(all.insert(id).second) << id;
    EXPECT_EQ(all.size(), 97u);
}

TEST(Split, FullyLabeledAndDeterministic) {
    auto a = make_plain(40), b = make_plain(40);
    Rng ra(8), rb(8);
    split_dataset(a, 1.0, 0.0, ra);
    split_dataset(b, 1.0, 0.0, rb);
    EXPECT_EQ(a.split.labeled.size(), 40u);
    EXPECT_TRUE(a.split.unlabeled.empty());
    EXPECT_EQ(a.split, b.split);
}

TEST(Split, TinyRatioClampsToOneLabeled) {
    auto ds = make_plain(10);
    Rng rng(9);
    testing::internal::CaptureStderr();
    split_dataset(ds, 0.01, 0.0, rng);
    const auto err = testing::internal::GetCapturedStderr();
    EXPECT_EQ(ds.split.labeled.size(), 1u);
    EXPECT_NE(err.find("warning"), std::string::npos);
}

TEST(Split, InvalidRatios) {
    auto ds = make_plain(10);
    Rng rng(10);
    EXPECT_THROW(split_dataset(ds, 0.0, 0.1, rng), InvalidArgument);
    EXPECT_THROW(split_dataset(ds, 1.5, 0.1, rng), InvalidArgument);
    EXPECT_THROW(split_dataset(ds, 0.5, 1.0, rng), InvalidArgument);
}

TEST(Normalize, ZeroMeanUnitVariance) {
    Image x(3, 4);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 3.0 + i * i;
    const auto y = normalize_image(x);
    double m = 0, v = 0;
    for (double t : y.values()) m += t;
    m /= 12;
    for (double t : y.values()) v += (t - m) * (t - m);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v / 12, 1.0, 1e-12);
    const auto flat = normalize_image(Image(2, 2, 5.0));
    for (double t : flat.values()) EXPECT_EQ(t, 0.0);
}

TEST(DatasetFiles, GoldenSample) {
    const auto ds = read_dataset(kGolden);
    ASSERT_EQ(ds.samples.size(), 2u);
    EXPECT_EQ(ds.classes, 2);
    EXPECT_EQ(ds.seed, 7u);
    const auto& x = ds.samples[0].image;
    ASSERT_EQ(x.height(), 2);
    ASSERT_EQ(x.width(), 3);
    EXPECT_EQ(x(0, 1), -1.25);
    EXPECT_EQ(x(1, 1), 0.035);
    EXPECT_EQ(ds.samples[0].mask, DiscreteMask(2, 3, std::vector<std::int32_t>{1, 0, 0, 1, 1, 0}));
    EXPECT_EQ(ds.samples[1].mask(1, 2), 1);
    EXPECT_EQ(ds.split.labeled, std::vector<int>{0});
    EXPECT_TRUE(ds.split.unlabeled.empty());
    EXPECT_EQ(ds.split.validation, std::vector<int>{1});
}

TEST_F(TempDir, RoundTripIsBitExact) {
    ShapeParams p;
    p.clutter_spots = 1;
    Rng rng(11);
    auto ds = gen_shapes(6, p, rng);
    split_dataset(ds, 0.5, 0.2, rng);
    write_dataset(dir / "ds", ds);
    const auto back = read_dataset(dir / "ds");
    EXPECT_EQ(back, ds);
    EXPECT_EQ(back.params.clutter_spots, 1);
}

TEST_F(TempDir, MalformedFilesRaiseParseError) {
    fs::copy(kGolden, dir / "g", fs::copy_options::recursive);
    {
        std::ofstream(dir / "g" / "images" / "00001.txt") << "2 3 1\n-2 -1 0\n1 2\n";
    }
    try {
        read_dataset(dir / "g");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    std::ofstream(dir / "g" / "images" / "00001.txt") << "2 3 1\n-2 -1 0\n";
    EXPECT_THROW(read_dataset(dir / "g"), ParseError);
    std::ofstream(dir / "g" / "images" / "00001.txt") << "2 3 1\n-2 -1 0\n1 2 x\n";
    EXPECT_THROW(read_dataset(dir / "g"), ParseError);
    std::ofstream(dir / "g" / "images" / "00001.txt") << "2 3 1\n-2 -1 0\n1 2 3\n";
    std::ofstream(dir / "g" / "masks" / "00001.txt") << "2 3 1\n0 0 0\n0 5 1\n";
    EXPECT_THROW(read_dataset(dir / "g"), ParseError);
    std::ofstream(dir / "g" / "manifest.txt") << "format = something-else\n";
    EXPECT_THROW(read_dataset(dir / "g"), ParseError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cavat/checkpoint.hpp"
#include "cavat/losses.hpp"
#include "cavat/net.hpp"
#include "fd.hpp"

using namespace cavat;

namespace {

Image random_image(int h, int w, Rng& rng) {
    Image x(h, w);
    for (auto& v : x.values()) v = rng.normal();
    return x;
}

// Parameters with non-zero biases and every hidden pre-activation at least
// `margin` away from the ReLU kink.
NetworkParams kink_free_params(const Network& net, const Image& x, std::uint64_t& seed, double margin = 1e-3) {
    for (;; ++seed) {
        Rng rng(seed);
        auto p = net.init_params(rng);
        for (auto& t : p.tensors())
            if (t.shape.size() == 1)
                for (auto& v : t.values) v = 0.1 * rng.normal();
        if (fd::min_hidden_margin(net.forward_pass(x, p)) > margin) return p;
    }
}

void expect_close(const GradientSet& analytic, const GradientSet& numeric) {
    for (const auto& e : fd::compare(analytic, numeric, 1e-7)) {
        EXPECT_LT(e.norm_rel, 1e-4) << e.name;
        EXPECT_LT(e.worst_rel, 1e-4) << e.name;
    }
}

}  // namespace

TEST(Network, ZeroParamsGiveUniform) {
    Network net;
    Rng rng(1);
    const auto p = net.forward(random_image(5, 7, rng), net.zero_params());
    for (double v : p.values()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Network, OutputsAreDistributions) {
    Network net({{4, 6}, 3, 3});
    Rng rng(2);
    const auto params = net.init_params(rng);
    const auto p = net.forward(random_image(6, 6, rng), params);
    EXPECT_EQ(p.classes(), 3);
    EXPECT_NO_THROW(p.validate());
    for (std::size_t i = 0; i < p.pixels(); ++i) {
        double s = 0;
        for (int k = 0; k < 3; ++k) s += p(i, k);
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Network, ForwardIsBitwiseDeterministic) {
    Network net;
    Rng rng(3);
    const auto params = net.init_params(rng);
    const auto x = random_image(8, 8, rng);
    EXPECT_EQ(net.forward(x, params), net.forward(x, params));
}

TEST(Network, ParameterLayout) {
    Network net;
    const auto p = net.zero_params();
    ASSERT_EQ(p.count(), 6u);
    EXPECT_EQ(p[0].name, "conv1.weight");
    EXPECT_EQ(p[0].shape, (std::vector<int>{8, 1, 3, 3}));
    EXPECT_EQ(p[5].name, "conv3.bias");
    EXPECT_EQ(p.parameter_count(), 8u * 9 + 8 + 16u * 8 * 9 + 16 + 2u * 16 * 9 + 2);
}

TEST(Network, ShapeMismatchRejected) {
    Network net;
    auto p = net.zero_params();
    p[0].values.pop_back();
    p[0].shape = {8, 1, 3, 2};
    Image x(4, 4);
    EXPECT_THROW(net.forward(x, p), InvalidArgument);
    EXPECT_THROW(Network({{}, 1, 3}), InvalidArgument);
    EXPECT_THROW(Network({{4}, 2, 2}), InvalidArgument);
}

TEST(Network, ConstantLossGivesZeroGradient) {
    Network net;
    Rng rng(4);
    const auto params = net.init_params(rng);
    const auto pass = net.forward_pass(random_image(6, 6, rng), params);
    const auto g = net.backward(pass, params, ProbAdjoint(pass.probs), true);
    EXPECT_EQ(g.params.norm(), 0.0);
    ASSERT_TRUE(g.input.has_value());
    for (double v : g.input->values()) EXPECT_EQ(v, 0.0);
}

TEST(Network, ConfidentCorrectPredictionHasTinyGradient) {
    Network net;
    auto params = net.zero_params();
    params[5].values = {-20.0, 20.0};
    const Image x(4, 4, 0.3);
    const DiscreteMask y(4, 4, 1);
    const auto pass = net.forward_pass(x, params);
    const auto g = net.backward(pass, params, cross_entropy_grad(pass.probs, y));
    EXPECT_LT(g.params.norm(), 1e-6);
    EXPECT_LT(cross_entropy(pass.probs, y), 1e-12);
}

TEST(Network, NonFiniteNamesTensor) {
    Network net;
    Rng rng(5);
    auto params = net.init_params(rng);
    params[2].values[0] = std::nan("");
    const auto x = random_image(4, 4, rng);
    try {
        const auto pass = net.forward_pass(x, params);
        net.backward(pass, params, cross_entropy_grad(pass.probs, DiscreteMask(4, 4, 1)));
        FAIL() << "expected NumericalFailure";
    } catch (const NumericalFailure& e) {
        EXPECT_FALSE(e.tensor().empty());
    }
}

TEST(NetworkGradient, CrossEntropyMatchesFiniteDifferences) {
    Network net;
    Rng rng(10);
    const auto x = random_image(8, 8, rng);
    DiscreteMask y(8, 8);
    for (auto& v : y.values()) v = rng.uniform() < 0.4 ? 1 : 0;
    std::uint64_t seed = 100;
    const auto params = kink_free_params(net, x, seed);
    const auto pass = net.forward_pass(x, params);
    const auto analytic = net.backward(pass, params, cross_entropy_grad(pass.probs, y)).params;
    const auto numeric = fd::central_difference(
        [&](const NetworkParams& p) { return cross_entropy(net.forward(x, p), y); }, params);
    expect_close(analytic, numeric);
}

TEST(NetworkGradient, LdsMatchesFiniteDifferences) {
    Network net;
    Rng rng(11);
    const auto x = random_image(8, 8, rng);
    Image r(8, 8);
    for (auto& v : r.values()) v = 0.3 * rng.normal();
    const auto xr = add_images(x, r);
    std::uint64_t seed = 200;
    const auto params = kink_free_params(net, xr, seed);
    const auto clean = net.forward(x, params);
    const auto pass = net.forward_pass(xr, params);
    const auto analytic = net.backward(pass, params, kl_lds_grad(clean, pass.probs)).params;
    // The clean prediction is a constant target.
    const auto numeric = fd::central_difference(
        [&](const NetworkParams& p) { return kl_lds(clean, net.forward(xr, p)); }, params);
    expect_close(analytic, numeric);
}

TEST(NetworkGradient, ReinforceSurrogateMatchesFiniteDifferences) {
    Network net;
    Rng rng(12);
    const auto x = random_image(8, 8, rng);
    std::uint64_t seed = 300;
    const auto params = kink_free_params(net, x, seed);
    const auto pass = net.forward_pass(x, params);
    ConnectivityConstraint constraint;
    Rng sample_rng(13);
    const auto samples = draw_constraint_samples(pass.probs, constraint, {8, false, {}}, sample_rng);
    const auto analytic = net.backward(pass, params, reinforce_surrogate_grad(pass.probs, samples)).params;
    const auto numeric = fd::central_difference(
        [&](const NetworkParams& p) { return reinforce_surrogate(net.forward(x, p), samples); }, params);
    expect_close(analytic, numeric);
}

TEST(NetworkGradient, InputGradientMatchesFiniteDifferences) {
    Network net;
    Rng rng(14);
    auto x = random_image(6, 6, rng);
    const DiscreteMask y(6, 6, 1);
    std::uint64_t seed = 400;
    const auto params = kink_free_params(net, x, seed);
    const auto pass = net.forward_pass(x, params);
    const auto g = net.backward(pass, params, cross_entropy_grad(pass.probs, y), true);
    ASSERT_TRUE(g.input.has_value());
    const double h = 1e-5;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = cross_entropy(net.forward(x, params), y);
        x[i] = keep - h;
        const double down = cross_entropy(net.forward(x, params), y);
        x[i] = keep;
        const double num = (up - down) / (2 * h);
        EXPECT_NEAR((*g.input)[i], num, 1e-6 + 1e-4 * std::abs(num)) << i;
    }
}

class CheckpointTest : public ::testing::Test {
protected:
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "cavat_ckpt_test";
    void SetUp() override { std::filesystem::create_directories(dir); }
    void TearDown() override { std::filesystem::remove_all(dir); }
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
    Network net({{3, 5}, 2, 3});
    Rng rng(15);
    Checkpoint ck{net.config(), net.init_params(rng)};
    ck.params[1].values[0] = -0.1;
    ck.params[0].values[0] = 1.0 / 3.0;
    save_checkpoint(dir / "a.txt", ck);
    const auto back = load_checkpoint(dir / "a.txt");
    EXPECT_EQ(back.config, ck.config);
    EXPECT_EQ(back.params, ck.params);
}

TEST_F(CheckpointTest, MalformedFilesRaiseParseError) {
    Network net;
    Rng rng(16);
    save_checkpoint(dir / "good.txt", {net.config(), net.init_params(rng)});
    std::ifstream in(dir / "good.txt");
    std::string text((std::istreambuf_iterator<char>(in)), {});

    std::ofstream(dir / "magic.txt") << "NOT-A-CHECKPOINT 1\n";
    EXPECT_THROW(load_checkpoint(dir / "magic.txt"), ParseError);

    std::ofstream(dir / "cut.txt") << text.substr(0, text.size() / 2);
    EXPECT_THROW(load_checkpoint(dir / "cut.txt"), ParseError);

    EXPECT_THROW(load_checkpoint(dir / "missing.txt"), Error);
}

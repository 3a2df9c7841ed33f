#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cavat/losses.hpp"
#include "oracles.hpp"

using namespace cavat;

namespace {

ProbMap random_probs(int h, int w, int classes, std::mt19937& gen) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    ProbMap p(h, w, classes);
    for (std::size_t i = 0; i < p.pixels(); ++i) {
        double s = 0;
        for (int k = 0; k < classes; ++k) s += (p(i, k) = u(gen));
        for (int k = 0; k < classes; ++k) p(i, k) /= s;
    }
    return p;
}

DiscreteMask random_labels(int h, int w, int classes, std::mt19937& gen) {
    DiscreteMask y(h, w);
    for (auto& v : y.values()) v = static_cast<int>(gen() % classes);
    return y;
}

Image random_image(int h, int w, Rng& rng) {
    Image x(h, w);
    for (auto& v : x.values()) v = rng.normal();
    return x;
}

double rel_norm_error(std::span<const double> a, std::span<const double> b) {
    double d = 0, n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += (a[i] - b[i]) * (a[i] - b[i]);
        n += b[i] * b[i];
    }
    return std::sqrt(d / n);
}

}  // namespace

TEST(CrossEntropy, AnalyticCases) {
    DiscreteMask y(2, 2);
    y(0, 1) = 1;
    EXPECT_NEAR(cross_entropy(ProbMap::one_hot(y, 2), y), 0.0, 1e-12);
    EXPECT_NEAR(cross_entropy(ProbMap::uniform(2, 2, 2), y), std::numbers::ln2, 1e-12);
}

TEST(CrossEntropy, DirectSumOracle) {
    std::mt19937 gen(1);
    const auto p = random_probs(2, 2, 3, gen);
    const auto y = random_labels(2, 2, 3, gen);
    double want = 0;
    for (int i = 0; i < 4; ++i) want -= std::log(p(i, y[i]));
    EXPECT_NEAR(cross_entropy(p, y), want / 4, 1e-12);
}

TEST(CrossEntropy, ShapeAndLabelErrors) {
    EXPECT_THROW(cross_entropy(ProbMap::uniform(2, 2, 2), DiscreteMask(2, 3)), InvalidArgument);
    EXPECT_THROW(cross_entropy(ProbMap::uniform(2, 2, 2), DiscreteMask(2, 2, 2)), InvalidArgument);
}

TEST(KlLds, ZeroAtEqualityAndLn2Case) {
    std::mt19937 gen(2);
    const auto p = random_probs(3, 3, 3, gen);
    EXPECT_NEAR(kl_lds(p, p), 0.0, 1e-15);
    ProbMap a(1, 1, 2), b(1, 1, 2);
    a(0, 0) = 1.0;
    b(0, 0) = b(0, 1) = 0.5;
    EXPECT_NEAR(kl_lds(a, b), std::numbers::ln2, 1e-9);
}

TEST(KlLds, DirectSumOracleAndNonNegativity) {
    std::mt19937 gen(3);
    for (int t = 0; t < 1000; ++t) {
        const auto q = random_probs(3, 3, 3, gen);
        const auto p = random_probs(3, 3, 3, gen);
        double want = 0;
        for (std::size_t i = 0; i < 9; ++i)
            for (int k = 0; k < 3; ++k) want += q(i, k) * std::log(q(i, k) / p(i, k));
        const double got = kl_lds(q, p);
        ASSERT_GE(got, 0.0);
        ASSERT_NEAR(got, want / 9, 1e-12);
    }
    EXPECT_THROW(kl_lds(ProbMap::uniform(2, 2, 2), ProbMap::uniform(2, 3, 2)), InvalidArgument);
}

TEST(EntropyMin, Cases) {
    DiscreteMask y(2, 2);
    EXPECT_NEAR(entropy_min(ProbMap::one_hot(y, 2)), 0.0, 1e-15);
    EXPECT_NEAR(entropy_min(ProbMap::uniform(2, 2, 2)), std::numbers::ln2, 1e-12);
    std::mt19937 gen(4);
    const auto p = random_probs(2, 3, 3, gen);
    double want = 0;
    for (std::size_t i = 0; i < 6; ++i)
        for (int k = 0; k < 3; ++k) want -= p(i, k) * std::log(p(i, k));
    EXPECT_NEAR(entropy_min(p), want / 6, 1e-12);
}

TEST(SquaredConsistency, DirectSum) {
    std::mt19937 gen(5);
    const auto s = random_probs(2, 2, 2, gen);
    const auto t = random_probs(2, 2, 2, gen);
    double want = 0;
    for (std::size_t j = 0; j < 8; ++j) want += std::pow(s.values()[j] - t.values()[j], 2);
    EXPECT_NEAR(squared_consistency(s, t), want / 4, 1e-14);
    EXPECT_EQ(squared_consistency(s, s), 0.0);
}

TEST(ProbGradients, MatchFiniteDifferencesInProbabilitySpace) {
    std::mt19937 gen(6);
    const auto q = random_probs(2, 3, 3, gen);
    auto p = random_probs(2, 3, 3, gen);
    const auto y = random_labels(2, 3, 3, gen);
    const auto t = random_probs(2, 3, 3, gen);
    const auto g_ce = cross_entropy_grad(p, y);
    const auto g_kl = kl_lds_grad(q, p);
    const auto g_ent = entropy_min_grad(p);
    const auto g_sq = squared_consistency_grad(p, t);
    const double h = 1e-6;
    for (std::size_t j = 0; j < p.values().size(); ++j) {
        const double keep = p.values()[j];
        auto eval = [&](double v) {
            p.values()[j] = v;
            return std::array<double, 4>{cross_entropy(p, y), kl_lds(q, p), entropy_min(p),
                                         squared_consistency(p, t)};
        };
        const auto up = eval(keep + h), down = eval(keep - h);
        p.values()[j] = keep;
        EXPECT_NEAR(g_ce.values()[j], (up[0] - down[0]) / (2 * h), 1e-6);
        EXPECT_NEAR(g_kl.values()[j], (up[1] - down[1]) / (2 * h), 1e-6);
        EXPECT_NEAR(g_ent.values()[j], (up[2] - down[2]) / (2 * h), 1e-6);
        EXPECT_NEAR(g_sq.values()[j], (up[3] - down[3]) / (2 * h), 1e-6);
    }
}

TEST(Reinforce, ZeroAndFullRewards) {
    std::mt19937 gen(7);
    const auto p = random_probs(3, 3, 2, gen);
    ConstraintSamples s;
    for (int k = 0; k < 4; ++k) {
        s.masks.push_back(random_labels(3, 3, 2, gen));
        s.rewards.emplace_back(3, 3, 0);
    }
    EXPECT_EQ(reinforce_surrogate(p, s), 0.0);
    const auto g = reinforce_surrogate_grad(p, s);
    for (double v : g.values()) EXPECT_EQ(v, 0.0);

    double nll = 0;
    for (auto& r : s.rewards) r = RewardMap(3, 3, 1);
    for (const auto& m : s.masks)
        for (std::size_t i = 0; i < 9; ++i) nll -= std::log(p(i, m[i]));
    EXPECT_NEAR(reinforce_surrogate(p, s), nll / (4 * 9), 1e-12);
}

TEST(Reinforce, BaselineShiftsWeights) {
    std::mt19937 gen(8);
    const auto p = random_probs(2, 2, 2, gen);
    ConstraintSamples s{{random_labels(2, 2, 2, gen)}, {RewardMap(2, 2, 1)}};
    // J - b = 0.75 everywhere
    EXPECT_NEAR(reinforce_surrogate(p, s, 0.25), 0.75 * reinforce_surrogate(p, s), 1e-14);
}

TEST(Reinforce, DeterministicGivenRng) {
    std::mt19937 gen(9);
    const auto p = random_probs(8, 8, 2, gen);
    ConnectivityConstraint c;
    Rng a(5), b(5);
    const auto ra = reinforce_constraint(p, c, {6, false, {}}, a);
    const auto rb = reinforce_constraint(p, c, {6, false, {}}, b);
    EXPECT_EQ(ra.value, rb.value);
    EXPECT_EQ(ra.samples.masks, rb.samples.masks);
    EXPECT_GE(ra.mean_reward, 0.0);
    EXPECT_LE(ra.mean_reward, 1.0);
}

TEST(Reinforce, SharedSeedStreamRepeatsTieBreaks) {
    // With a shared stream, identical masks get identical rewards even when seeds tie.
    DiscreteMask y(8, 8);
    y(1, 1) = 1;
    y(6, 6) = 1;
    const auto p = ProbMap::one_hot(y, 2);
    ConnectivityConstraint c;
    Rng rng(10);
    const auto shared = draw_constraint_samples(p, c, {40, true, {}}, rng);
    for (const auto& r : shared.rewards) EXPECT_EQ(r, shared.rewards[0]);
    const auto fresh = draw_constraint_samples(p, c, {40, false, {}}, rng);
    bool differs = false;
    for (const auto& r : fresh.rewards) differs = differs || r != fresh.rewards[0];
    EXPECT_TRUE(differs);
}

TEST(Reinforce, UnbiasedAgainstEnumerationWithLocalConstraint) {
    // 2x2, two classes, l = k = 1: every foreground pixel ties as seed, so the
    // expectation runs over the 16 masks and the uniform seed choice.
    ProbMap p(2, 2, 2);
    const double fg[4] = {0.7, 0.35, 0.4, 0.65};
    for (int i = 0; i < 4; ++i) {
        p(i, 1) = fg[i];
        p(i, 0) = 1 - fg[i];
    }
    ConnectivityConfig cfg{1, 1, Adjacency::Four};
    std::vector<double> exact(8, 0.0);
    for (int code = 0; code < 16; ++code) {
        oracle::BinaryMask m(2, 2);
        double prob = 1;
        for (int i = 0; i < 4; ++i) {
            m[i] = (code >> i) & 1;
            prob *= m[i] ? fg[i] : 1 - fg[i];
        }
        const auto seeds = oracle::foreground_pixels(m);
        std::vector<double> j_mean(4, seeds.empty() ? 1.0 : 0.0);
        for (const auto& s : seeds) {
            const auto j = oracle::connectivity_reward(m, s, 1);
            for (int i = 0; i < 4; ++i) j_mean[i] += static_cast<double>(j[i]) / seeds.size();
        }
        for (int i = 0; i < 4; ++i) exact[i * 2 + m[i]] -= prob * j_mean[i] / (4 * p(i, m[i]));
    }
    Rng rng(11);
    const auto mc = reinforce_constraint(p, ConnectivityConstraint(cfg), {100000, false, {}}, rng);
    EXPECT_LT(rel_norm_error(mc.grad.values(), exact), 0.02);
}

TEST(Reinforce, VarianceShrinksLikeOneOverM) {
    ProbMap p(4, 4, 2);
    for (std::size_t i = 0; i < 16; ++i) {
        p(i, 1) = 0.3 + 0.03 * i;
        p(i, 0) = 1 - p(i, 1);
    }
    ConnectivityConfig cfg{3, 3, Adjacency::Four};
    ConnectivityConstraint c(cfg);
    Rng rng(12);
    std::vector<double> var;
    for (int m : {1, 10, 100}) {
        const int reps = 300;
        double s = 0, s2 = 0;
        for (int r = 0; r < reps; ++r) {
            const double v = reinforce_constraint(p, c, {m, false, {}}, rng).grad(5, 1);
            s += v;
            s2 += v * v;
        }
        var.push_back((s2 - s * s / reps) / (reps - 1));
    }
    EXPECT_GT(var[0] / var[1], 5.0);
    EXPECT_LT(var[0] / var[1], 20.0);
    EXPECT_GT(var[1] / var[2], 5.0);
    EXPECT_LT(var[1] / var[2], 20.0);
}

TEST(CavatInner, ZeroPerturbationAndGammaIsZero) {
    Network net;
    Rng rng(13);
    const auto params = net.init_params(rng);
    const auto x = random_image(6, 6, rng);
    TrivialConstraint trivial;
    const Image zero(6, 6);
    EXPECT_EQ(cavat_inner(x, zero, net, params, {1e-3, 0.0}, trivial, {}, rng), 0.0);
}

TEST(CavatInner, GammaZeroIsKlAtPerturbation) {
    Network net;
    Rng rng(14);
    const auto params = net.init_params(rng);
    const auto x = random_image(6, 6, rng);
    Image r(6, 6);
    for (auto& v : r.values()) v = 0.2 * rng.normal();
    ConnectivityConstraint c;
    const Rng before = rng;
    const double got = cavat_inner(x, r, net, params, {1e-3, 0.0}, c, {}, rng);
    EXPECT_EQ(rng, before);
    EXPECT_EQ(got, kl_lds(net.forward(x, params), net.forward(add_images(x, r), params)));
}

TEST(CavatInner, TrivialConstraintAtZeroPerturbationIsMeanNll) {
    Network net;
    Rng rng(15);
    const auto params = net.init_params(rng);
    const auto x = random_image(5, 5, rng);
    TrivialConstraint trivial;
    Rng mirror = rng;
    const double got = cavat_inner(x, Image(5, 5), net, params, {1e-3, 2.0}, trivial, {7, false, {}}, rng);
    const auto p = net.forward(x, params);
    double nll = 0;
    for (int s = 0; s < 7; ++s) {
        const auto y = sample_mask(p, mirror);
        for (std::size_t i = 0; i < p.pixels(); ++i) nll -= std::log(p(i, y[i]));
    }
    EXPECT_NEAR(got, 2.0 * nll / (7 * 25), 1e-12);
}

TEST(TotalLoss, ReducesToCrossEntropy) {
    Network net;
    Rng rng(16);
    const auto params = net.init_params(rng);
    std::mt19937 gen(16);
    std::vector<Sample> labeled{{random_image(6, 6, rng), random_labels(6, 6, 2, gen)},
                                {random_image(6, 6, rng), random_labels(6, 6, 2, gen)}};
    std::vector<Image> unlabeled{random_image(6, 6, rng)};
    std::vector<Perturbation> r{Image(6, 6, 0.1)};
    ConnectivityConstraint c;
    const double ce = (cross_entropy(net.forward(labeled[0].image, params), labeled[0].mask) +
                       cross_entropy(net.forward(labeled[1].image, params), labeled[1].mask)) /
                      2;

    const auto no_unlabeled = total_loss(labeled, {}, {}, net, params, {1.0, 1.0}, c, {}, rng);
    EXPECT_NEAR(no_unlabeled.total, ce, 1e-12);

    const auto lambda_zero = total_loss(labeled, unlabeled, r, net, params, {0.0, 1.0}, c, {}, rng);
    EXPECT_NEAR(lambda_zero.total, ce, 1e-12);
    EXPECT_EQ(lambda_zero.grad, no_unlabeled.grad);

    const auto gamma_zero = total_loss(labeled, unlabeled, r, net, params, {0.5, 0.0}, c, {}, rng);
    const double lds =
        kl_lds(net.forward(unlabeled[0], params), net.forward(add_images(unlabeled[0], r[0]), params));
    EXPECT_NEAR(gamma_zero.total, ce + 0.5 * lds, 1e-12);
    EXPECT_EQ(gamma_zero.cons, 0.0);
}

TEST(TotalLoss, LabeledOrderDoesNotMatter) {
    Network net;
    Rng rng(17);
    const auto params = net.init_params(rng);
    std::mt19937 gen(17);
    std::vector<Sample> batch;
    for (int i = 0; i < 5; ++i) batch.push_back({random_image(5, 5, rng), random_labels(5, 5, 2, gen)});
    TrivialConstraint c;
    const auto a = total_loss(batch, {}, {}, net, params, {}, c, {}, rng);
    std::reverse(batch.begin(), batch.end());
    const auto b = total_loss(batch, {}, {}, net, params, {}, c, {}, rng);
    EXPECT_NEAR(a.total, b.total, 1e-12);
    for (std::size_t t = 0; t < a.grad.count(); ++t)
        for (std::size_t j = 0; j < a.grad[t].size(); ++j)
            EXPECT_NEAR(a.grad[t].values[j], b.grad[t].values[j], 1e-12);
}

TEST(TotalLoss, GradientDescentReducesCrossEntropy) {
    Network net({{4}, 2, 3});
    Rng rng(18);
    auto params = net.init_params(rng);
    Image x(6, 6);
    DiscreteMask y(6, 6);
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) {
            y(r, c) = (r >= 2 && r < 5 && c >= 1 && c < 4) ? 1 : 0;
            x(r, c) = y(r, c) + 0.1 * rng.normal();
        }
    std::vector<Sample> batch{{x, y}};
    TrivialConstraint c;
    double prev = INFINITY;
    for (int step = 0; step < 50; ++step) {
        auto loss = total_loss(batch, {}, {}, net, params, {}, c, {}, rng);
        ASSERT_LT(loss.total, prev) << "step " << step;
        prev = loss.total;
        params.add_scaled(loss.grad, -0.05);
    }
}

TEST(TotalLoss, MismatchedPerturbationsRejected) {
    Network net;
    Rng rng(19);
    const auto params = net.init_params(rng);
    std::vector<Image> u{Image(4, 4), Image(4, 4)};
    std::vector<Perturbation> r{Image(4, 4)};
    TrivialConstraint c;
    EXPECT_THROW(total_loss({}, u, r, net, params, {}, c, {}, rng), InvalidArgument);
    EXPECT_THROW(total_loss({}, u, {}, net, params, {-1.0, 1.0}, c, {}, rng), InvalidArgument);
}

#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "xsal/error.hpp"
#include "xsal/sidu.hpp"

using namespace xsal;
using namespace xsal::test;

TEST(SiduMasks, ConstantMapGivesZeroMask) {
    const FeatureStack f({Tensor2D(4, 4, 3.0f)});
    for (bool bin : {true, false}) {
        SiduConfig cfg;
        cfg.binarize = bin;
        const auto mask = build_feature_masks(f, cfg, 16, 16)[0];
        for (float v : mask.values()) ASSERT_EQ(v, 0.0f);
    }
}

TEST(SiduMasks, BinaryMapIsRebinarisedIndicator) {
    Tensor2D map(4, 4);
    map.at(1, 1) = 1.0f;
    map.at(2, 1) = 1.0f;
    const auto m = build_feature_masks(FeatureStack({map}), {}, 16, 16)[0];
    const auto up = oracle_resize(std::vector<double>(map.values().begin(), map.values().end()), 4, 4, 16, 16);
    for (std::size_t i = 0; i < up.size(); ++i) ASSERT_EQ(m[i], up[i] >= 0.5 ? 1.0f : 0.0f);
}

TEST(SiduMasks, MicroFeaturesGiveBinaryInputSizedMasks) {
    const auto cfg = random_config(2);
    MicroDetector det(cfg, seeded_random_weights(cfg, 2));
    const auto masks = build_feature_masks(det.features(random_image(cfg.width, cfg.height, 2)), {}, cfg.width,
                                           cfg.height);
    ASSERT_EQ(masks.size(), static_cast<std::size_t>(cfg.features));
    for (const auto& m : masks) {
        ASSERT_EQ(m.width(), cfg.width);
        ASSERT_EQ(m.height(), cfg.height);
        for (float v : m.values()) ASSERT_TRUE(v == 0.0f || v == 1.0f);
    }
}

TEST(SiduWeights, SimilarityDifferenceExamples) {
    const ScoreVector p_o{0.5};
    const std::vector<ScoreVector> preds{{0.5}, {1.5}, {0.7}, {0.9}};
    const auto sd = similarity_differences(p_o, preds, 0.25);
    EXPECT_DOUBLE_EQ(sd[0], 1.0);
    EXPECT_NEAR(sd[1], 3.3546e-4, 1e-8);
    EXPECT_DOUBLE_EQ(sd[1], std::exp(-8.0));
    EXPECT_GT(sd[2], sd[3]);
    for (double v : sd) {
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    const std::vector<ScoreVector> two{{0.0, 0.0}};
    EXPECT_THROW(similarity_differences(p_o, two, 0.25), Error);
}

TEST(SiduWeights, EuclideanNormOnVectors) {
    const ScoreVector p_o{0.0, 0.0};
    const std::vector<ScoreVector> preds{{0.3, 0.4}};
    EXPECT_DOUBLE_EQ(similarity_differences(p_o, preds, 1.0)[0], std::exp(-0.5 * 0.5));
    const std::vector<ScoreVector> pair{{0.0, 0.0}, {0.3, 0.4}};
    EXPECT_DOUBLE_EQ(uniqueness(pair)[0], 0.5);
}

TEST(SiduWeights, UniquenessExamples) {
    const std::vector<ScoreVector> same{{0.3}, {0.3}, {0.3}};
    EXPECT_EQ(uniqueness(same), (std::vector<double>{0, 0, 0}));
    const std::vector<ScoreVector> two{{0.0}, {1.0}};
    EXPECT_EQ(uniqueness(two), (std::vector<double>{1, 1}));
    const std::vector<ScoreVector> one{{0.7}};
    EXPECT_EQ(uniqueness(one), (std::vector<double>{0}));
    const std::vector<ScoreVector> ragged{{0.0}, {1.0, 2.0}};
    EXPECT_THROW(uniqueness(ragged), Error);
}

TEST(SiduWeights, UniquenessIsPermutationEquivariant) {
    const std::vector<ScoreVector> preds{{0.1}, {0.9}, {0.4}, {0.35}};
    const std::vector<ScoreVector> permuted{preds[2], preds[0], preds[3], preds[1]};
    const auto u = uniqueness(preds);
    const auto up = uniqueness(permuted);
    EXPECT_DOUBLE_EQ(up[0], u[2]);
    EXPECT_DOUBLE_EQ(up[1], u[0]);
    EXPECT_DOUBLE_EQ(up[2], u[3]);
    EXPECT_DOUBLE_EQ(up[3], u[1]);
}

TEST(SiduSaliency, IdenticalPredictionsGiveZeroMap) {
    // A constant scorer ignores the mask, so every p_i is equal and u vanishes.
    MicroDetConfig mc{16, 16, 4, 1};
    auto micro = make_micro_adapter(mc, brightness_weights(mc, 8.0, -4.0));
    const auto img = random_image(16, 16, 1);
    FunctionAdapter flat({3, 16, 16}, [](const Image&) { return 0.6; });
    struct WithFeatures final : DetectorAdapter {
        DetectorAdapter& scores;
        MicroAdapter& feats;
        WithFeatures(DetectorAdapter& s, MicroAdapter& f) : scores(s), feats(f) {}
        Capabilities capabilities() const override { return {true, true, false}; }
        InputShape input_shape() const override { return scores.input_shape(); }
        std::string describe() const override { return "flat"; }
        std::vector<Detection> detect(const Image& i) override { return scores.detect(i); }
        FeatureStack features(const Image& i) override { return feats.features(i); }
    } adapter(flat, micro);
    const auto s = sidu_saliency(adapter, img, flat.detect(img)[0]);
    for (float v : s.values()) ASSERT_EQ(v, 0.0f);
}

TEST(SiduSaliency, SingleMapGivesZeroMap) {
    MicroDetConfig mc{16, 16, 1, 1};
    auto adapter = make_micro_adapter(mc, brightness_weights(mc, 8.0, -2.0));
    const auto img = blob_image(16, 16, 2);
    const auto s = sidu_saliency(adapter, img, select_top_box(adapter.detect(img)));
    for (float v : s.values()) ASSERT_EQ(v, 0.0f);
}

TEST(SiduSaliency, RequiresFeatures) {
    ConstantAdapter c({3, 8, 8}, 0.9f);
    const auto img = random_image(8, 8, 0);
    try {
        sidu_saliency(c, img, c.detect(img)[0]);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::capability_missing);
    }
}

class SiduOracle : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(SiduOracle, MatchesDoubleLoopOnMicroDetector) {
    const auto seed = GetParam();
    const auto cfg = random_config(seed);
    auto inner = make_micro_adapter(cfg, seeded_random_weights(cfg, seed));
    CountingAdapter adapter(inner);
    const auto img = random_image(cfg.width, cfg.height, seed + 200);
    const auto target = select_top_box(inner.detect(img));
    const auto s = sidu_saliency(adapter, img, target);
    EXPECT_EQ(adapter.detect_calls(), static_cast<std::size_t>(cfg.features) + 1);
    const auto oracle = oracle_sidu(inner, img, target, 0.25, 0.5);
    ASSERT_EQ(s.size(), oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) ASSERT_NEAR(s[i], oracle[i], 1e-6);
    EXPECT_GE(s.min(), 0.0f);
}

INSTANTIATE_TEST_SUITE_P(Seeds, SiduOracle, ::testing::Range<std::uint64_t>(0, 5));

TEST(SiduSaliency, BrightnessPresetIsNotDegenerate) {
    MicroDetConfig mc{64, 64, 8, 2};
    auto adapter = make_micro_adapter(mc, brightness_weights(mc, 8.0, -4.0));
    const auto img = blob_image(64, 64, 3);
    const auto s = sidu_saliency(adapter, img, select_top_box(adapter.detect(img)));
    EXPECT_GT(s.max(), 0.0f);
    const auto oracle = oracle_sidu(adapter, img, select_top_box(adapter.detect(img)), 0.25, 0.5);
    for (std::size_t i = 0; i < oracle.size(); ++i) ASSERT_NEAR(s[i], oracle[i], 1e-6);
}

TEST(SiduConfig, Validation) {
    SiduConfig cfg;
    cfg.sigma = 0.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    cfg.bin_threshold = 1.0;
    EXPECT_THROW(cfg.validate(), Error);
}

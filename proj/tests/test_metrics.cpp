#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "mgd/metrics.hpp"
#include "mgd/rng.hpp"

using namespace mgd;

namespace {

std::vector<double> random_depths(Rng& rng, std::size_t count, double lo, double hi) {
    std::vector<double> v(count);
    for (double& x : v) x = lo + (hi - lo) * rng.uniform();
    return v;
}

std::vector<double> scaled(std::vector<double> v, double s, double t = 0.0) {
    for (double& x : v) x = s * x + t;
    return v;
}

}  // namespace

TEST(DepthRaster, Validation) {
    EXPECT_THROW(DepthRaster(0, 2, {}, {}, 10.0), DimensionError);
    EXPECT_THROW(DepthRaster(1, 2, {1.0}, {1}, 10.0), DimensionError);
    EXPECT_THROW(DepthRaster(1, 1, {1.0}, {1}, 0.0), DomainError);
    EXPECT_THROW(DepthRaster(1, 1, {NAN}, {1}, 10.0), NumericError);
    EXPECT_NO_THROW(DepthRaster(1, 1, {NAN}, {0}, 10.0));
}

TEST(DepthRaster, GroundTruthMasksOutOfRange) {
    const auto gt = DepthRaster::ground_truth(1, 5, {0.0, -1.0, 5.0, 10.0, 10.5}, 10.0);
    EXPECT_EQ(gt.mask(), (std::vector<std::uint8_t>{0, 0, 1, 1, 0}));
}

TEST(Evaluate, IdenticalRasters) {
    Rng rng(71);
    const auto values = random_depths(rng, 12, 0.5, 9.0);
    const MetricReport r = evaluate(DepthRaster::prediction(3, 4, values), DepthRaster::ground_truth(3, 4, values));
    EXPECT_EQ(r.silog, 0.0);
    EXPECT_EQ(r.abs_rel, 0.0);
    EXPECT_EQ(r.rms, 0.0);
    EXPECT_EQ(r.rms_log, 0.0);
    EXPECT_EQ(r.sq_rel, 0.0);
    EXPECT_EQ(r.irms, 0.0);
    EXPECT_EQ(r.delta1, 1.0);
    EXPECT_EQ(r.delta2, 1.0);
    EXPECT_EQ(r.delta3, 1.0);
    EXPECT_EQ(r.valid_pixels, 12u);
}

TEST(Evaluate, UniformDoubling) {
    Rng rng(72);
    const auto gt = random_depths(rng, 20, 0.5, 4.0);
    const MetricReport r = evaluate(DepthRaster::prediction(4, 5, scaled(gt, 2.0)), DepthRaster::ground_truth(4, 5, gt));
    EXPECT_NEAR(r.silog, 0.0, 1e-9);
    EXPECT_EQ(r.delta1, 0.0);
    EXPECT_EQ(r.delta3, 0.0);
    EXPECT_NEAR(r.abs_rel, 1.0, 1e-14);
    EXPECT_NEAR(r.rms_log, std::log(2.0), 1e-14);
}

TEST(Evaluate, TwoPixelByHand) {
    const MetricReport r =
        evaluate(DepthRaster::prediction(1, 2, {1.0, 2.0}), DepthRaster::ground_truth(1, 2, {1.0, 1.0}));
    EXPECT_NEAR(r.abs_rel, 0.5, 1e-15);
    EXPECT_NEAR(r.rms, std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(r.sq_rel, 0.5, 1e-15);
    EXPECT_EQ(r.delta1, 0.5);
    EXPECT_NEAR(r.rms_log, std::log(2.0) / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(r.silog, 100.0 * 0.5 * std::log(2.0), 1e-12);
    EXPECT_NEAR(r.irms_per_m, std::sqrt(0.125), 1e-15);
    EXPECT_NEAR(r.irms, 1000.0 * std::sqrt(0.125), 1e-12);
}

TEST(Evaluate, SilogScaleInvariance) {
    Rng rng(73);
    for (int trial = 0; trial < 50; ++trial) {
        const auto gt = random_depths(rng, 30, 0.5, 8.0);
        const auto pred = random_depths(rng, 30, 0.5, 8.0);
        const double c = 0.5 + rng.uniform();
        const auto g = DepthRaster::ground_truth(5, 6, gt, 80.0);
        const double base = evaluate(DepthRaster::prediction(5, 6, pred, 80.0), g).silog;
        const double rescaled = evaluate(DepthRaster::prediction(5, 6, scaled(pred, c), 80.0), g).silog;
        EXPECT_NEAR(base, rescaled, 1e-9);
    }
}

TEST(Evaluate, DeltaOrderingOnFuzzedRasters) {
    Rng rng(74);
    for (int trial = 0; trial < 200; ++trial) {
        const auto gt = random_depths(rng, 16, -1.0, 12.0);
        const auto pred = random_depths(rng, 16, -0.5, 12.0);
        try {
            const MetricReport r = evaluate(DepthRaster::prediction(4, 4, pred), DepthRaster::ground_truth(4, 4, gt));
            EXPECT_LE(r.delta1, r.delta2);
            EXPECT_LE(r.delta2, r.delta3);
            EXPECT_GE(r.delta1, 0.0);
            EXPECT_LE(r.delta3, 1.0);
            EXPECT_GE(r.silog, 0.0);
        } catch (const DomainError&) {
            // every gt pixel happened to fall outside the cap
        }
    }
}

TEST(Evaluate, IgnoresMaskedPixelsAndIsPermutationInvariant) {
    Rng rng(75);
    auto gt = random_depths(rng, 10, 1.0, 5.0);
    auto pred = random_depths(rng, 10, 1.0, 5.0);
    const MetricReport base = evaluate(DepthRaster::prediction(2, 5, pred), DepthRaster::ground_truth(2, 5, gt));

    auto gt_extra = gt;
    auto pred_extra = pred;
    gt_extra.push_back(0.0);
    gt_extra.push_back(-3.0);
    pred_extra.push_back(1e6);
    pred_extra.push_back(0.2);
    const MetricReport masked =
        evaluate(DepthRaster::prediction(3, 4, pred_extra), DepthRaster::ground_truth(3, 4, gt_extra));
    EXPECT_NEAR(masked.rms, base.rms, 1e-12);
    EXPECT_NEAR(masked.silog, base.silog, 1e-10);
    EXPECT_EQ(masked.valid_pixels, 10u);

    std::reverse(gt.begin(), gt.end());
    std::reverse(pred.begin(), pred.end());
    const MetricReport permuted = evaluate(DepthRaster::prediction(5, 2, pred), DepthRaster::ground_truth(5, 2, gt));
    EXPECT_NEAR(permuted.abs_rel, base.abs_rel, 1e-12);
    EXPECT_NEAR(permuted.silog, base.silog, 1e-10);
}

TEST(Evaluate, ClampsPredictions) {
    const MetricReport r =
        evaluate(DepthRaster::prediction(1, 2, {-1.0, 50.0}), DepthRaster::ground_truth(1, 2, {1.0, 10.0}));
    EXPECT_NEAR(r.abs_rel, 0.5 * (1.0 - 1e-3), 1e-12);
    EXPECT_TRUE(std::isfinite(r.silog));
}

TEST(Evaluate, Errors) {
    EXPECT_THROW(evaluate(DepthRaster::prediction(1, 2, {1.0, 1.0}), DepthRaster::ground_truth(2, 1, {1.0, 1.0})),
                 DimensionError);
    EXPECT_THROW(evaluate(DepthRaster::prediction(1, 2, {1.0, 1.0}), DepthRaster::ground_truth(1, 2, {0.0, 20.0})),
                 DomainError);
}

TEST(AlignScaleShift, IdentityForEqualRasters) {
    Rng rng(76);
    const auto v = random_depths(rng, 9, 1.0, 5.0);
    const Alignment a = align_scale_shift(DepthRaster::prediction(3, 3, v), DepthRaster::ground_truth(3, 3, v));
    EXPECT_NEAR(a.scale, 1.0, 1e-12);
    EXPECT_NEAR(a.shift, 0.0, 1e-12);
}

TEST(AlignScaleShift, InvertsAffineCorruption) {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const auto gt = random_depths(rng, 16, 1.0, 9.0);
        const Alignment a =
            align_scale_shift(DepthRaster::prediction(4, 4, scaled(gt, 0.5, -1.0)), DepthRaster::ground_truth(4, 4, gt));
        EXPECT_NEAR(a.scale, 2.0, 1e-10);
        EXPECT_NEAR(a.shift, 2.0, 1e-10);
        for (std::size_t i = 0; i < gt.size(); ++i) EXPECT_NEAR(a.aligned.value(i), gt[i], 1e-10);
    }
}

TEST(AlignScaleShift, NeverIncreasesRms) {
    Rng rng(78);
    for (int trial = 0; trial < 50; ++trial) {
        const auto gt = random_depths(rng, 25, 1.0, 9.0);
        const auto pred = random_depths(rng, 25, 1.0, 9.0);
        const auto g = DepthRaster::ground_truth(5, 5, gt, 1e6);
        const auto p = DepthRaster::prediction(5, 5, pred, 1e6);
        const Alignment a = align_scale_shift(p, g);
        // Raw squared error over the same pixels, without evaluate's clamping.
        double before = 0.0, after = 0.0;
        for (std::size_t i = 0; i < gt.size(); ++i) {
            before += (pred[i] - gt[i]) * (pred[i] - gt[i]);
            after += (a.aligned.value(i) - gt[i]) * (a.aligned.value(i) - gt[i]);
        }
        EXPECT_LE(after, before + 1e-9);
    }
}

TEST(AlignScaleShift, DegenerateInputs) {
    EXPECT_THROW(align_scale_shift(DepthRaster::prediction(1, 3, {2.0, 2.0, 2.0}),
                                   DepthRaster::ground_truth(1, 3, {1.0, 2.0, 3.0})),
                 DomainError);
    EXPECT_THROW(align_scale_shift(DepthRaster::prediction(1, 2, {1.0, 2.0}),
                                   DepthRaster::ground_truth(1, 2, {1.0, 0.0})),
                 DomainError);
}

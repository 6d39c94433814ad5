// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "doctest.h"
#include "oracles.hpp"

#include "isptune/error.hpp"
#include "isptune/isp.hpp"

#include <random>

using namespace isptune;

namespace {

double variance(std::span<const double> v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
}

BayerMosaic noise_mosaic(int w, int h, double level, double sigma, unsigned seed) {
    BayerMosaic m(w, h, CfaPattern::RGGB);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(level, sigma);
    for (double& v : m.data()) v = n(rng);
    return m;
}

PlanarImage gray_rgb(int w, int h, double c) { return PlanarImage(w, h, 3, ColorDomain::LinearRGB, c); }

} // namespace

TEST_CASE("block tables and ordering") {
    CHECK(kPipelineOrder[0] == BlockId::BayerNR);
    CHECK(kPipelineOrder[3] == BlockId::Sharpen);
    for (BlockId b : kPipelineOrder) {
        CHECK(block_param_specs(b).size() == 4);
        CHECK(parse_block_id(to_string(b)) == b);
        for (const ParamSpec& s : block_param_specs(b)) CHECK_NOTHROW(s.validate());
    }
    CHECK_THROWS_AS(parse_block_id("Gamma"), Error);
    const auto bnr = block_param_specs(BlockId::BayerNR);
    CHECK(bnr[0].name == "sigma_s");
    CHECK(bnr[0].physical_min == 0.5);
    CHECK(bnr[0].physical_max == 3.0);
    CHECK(bnr[1].physical_max == 8.0);
    CHECK(bnr[2].integer);
}

TEST_CASE("BlockParams access and validation") {
    BlockParams p = BlockParams::mid_range(BlockId::Sharpen);
    CHECK(p.get("gain") == doctest::Approx(2.0));
    p.set("gain", 3.5);
    CHECK(p.get("gain") == 3.5);
    CHECK_THROWS_AS(p.get("nope"), Error);
    CHECK_THROWS_AS(p.set("gain", 9.0), Error);
    CHECK_THROWS_AS(BlockParams(BlockId::BayerNR, {1.0, 2.0}), Error);
}

TEST_CASE("PipelineTuning completeness") {
    PipelineTuning t;
    CHECK_FALSE(t.complete());
    try {
        (void)t.at(BlockId::Demosaic);
        FAIL("expected MissingUpstream");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingUpstream);
    }
    CHECK(PipelineTuning::passthrough().complete());
    CHECK(PipelineTuning::mid_range().complete());
}

TEST_CASE("bayer_nr") {
    const NoiseModel nm{2e-4, 2e-6, 4.0};
    const BayerMosaic noisy = noise_mosaic(32, 32, 0.5, 0.03, 1);

    SUBCASE("beta 0 is an exact passthrough") {
        BlockParams p = BlockParams::mid_range(BlockId::BayerNR);
        p.set("beta", 0.0);
        CHECK(bayer_nr(noisy, p, nm) == noisy);
    }
    SUBCASE("constant mosaic stays constant") {
        const BayerMosaic c(16, 16, CfaPattern::BGGR, 0.3);
        for (BlockParams p : {BlockParams::mid_range(BlockId::BayerNR), BlockParams(BlockId::BayerNR, {3.0, 8.0, 3.0, 1.0})}) {
            const BayerMosaic out = bayer_nr(c, p, nm);
            for (double v : out.data()) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));
        }
    }
    SUBCASE("variance of an iid field drops") {
        const BayerMosaic big = noise_mosaic(128, 128, 0.5, std::sqrt(nm.variance(0.5)), 2);
        const BayerMosaic out = bayer_nr(big, BlockParams(BlockId::BayerNR, {1.5, 8.0, 2.0, 1.0}), nm);
        CHECK(variance(out.data()) < variance(big.data()));
    }
    SUBCASE("higher beta never raises variance") {
        const BayerMosaic big = noise_mosaic(128, 128, 0.5, std::sqrt(nm.variance(0.5)), 3);
        double prev = variance(big.data());
        for (double beta : {0.25, 0.5, 0.75, 1.0}) {
            const double v = variance(bayer_nr(big, BlockParams(BlockId::BayerNR, {1.5, 3.0, 2.0, beta}), nm).data());
            CHECK(v <= prev);
            prev = v;
        }
    }
    SUBCASE("wrong block is rejected") {
        CHECK_THROWS_AS(bayer_nr(noisy, BlockParams::mid_range(BlockId::Sharpen), nm), Error);
    }
    SUBCASE("deterministic") {
        const BlockParams p = BlockParams::mid_range(BlockId::BayerNR);
        CHECK(bayer_nr(noisy, p, nm) == bayer_nr(noisy, p, nm));
    }
}

TEST_CASE("demosaic") {
    SUBCASE("constant gray mosaic reconstructs exactly") {
        const BayerMosaic m = bayer_subsample(gray_rgb(16, 12, 0.45), CfaPattern::GRBG);
        for (BlockParams p : {BlockParams::passthrough(BlockId::Demosaic), BlockParams::mid_range(BlockId::Demosaic)}) {
            const PlanarImage rgb = demosaic(m, p);
            CHECK(rgb.domain() == ColorDomain::LinearRGB);
            for (double v : rgb.data()) CHECK(v == doctest::Approx(0.45).epsilon(1e-12));
        }
    }
    SUBCASE("achromatic ramp interior error is small") {
        PlanarImage rgb(32, 32, 3, ColorDomain::LinearRGB);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 32; ++y)
                for (int x = 0; x < 32; ++x) rgb.at(c, y, x) = 0.1 + 0.01 * x + 0.005 * y;
        const PlanarImage out = demosaic(bayer_subsample(rgb, CfaPattern::RGGB), BlockParams::passthrough(BlockId::Demosaic));
        for (int c = 0; c < 3; ++c)
            for (int y = 3; y < 29; ++y)
                for (int x = 3; x < 29; ++x) CHECK(std::abs(out.at(c, y, x) - rgb.at(c, y, x)) < 1e-3);
    }
    SUBCASE("disabled false-colour stage leaves the result unchanged") {
        const PlanarImage rgb = oracle::random_image(24, 24, 3, 4);
        const BayerMosaic m = bayer_subsample(rgb, CfaPattern::RGGB);
        const PlanarImage off = demosaic(m, BlockParams(BlockId::Demosaic, {0.1, 0.0, 0.0, 0.0}));
        const PlanarImage radius_only = demosaic(m, BlockParams(BlockId::Demosaic, {0.1, 2.0, 0.0, 0.0}));
        const PlanarImage strength_only = demosaic(m, BlockParams(BlockId::Demosaic, {0.1, 0.0, 1.0, 0.0}));
        CHECK(off == radius_only);
        CHECK(off == strength_only);
        const PlanarImage on = demosaic(m, BlockParams(BlockId::Demosaic, {0.1, 2.0, 1.0, 0.0}));
        CHECK_FALSE(off == on);
    }
    SUBCASE("sampled sites keep their value without zipper blur") {
        const PlanarImage rgb = oracle::random_image(20, 20, 3, 5);
        const BayerMosaic m = bayer_subsample(rgb, CfaPattern::BGGR);
        const PlanarImage out = demosaic(m, BlockParams::passthrough(BlockId::Demosaic));
        for (int y = 0; y < 20; ++y)
            for (int x = 0; x < 20; ++x) CHECK(out.at(m.channel_at(x, y), y, x) == doctest::Approx(m.at(y, x)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(demosaic(BayerMosaic(8, 8, CfaPattern::RGGB), BlockParams::mid_range(BlockId::YuvNR)), Error);
}

TEST_CASE("yuv_nr") {
    SUBCASE("beta 0 is the identity") {
        const PlanarImage yuv = rgb_to_yuv(oracle::random_image(16, 16, 3, 6));
        BlockParams p = BlockParams::mid_range(BlockId::YuvNR);
        p.set("beta", 0.0);
        CHECK(yuv_nr(yuv, p) == yuv);
    }
    SUBCASE("constant input is unchanged") {
        const PlanarImage yuv = rgb_to_yuv(gray_rgb(12, 12, 0.6));
        const PlanarImage out = yuv_nr(yuv, BlockParams(BlockId::YuvNR, {0.2, 0.3, 4.0, 1.0}));
        for (std::size_t i = 0; i < yuv.size(); ++i) CHECK(out.data()[i] == doctest::Approx(yuv.data()[i]).epsilon(1e-12));
    }
    SUBCASE("chroma noise with flat luma is reduced") {
        PlanarImage yuv(64, 64, 3, ColorDomain::YUV);
        std::mt19937_64 rng(7);
        std::normal_distribution<double> n(0.0, 0.03);
        for (double& v : yuv.plane(0)) v = 0.5;
        for (int c = 1; c < 3; ++c)
            for (double& v : yuv.plane(c)) v = n(rng);
        const PlanarImage out = yuv_nr(yuv, BlockParams(BlockId::YuvNR, {0.0, 0.1, 1.5, 1.0}));
        CHECK(variance(out.plane(1)) < variance(yuv.plane(1)));
        CHECK(variance(out.plane(2)) < variance(yuv.plane(2)));
        CHECK(oracle::plane_vector(out, 0) == oracle::plane_vector(yuv, 0));
    }
    SUBCASE("higher beta never raises luma variance") {
        PlanarImage yuv(64, 64, 3, ColorDomain::YUV);
        std::mt19937_64 rng(8);
        std::normal_distribution<double> n(0.5, 0.03);
        for (double& v : yuv.plane(0)) v = n(rng);
        double prev = variance(yuv.plane(0));
        for (double beta : {0.3, 0.6, 1.0}) {
            const double v = variance(yuv_nr(yuv, BlockParams(BlockId::YuvNR, {0.1, 0.1, 1.5, beta})).plane(0));
            CHECK(v <= prev);
            prev = v;
        }
    }
    CHECK_THROWS_AS(yuv_nr(rgb_to_yuv(gray_rgb(8, 8, 0.5)), BlockParams::mid_range(BlockId::BayerNR)), Error);
}

TEST_CASE("sharpen") {
    SUBCASE("gain 0 is the identity") {
        const PlanarImage yuv = rgb_to_yuv(oracle::random_image(16, 16, 3, 9));
        BlockParams p = BlockParams::mid_range(BlockId::Sharpen);
        p.set("gain", 0.0);
        CHECK(sharpen(yuv, p) == yuv);
    }
    SUBCASE("constant image is unchanged") {
        const PlanarImage yuv = rgb_to_yuv(gray_rgb(16, 16, 0.3));
        const PlanarImage out = sharpen(yuv, BlockParams(BlockId::Sharpen, {3.0, 0.0, 4.0, 0.5}));
        for (std::size_t i = 0; i < yuv.size(); ++i) CHECK(out.data()[i] == doctest::Approx(yuv.data()[i]).epsilon(1e-12));
    }
    SUBCASE("step edge contrast increases and chroma is untouched") {
        PlanarImage yuv(32, 16, 3, ColorDomain::YUV);
        for (int y = 0; y < 16; ++y)
            for (int x = 0; x < 32; ++x) {
                yuv.at(0, y, x) = x < 16 ? 0.3 : 0.7;
                yuv.at(1, y, x) = 0.01 * x;
            }
        const PlanarImage out = sharpen(yuv, BlockParams(BlockId::Sharpen, {1.0, 0.0, 1.0, 0.5}));
        const double before = yuv.at(0, 8, 16) - yuv.at(0, 8, 15);
        const double after = out.at(0, 8, 16) - out.at(0, 8, 15);
        CHECK(after > before);
        // Direct evaluation of the unsharp mask at the two edge pixels: the
        // 1-D step through the normalized Gaussian.
        const int size = gaussian_size_for(1.0);
        const auto g = oracle::gaussian_taps(size, 1.0);
        auto blurred = [&](int x) {
            double acc = 0.0;
            const int r = size / 2;
            for (int i = -r; i <= r; ++i)
                for (int j = -r; j <= r; ++j) acc += g[(i + r) * size + (j + r)] * ((std::clamp(x + j, 0, 31) < 16) ? 0.3 : 0.7);
            return acc;
        };
        const double lo = 0.3 + (0.3 - blurred(15));
        const double hi = 0.7 + (0.7 - blurred(16));
        CHECK(out.at(0, 8, 15) == doctest::Approx(std::max(lo, 0.3 - 0.5)).epsilon(1e-9));
        CHECK(out.at(0, 8, 16) == doctest::Approx(std::min(hi, 0.7 + 0.5)).epsilon(1e-9));
        CHECK(oracle::plane_vector(out, 1) == oracle::plane_vector(yuv, 1));
        CHECK(oracle::plane_vector(out, 2) == oracle::plane_vector(yuv, 2));
    }
    SUBCASE("overshoot clamp bounds the output") {
        const PlanarImage yuv = rgb_to_yuv(oracle::random_image(20, 20, 3, 10));
        const PlanarImage out = sharpen(yuv, BlockParams(BlockId::Sharpen, {2.0, 0.0, 4.0, 0.0}));
        for (int y = 0; y < 20; ++y)
            for (int x = 0; x < 20; ++x) {
                double lo = 1e9;
                double hi = -1e9;
                for (int i = -1; i <= 1; ++i)
                    for (int j = -1; j <= 1; ++j) {
                        const double v = yuv.at(0, std::clamp(y + i, 0, 19), std::clamp(x + j, 0, 19));
                        lo = std::min(lo, v);
                        hi = std::max(hi, v);
                    }
                CHECK(out.at(0, y, x) >= lo - 1e-15);
                CHECK(out.at(0, y, x) <= hi + 1e-15);
            }
    }
}

TEST_CASE("pipeline") {
    const NoiseModel nm{2e-4, 2e-6, 2.0};
    const PlanarImage scene = oracle::random_image(24, 24, 3, 11, 0.1, 0.9);
    const BayerMosaic clean = bayer_subsample(scene, CfaPattern::RGGB);

    SUBCASE("passthrough tuning equals plain demosaic") {
        const PipelineTaps taps = run_pipeline(clean, PipelineTuning::passthrough(), nm);
        const PlanarImage plain = demosaic(clean, BlockParams::passthrough(BlockId::Demosaic));
        REQUIRE(taps.output);
        for (std::size_t i = 0; i < plain.size(); ++i)
            CHECK(taps.output->data()[i] == doctest::Approx(std::clamp(plain.data()[i], 0.0, 1.0)).epsilon(1e-6));
    }
    SUBCASE("constant gray stays gray") {
        const BayerMosaic m(16, 16, CfaPattern::RGGB, 0.5);
        const PipelineTaps taps = run_pipeline(m, PipelineTuning::mid_range(), nm);
        for (double v : taps.output->data()) CHECK(v == doctest::Approx(0.5).epsilon(1e-9));
    }
    SUBCASE("taps agree with manual composition") {
        const PipelineTuning t = PipelineTuning::mid_range();
        const PipelineTaps taps = run_pipeline(clean, t, nm);
        const BayerMosaic nr = bayer_nr(clean, t.at(BlockId::BayerNR), nm);
        const PlanarImage rgb = demosaic(nr, t.at(BlockId::Demosaic));
        const PlanarImage yuv = yuv_nr(rgb_to_yuv(rgb), t.at(BlockId::YuvNR));
        const PlanarImage sh = sharpen(yuv, t.at(BlockId::Sharpen));
        CHECK(*taps.bayer_nr == nr);
        CHECK(*taps.demosaic == rgb);
        CHECK(*taps.yuv_nr == yuv);
        CHECK(*taps.sharpen == sh);
        PlanarImage out = yuv_to_rgb(sh);
        for (double& v : out.data()) v = std::clamp(v, 0.0, 1.0);
        CHECK(*taps.output == out);
        CHECK(taps.block_output(BlockId::Sharpen) == sh.channel(0));
        CHECK(taps.block_output(BlockId::BayerNR) == nr.as_plane());
    }
    SUBCASE("incomplete tuning") {
        PipelineTuning partial;
        partial.set(BlockParams::mid_range(BlockId::BayerNR));
        CHECK_THROWS_AS(run_pipeline(clean, partial, nm), Error);
        const PipelineTaps taps = run_pipeline_until(clean, partial, nm, BlockId::BayerNR);
        CHECK(taps.bayer_nr.has_value());
        CHECK_FALSE(taps.demosaic.has_value());
        try {
            (void)taps.block_output(BlockId::YuvNR);
            FAIL("expected MissingTap");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingTap);
        }
        try {
            (void)run_pipeline_until(clean, partial, nm, BlockId::Demosaic);
            FAIL("expected MissingUpstream");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingUpstream);
        }
    }
    SUBCASE("every block preserves dimensions and finiteness") {
        const PipelineTaps taps = run_pipeline(clean, PipelineTuning::mid_range(), nm);
        CHECK(taps.bayer_nr->width() == 24);
        for (const auto* img : {&*taps.demosaic, &*taps.yuv_nr, &*taps.sharpen, &*taps.output}) {
            CHECK(img->width() == 24);
            CHECK(img->height() == 24);
            CHECK(img->all_finite());
        }
    }
}

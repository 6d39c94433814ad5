// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "doctest.h"
#include "oracles.hpp"

#include "isptune/error.hpp"
#include "isptune/fitness.hpp"

using namespace isptune;

TEST_CASE("sad") {
    const PlanarImage a = oracle::random_image(8, 8, 1, 1);
    CHECK(sad(a, a) == 0.0);

    PlanarImage b(10, 10, 1, ColorDomain::Plane, 0.3);
    PlanarImage c = b;
    for (double& v : c.data()) v += 0.01;
    CHECK(sad(b, c) == doctest::Approx(1.0).epsilon(1e-12));

    const PlanarImage x = oracle::random_image(8, 8, 3, 2);
    const PlanarImage y = oracle::random_image(8, 8, 3, 3);
    double brute = 0.0;
    for (int ch = 0; ch < 3; ++ch)
        for (int r = 0; r < 8; ++r)
            for (int col = 0; col < 8; ++col) brute += std::abs(x.at(ch, r, col) - y.at(ch, r, col));
    CHECK(std::abs(sad(x, y) - brute) < 1e-12);

    CHECK_THROWS_AS(sad(a, x), Error);
}

TEST_CASE("sad is a metric on random triples") {
    for (unsigned s = 0; s < 20; ++s) {
        const PlanarImage a = oracle::random_image(6, 5, 1, 100 + 3 * s);
        const PlanarImage b = oracle::random_image(6, 5, 1, 101 + 3 * s);
        const PlanarImage c = oracle::random_image(6, 5, 1, 102 + 3 * s);
        CHECK(sad(a, b) >= 0.0);
        CHECK(std::abs(sad(a, b) - sad(b, a)) < 1e-9);
        CHECK(sad(a, c) <= sad(a, b) + sad(b, c) + 1e-9);
    }
}

TEST_CASE("mad_8bit") {
    const PlanarImage a = oracle::random_image(7, 9, 3, 4);
    CHECK(mad_8bit(a, a) == 0.0);
    PlanarImage b = a;
    for (double& v : b.data()) v += 1.0 / 255.0;
    CHECK(mad_8bit(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    const PlanarImage c = oracle::random_image(7, 9, 3, 5);
    CHECK(std::abs(mad_8bit(a, c) - 255.0 * sad(a, c) / static_cast<double>(a.size())) < 1e-9);
    CHECK_THROWS_AS(mad_8bit(a, oracle::random_image(7, 8, 3, 6)), Error);
}

TEST_CASE("ssim") {
    const PlanarImage a = oracle::random_image(32, 32, 1, 7);
    const PlanarImage b = oracle::random_image(32, 32, 1, 8);
    CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-12);
    CHECK(ssim(a, b) < 1.0);
    CHECK(ssim(a, b) <= 1.0);

    SUBCASE("two constants reduce to the luminance term") {
        const double c = 0.4;
        const PlanarImage x(24, 24, 1, ColorDomain::Plane, c);
        const PlanarImage y(24, 24, 1, ColorDomain::Plane, c + 0.1);
        const double c1 = 0.01 * 0.01;
        const double expected = (2.0 * c * (c + 0.1) + c1) / (c * c + (c + 0.1) * (c + 0.1) + c1);
        CHECK(ssim(x, y) == doctest::Approx(expected).epsilon(1e-9));
    }
    SUBCASE("colour inputs use BT.601 luma") {
        const PlanarImage rgb1 = oracle::random_image(20, 20, 3, 9);
        const PlanarImage rgb2 = oracle::random_image(20, 20, 3, 10);
        CHECK(ssim(rgb1, rgb2) == doctest::Approx(ssim(luma(rgb1), luma(rgb2))).epsilon(1e-12));
    }
    SUBCASE("direct evaluation of the windowed statistics") {
        const int w = 14;
        const int h = 13;
        const PlanarImage p = oracle::random_image(w, h, 1, 11);
        const PlanarImage q = oracle::random_image(w, h, 1, 12);
        const auto g = oracle::gaussian_taps(11, 1.5);
        const double c1 = 1e-4;
        const double c2 = 9e-4;
        double total = 0.0;
        int count = 0;
        for (int y0 = 0; y0 + 11 <= h; ++y0)
            for (int x0 = 0; x0 + 11 <= w; ++x0) {
                double mp = 0, mq = 0, pp = 0, qq = 0, pq = 0;
                for (int i = 0; i < 11; ++i)
                    for (int j = 0; j < 11; ++j) {
                        const double wt = g[i * 11 + j];
                        const double u = p.at(0, y0 + i, x0 + j);
                        const double v = q.at(0, y0 + i, x0 + j);
                        mp += wt * u;
                        mq += wt * v;
                        pp += wt * u * u;
                        qq += wt * v * v;
                        pq += wt * u * v;
                    }
                const double vp = pp - mp * mp;
                const double vq = qq - mq * mq;
                const double cv = pq - mp * mq;
                total += ((2 * mp * mq + c1) * (2 * cv + c2)) / ((mp * mp + mq * mq + c1) * (vp + vq + c2));
                ++count;
            }
        CHECK(ssim(p, q) == doctest::Approx(total / count).epsilon(1e-10));
    }
    CHECK_THROWS_AS(ssim(PlanarImage(8, 8, 1, ColorDomain::Plane), PlanarImage(8, 8, 1, ColorDomain::Plane)), Error);
}

TEST_CASE("ms_ssim") {
    const PlanarImage a = oracle::random_image(64, 64, 1, 13);
    const PlanarImage b = oracle::random_image(64, 64, 1, 14);
    CHECK(ms_ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ms_ssim(a, b) >= 0.0);
    CHECK(ms_ssim(a, b) <= 1.0);
    CHECK(std::abs(ms_ssim(a, b, 1) - ssim(a, b)) < 1e-9);
    CHECK(ms_ssim_scales(176, 176) == 5);
    CHECK(ms_ssim_scales(128, 128) == 4);
    CHECK(ms_ssim_scales(64, 64) == 3);
    CHECK(ms_ssim_scales(10, 64) == 0);
    double total = 0.0;
    for (double w : kMsSsimWeights) total += w;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("block_fitness and fitness_view") {
    const NoiseModel nm{2e-4, 2e-6, 1.0};
    const BayerMosaic m = bayer_subsample(oracle::random_image(24, 24, 3, 15), CfaPattern::RGGB);
    const PipelineTaps taps = run_pipeline(m, PipelineTuning::mid_range(), nm);

    SUBCASE("reference equal to the tap scores zero") {
        CHECK(block_fitness(BlockId::BayerNR, taps, taps.bayer_nr->as_plane()) == 0.0);
        CHECK(block_fitness(BlockId::Demosaic, taps, *taps.demosaic) == 0.0);
        CHECK(block_fitness(BlockId::YuvNR, taps, *taps.yuv_nr) == 0.0);
        CHECK(block_fitness(BlockId::Sharpen, taps, *taps.sharpen) == 0.0);
    }
    SUBCASE("Sharpen fitness ignores chroma") {
        PlanarImage ref = *taps.sharpen;
        for (double& v : ref.plane(1)) v += 0.2;
        for (double& v : ref.plane(2)) v -= 0.1;
        CHECK(block_fitness(BlockId::Sharpen, taps, ref) == 0.0);
        for (double& v : ref.plane(0)) v += 0.01;
        CHECK(block_fitness(BlockId::Sharpen, taps, ref) > 0.0);
    }
    SUBCASE("BayerNR fitness equals a direct sad") {
        const PlanarImage ref = bayer_subsample(oracle::random_image(24, 24, 3, 16), CfaPattern::RGGB).as_plane();
        CHECK(block_fitness(BlockId::BayerNR, taps, ref) == sad(taps.bayer_nr->as_plane(), ref));
    }
    SUBCASE("domain and tap errors") {
        try {
            (void)block_fitness(BlockId::Demosaic, taps, *taps.yuv_nr);
            FAIL("expected DomainMismatch");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DomainMismatch);
        }
        const PipelineTaps partial = run_pipeline_until(m, PipelineTuning::mid_range(), nm, BlockId::BayerNR);
        try {
            (void)block_fitness(BlockId::Sharpen, partial, *taps.sharpen);
            FAIL("expected MissingTap");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingTap);
        }
    }
}

TEST_CASE("fitness report and CSV row") {
    const PlanarImage a = oracle::random_image(32, 32, 3, 17);
    PlanarImage ref = a;
    ref.set_domain(ColorDomain::LinearRGB);
    const FitnessReport same = fitness_report(BlockId::Demosaic, "Auto", a, ref);
    CHECK(same.mad_8bit == 0.0);
    CHECK(same.ssim == doctest::Approx(1.0));
    CHECK(same.ms_ssim == doctest::Approx(1.0));

    const PlanarImage b = oracle::random_image(32, 32, 3, 18);
    const FitnessReport r = fitness_report(BlockId::Demosaic, "Not", a, b);
    CHECK(r.pixel_count == a.size());
    CHECK(std::abs(r.mad_8bit - 255.0 * r.sad / static_cast<double>(r.pixel_count)) < 1e-9);
    CHECK(fitness_csv_header() == "block,tuning,MAD,SSIM,MS-SSIM");
    const std::string row = to_csv_row(r);
    CHECK(row.rfind("Demosaic,Not,", 0) == 0);
}

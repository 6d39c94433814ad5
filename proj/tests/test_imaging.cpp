// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "doctest.h"
#include "oracles.hpp"

#include "isptune/error.hpp"
#include "isptune/imaging.hpp"

#include <filesystem>
#include <fstream>

using namespace isptune;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("isptune_test_imaging_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

PlanarImage ramp(int w, int h, double sx, double sy) {
    PlanarImage img(w, h, 1, ColorDomain::Plane);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(0, y, x) = sx * x + sy * y;
    return img;
}

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an isptune::Error");
    return ErrorCode::InvalidArgument;
}

} // namespace

TEST_CASE("PlanarImage layout and finiteness") {
    PlanarImage img(5, 4, 3, ColorDomain::LinearRGB, 0.25);
    CHECK(img.size() == 5u * 4u * 3u);
    CHECK(img.all_finite());
    img.at(2, 3, 4) = std::nan("");
    CHECK_FALSE(img.all_finite());
    CHECK_THROWS_AS(PlanarImage(4, 4, 2, ColorDomain::Plane), Error);
}

TEST_CASE("convolve2d with a 1x1 unit kernel is the identity") {
    const PlanarImage img = oracle::random_image(9, 7, 3, 1);
    CHECK(convolve2d(img, identity_kernel()) == img);
}

TEST_CASE("sum-1 kernels preserve constant images") {
    const PlanarImage img(12, 10, 1, ColorDomain::Plane, 0.37);
    for (const Kernel2D& k : {box_kernel(3), gaussian_kernel(5, 1.2), box_kernel(9)}) {
        const PlanarImage out = convolve2d(img, k);
        for (double v : out.data()) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));
    }
}

TEST_CASE("box filter leaves interior of a horizontal ramp unchanged") {
    const PlanarImage img = ramp(5, 5, 1.0 / 5.0, 0.0);
    const PlanarImage out = convolve2d(img, box_kernel(3));
    for (int y = 1; y < 4; ++y)
        for (int x = 1; x < 4; ++x) CHECK(out.at(0, y, x) == doctest::Approx(img.at(0, y, x)).epsilon(1e-12));
}

TEST_CASE("convolve2d matches a direct edge-replicated correlation") {
    const PlanarImage img = oracle::random_image(11, 8, 1, 2);
    std::vector<double> taps(25);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (double& t : taps) t = u(rng);
    const auto expected = oracle::correlate(oracle::plane_vector(img), 11, 8, taps, 5);
    const PlanarImage out = convolve2d(img, Kernel2D(5, taps));
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(out.data()[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("convolution is linear") {
    const PlanarImage x = oracle::random_image(16, 16, 1, 4);
    const PlanarImage y = oracle::random_image(16, 16, 1, 5);
    const Kernel2D k = gaussian_kernel(5, 1.0);
    PlanarImage mix(16, 16, 1, ColorDomain::Plane);
    for (std::size_t i = 0; i < mix.size(); ++i) mix.data()[i] = 2.5 * x.data()[i] - 0.75 * y.data()[i];
    const PlanarImage lhs = convolve2d(mix, k);
    const PlanarImage cx = convolve2d(x, k);
    const PlanarImage cy = convolve2d(y, k);
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs.data()[i] - (2.5 * cx.data()[i] - 0.75 * cy.data()[i])) < 1e-9);
}

TEST_CASE("sum-1 kernels preserve the mean of interior regions") {
    const PlanarImage img = oracle::random_image(40, 40, 1, 6);
    const PlanarImage out = convolve2d(img, box_kernel(3));
    // Interior of the output draws only on interior input; compare sums on a
    // region whose kernel footprint stays inside the image.
    double in_sum = 0.0;
    double out_sum = 0.0;
    for (int y = 1; y < 39; ++y)
        for (int x = 1; x < 39; ++x) out_sum += out.at(0, y, x);
    for (int y = 1; y < 39; ++y)
        for (int x = 1; x < 39; ++x) {
            double acc = 0.0;
            for (int i = -1; i <= 1; ++i)
                for (int j = -1; j <= 1; ++j) acc += img.at(0, y + i, x + j) / 9.0;
            in_sum += acc;
        }
    CHECK(std::abs(in_sum - out_sum) < 1e-9);
}

TEST_CASE("kernel larger than the image is rejected") {
    const PlanarImage img(4, 4, 1, ColorDomain::Plane);
    try {
        convolve2d(img, box_kernel(5));
        FAIL("expected KernelTooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::KernelTooLarge);
        CHECK(std::string(e.what()) == "kernel exceeds image");
    }
}

TEST_CASE("gaussian_blur agrees with the full 2-D kernel") {
    const PlanarImage img = oracle::random_image(20, 18, 3, 7);
    const PlanarImage a = gaussian_blur(img, 9, 2.5);
    const PlanarImage b = convolve2d(img, gaussian_kernel(9, 2.5));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.data()[i] - b.data()[i]) < 1e-12);
}

TEST_CASE("gaussian_kernel taps") {
    CHECK(gaussian_kernel(9, 2.5).sum() == doctest::Approx(1.0).epsilon(1e-9));
    const Kernel2D one = gaussian_kernel(1, 0.7);
    CHECK(one.size() == 1);
    CHECK(one.tap(0, 0) == 1.0);
    double total = 0.0;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) total += std::exp(-(i * i + j * j) / 2.0);
    CHECK(gaussian_kernel(3, 1.0).tap(0, 0) == doctest::Approx(1.0 / total).epsilon(1e-12));
    CHECK_THROWS_AS(gaussian_kernel(4, 1.0), Error);
    CHECK_THROWS_AS(gaussian_kernel(3, 0.0), Error);
}

TEST_CASE("box_kernel taps") {
    const Kernel2D k = box_kernel(9);
    for (double t : k.taps()) CHECK(t == doctest::Approx(1.0 / 81.0).epsilon(1e-15));
    CHECK(box_kernel(1).tap(0, 0) == 1.0);
    CHECK_THROWS_AS(box_kernel(2), Error);
    const PlanarImage c(6, 6, 1, ColorDomain::Plane, 0.6);
    const PlanarImage out = convolve2d(c, box_kernel(3));
    for (double v : out.data()) CHECK(v == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("scharr gradients") {
    SUBCASE("constant image has zero gradient") {
        const Gradients g = scharr_gradients(PlanarImage(8, 8, 1, ColorDomain::Plane, 0.4));
        for (double v : g.horizontal.data()) CHECK(v == 0.0);
        for (double v : g.vertical.data()) CHECK(v == 0.0);
    }
    SUBCASE("unit-slope ramp gives slope") {
        const double s = 0.03;
        const Gradients g = scharr_gradients(ramp(10, 10, s, 0.0));
        for (int y = 1; y < 9; ++y)
            for (int x = 1; x < 9; ++x) {
                CHECK(g.horizontal.at(0, y, x) == doctest::Approx((3.0 + 10.0 + 3.0) * 2.0 * s / 32.0).epsilon(1e-12));
                CHECK(std::abs(g.vertical.at(0, y, x)) < 1e-15);
            }
    }
    SUBCASE("vertical kernel is the transpose of the horizontal one") {
        const Kernel2D h = scharr_horizontal();
        const Kernel2D v = scharr_vertical();
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j) CHECK(v.tap(i, j) == h.tap(j, i));
        CHECK(h.tap(0, 1) == doctest::Approx(10.0 / 32.0));
    }
    SUBCASE("transposing the image swaps the gradients") {
        const PlanarImage img = oracle::random_image(9, 13, 1, 8);
        const Gradients g = scharr_gradients(img);
        const Gradients gt = scharr_gradients(transpose(img));
        const PlanarImage a = transpose(gt.horizontal);
        const PlanarImage b = transpose(gt.vertical);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(std::abs(a.data()[i] - g.vertical.data()[i]) < 1e-12);
            CHECK(std::abs(b.data()[i] - g.horizontal.data()[i]) < 1e-12);
        }
    }
    CHECK_THROWS_AS(scharr_gradients(PlanarImage(4, 4, 3, ColorDomain::LinearRGB)), Error);
}

TEST_CASE("BT.601 colour conversion") {
    PlanarImage gray(2, 2, 3, ColorDomain::LinearRGB, 0.3);
    const PlanarImage yuv = rgb_to_yuv(gray);
    CHECK(yuv.domain() == ColorDomain::YUV);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x) {
            CHECK(yuv.at(0, y, x) == doctest::Approx(0.3).epsilon(1e-15));
            CHECK(std::abs(yuv.at(1, y, x)) < 1e-15);
            CHECK(std::abs(yuv.at(2, y, x)) < 1e-15);
        }

    PlanarImage red(1, 1, 3, ColorDomain::LinearRGB);
    red.at(0, 0, 0) = 1.0;
    const PlanarImage r = rgb_to_yuv(red);
    CHECK(r.at(0, 0, 0) == doctest::Approx(0.299));
    CHECK(r.at(2, 0, 0) == doctest::Approx(0.713 * 0.701));
    CHECK(r.at(1, 0, 0) == doctest::Approx(0.564 * -0.299));

    const PlanarImage rnd = oracle::random_image(13, 11, 3, 9);
    const PlanarImage back = yuv_to_rgb(rgb_to_yuv(rnd));
    for (std::size_t i = 0; i < rnd.size(); ++i) CHECK(std::abs(back.data()[i] - rnd.data()[i]) < 1e-6);

    CHECK(code_of([&] { rgb_to_yuv(yuv); }) == ErrorCode::DomainMismatch);
    CHECK(code_of([&] { yuv_to_rgb(rnd); }) == ErrorCode::DomainMismatch);
}

TEST_CASE("CFA site function") {
    for (CfaPattern p : {CfaPattern::RGGB, CfaPattern::BGGR, CfaPattern::GRBG, CfaPattern::GBRG}) {
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) {
                CHECK(cfa_channel(p, x, y) == cfa_channel(p, x + 2, y));
                CHECK(cfa_channel(p, x, y) == cfa_channel(p, x, y + 2));
            }
        CHECK(parse_cfa_pattern(to_string(p)) == p);
    }
    CHECK(cfa_channel(CfaPattern::RGGB, 0, 0) == 0);
    CHECK(cfa_channel(CfaPattern::RGGB, 1, 1) == 2);
    CHECK(cfa_channel(CfaPattern::GRBG, 1, 0) == 0);
    CHECK(cfa_channel(CfaPattern::GBRG, 0, 1) == 0);
    CHECK_THROWS_AS(parse_cfa_pattern("RGBG"), Error);
}

TEST_CASE("bayer_subsample") {
    SUBCASE("constant gray") {
        const BayerMosaic m = bayer_subsample(PlanarImage(6, 4, 3, ColorDomain::LinearRGB, 0.42), CfaPattern::BGGR);
        for (double v : m.data()) CHECK(v == 0.42);
    }
    SUBCASE("pure red on RGGB") {
        PlanarImage red(6, 6, 3, ColorDomain::LinearRGB);
        for (double& v : red.plane(0)) v = 1.0;
        const BayerMosaic m = bayer_subsample(red, CfaPattern::RGGB);
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) CHECK(m.at(y, x) == ((x % 2 == 0 && y % 2 == 0) ? 1.0 : 0.0));
    }
    SUBCASE("random image follows the site function") {
        const PlanarImage rgb = oracle::random_image(10, 8, 3, 10);
        for (CfaPattern p : {CfaPattern::RGGB, CfaPattern::GBRG}) {
            const BayerMosaic m = bayer_subsample(rgb, p);
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 10; ++x) CHECK(m.at(y, x) == rgb.at(cfa_channel(p, x, y), y, x));
        }
    }
    CHECK_THROWS_AS(bayer_subsample(PlanarImage(5, 4, 3, ColorDomain::LinearRGB), CfaPattern::RGGB), Error);
}

TEST_CASE("16-bit quantization") {
    CHECK(quantize16(1.0) == 65535);
    CHECK(quantize16(0.0) == 0);
    CHECK(quantize16(0.5) == 32768);
    CHECK(quantize16(-0.2) == 0);
    CHECK(quantize16(1.7) == 65535);
    CHECK(dequantize16(65535) == 1.0);
}

TEST_CASE("netpbm round trips are bit-exact") {
    const fs::path dir = temp_dir("roundtrip");
    SUBCASE("mosaic with sidecar") {
        BayerMosaic m(8, 6, CfaPattern::GRBG);
        std::mt19937 rng(11);
        std::uniform_int_distribution<int> u(0, 65535);
        for (double& v : m.data()) v = dequantize16(static_cast<std::uint16_t>(u(rng)));
        write_mosaic(dir / "m.pgm", m);
        CHECK(fs::exists(mosaic_sidecar_path(dir / "m.pgm")));
        const BayerMosaic back = read_mosaic(dir / "m.pgm");
        CHECK(back == m);
    }
    SUBCASE("rgb") {
        const PlanarImage img = oracle::random_image(7, 5, 3, 12);
        write_ppm16(dir / "c.ppm", img);
        const PlanarImage back = read_image(dir / "c.ppm");
        REQUIRE(back.channels() == 3);
        for (std::size_t i = 0; i < img.size(); ++i) CHECK(quantize16(back.data()[i]) == quantize16(img.data()[i]));
        write_ppm16(dir / "c2.ppm", back);
        CHECK(read_image(dir / "c2.ppm") == back);
    }
    SUBCASE("mask") {
        std::vector<bool> mask(12);
        for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = i % 3 == 0;
        write_mask(dir / "mask.pgm", mask, 4, 3);
        int w = 0;
        int h = 0;
        CHECK(read_mask(dir / "mask.pgm", &w, &h) == mask);
        CHECK(w == 4);
        CHECK(h == 3);
    }
}

TEST_CASE("netpbm errors are distinct") {
    const fs::path dir = temp_dir("errors");
    {
        std::ofstream(dir / "bad.pgm", std::ios::binary) << "P7\n2 2\n65535\n";
    }
    CHECK(code_of([&] { read_image(dir / "bad.pgm"); }) == ErrorCode::MalformedHeader);
    {
        std::ofstream(dir / "short.pgm", std::ios::binary) << "P5\n# comment\n4 4\n65535\n" << std::string(5, '\0');
    }
    CHECK(code_of([&] { read_image(dir / "short.pgm"); }) == ErrorCode::TruncatedPayload);
    CHECK(code_of([&] { read_image(dir / "missing.pgm"); }) == ErrorCode::Io);
}

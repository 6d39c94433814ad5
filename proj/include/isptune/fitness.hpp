// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#pragma once

#include "isptune/imaging.hpp"
#include "isptune/isp.hpp"

#include <array>
#include <cstddef>
#include <string>

namespace isptune {

/// Sum of absolute differences over every sample.
double sad(const PlanarImage& a, const PlanarImage& b);

/// 255 * mean(|a - b|): MAD reported on an 8-bit scale.
double mad_8bit(const PlanarImage& a, const PlanarImage& b);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

/// Mean SSIM over the valid (unpadded) window positions. Colour inputs are
/// compared on BT.601 luma.
double ssim(const PlanarImage& a, const PlanarImage& b, const SsimOptions& opt = {});

/// Multi-scale SSIM with 2x2-average downsampling between scales. Uses up to
/// `max_scales` scales, fewer when the image gets smaller than the window,
/// renormalizing the leading weights to sum to 1.
double ms_ssim(const PlanarImage& a, const PlanarImage& b, int max_scales = 5, const SsimOptions& opt = {});

/// Number of scales ms_ssim will actually use for an image of this size.
int ms_ssim_scales(int width, int height, int max_scales = 5, int window = 11);

/// SAD between the block's tap and a reference in the block's domain
/// (BayerNR: Bayer plane, Demosaic: RGB, YuvNR: YUV, Sharpen: Y).
double block_fitness(BlockId block, const PipelineTaps& taps, const PlanarImage& reference);

/// Reference converted to what block_fitness compares against (Y for Sharpen).
PlanarImage fitness_view(BlockId block, const PlanarImage& image);

struct FitnessReport {
    BlockId block = BlockId::BayerNR;
    std::string label;
    double sad = 0.0;
    double mad_8bit = 0.0;
    double ssim = 1.0;
    double ms_ssim = 1.0;
    ColorDomain domain = ColorDomain::Plane;
    std::size_t pixel_count = 0;
};

FitnessReport fitness_report(BlockId block, std::string label, const PlanarImage& output, const PlanarImage& reference);

/// CSV layout: block,tuning,MAD,SSIM,MS-SSIM
std::string fitness_csv_header();
std::string to_csv_row(const FitnessReport& r);

} // namespace isptune

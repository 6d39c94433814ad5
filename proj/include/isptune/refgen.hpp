// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#pragma once

#include "isptune/imaging.hpp"
#include "isptune/noise_model.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace isptune {

// -----------------------------------------------------------------------------
// Bursts and temporal references
// -----------------------------------------------------------------------------

/// N frames of a static scene with identical geometry and CFA pattern.
struct Burst {
    std::vector<BayerMosaic> frames;

    void validate() const;
    std::size_t size() const noexcept { return frames.size(); }
};

/// Per-pixel mean of the burst.
BayerMosaic temporal_fusion(const Burst& burst);

/// w*a + (1-w)*b. Mixes a cleaner and a noisier reference to dial in how much
/// noise the tuned block should leave behind.
BayerMosaic blend_references(const BayerMosaic& a, const BayerMosaic& b, double w);

// -----------------------------------------------------------------------------
// Sensor simulation and noise calibration
// -----------------------------------------------------------------------------

/// Mosaic the clean image, then add zero-mean Gaussian noise of variance
/// nm.variance(clean) to every sample and clamp to [0,1]. Frame k draws from a
/// stream derived from (seed, k) only.
Burst simulate_capture(const PlanarImage& clean_rgb, const NoiseModel& nm, CfaPattern pattern, int n_frames,
                       std::uint64_t seed);

struct FlatCapture {
    Burst burst;
    double level = 0.0; ///< known clean value of the flat field
};

/// Fits sigma^2 = a*I + b over flat captures at two or more distinct levels.
/// Per-level variance is estimated about the known level and corrected for
/// clipping at 0 and 1; the line is fitted by weighted least squares
/// (weights 1/var^2). Negative coefficients are clamped to 0 and reported in
/// `warnings` (and on std::clog when no sink is given). The returned model has
/// gain 1, i.e. its coefficients describe the gain the flats were shot at.
NoiseModel calibrate_noise_model(std::span<const FlatCapture> flats, std::vector<std::string>* warnings = nullptr);

/// E[(clip(level + sigma*Z, 0, 1) - level)^2], Z standard normal.
double clipped_variance(double level, double sigma);

// -----------------------------------------------------------------------------
// Edge-directed sharpening reference
// -----------------------------------------------------------------------------

struct SharpenRefConfig {
    double alpha = 1.0;
    double sigma_usm = 2.5;
    int usm_size = 9;
    double sigma_ndir = 0.5;
    int box_size = 9;
    double flat_percentile = 0.2;
};

/// Every intermediate field of the reference, exposed for inspection and tests.
struct SharpenRefTerms {
    PlanarImage grad_h;
    PlanarImage grad_v;
    PlanarImage w;           ///< |G_H| / (|G_H| + |G_V|), 0.5 where both vanish
    PlanarImage detail_dir;  ///< w*(D_H (x) I) + (1-w)*(D_V (x) I)
    PlanarImage detail_ndir; ///< I - I (x) Gaussian
    PlanarImage w_ndir;      ///< exp(-min(|G_H|,|G_V|)^2 / sigma_ndir^2)
    PlanarImage energy;      ///< K (x) |detail_ndir|
    PlanarImage alpha_ndir;  ///< 1 - exp(-energy / sigma_alpha^2)
    double sigma_alpha = 0.0;
    /// alpha_ndir * (w_ndir*D_ndir + (1-w_ndir)*D_dir); I_ref = I + alpha * added.
    PlanarImage added;
};

SharpenRefTerms sharpening_reference_terms(const PlanarImage& fused_y, const SharpenRefConfig& cfg,
                                           const std::vector<bool>& flat_mask);

PlanarImage sharpening_reference(const PlanarImage& fused_y, const SharpenRefConfig& cfg,
                                 const std::vector<bool>& flat_mask);

/// The column kernel [-1, 2, -1]^T embedded in 3x3; its transpose is the row version.
Kernel2D detail_kernel_h();
Kernel2D detail_kernel_v();

/// Lowest `percentile` fraction of pixels by Scharr gradient magnitude.
/// Used when an external image comes without a known flat mask.
std::vector<bool> gradient_flat_mask(const PlanarImage& plane, double percentile);

// -----------------------------------------------------------------------------
// Synthetic test chart
// -----------------------------------------------------------------------------

using Rgb = std::array<double, 3>;

struct Rect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;

    bool contains(int px, int py) const noexcept {
        return px >= x && px < x + width && py >= y && py < y + height;
    }
};

/// Uniform patch. Its interior (rect shrunk by `margin`) enters the flat mask.
struct FlatElement {
    Rect rect;
    Rgb color{0.5, 0.5, 0.5};
    int margin = 0;
};

/// Straight two-tone edge through the rect centre. angle_deg is the direction
/// of the edge normal measured from +x; side `a` is where the normal is negative.
struct EdgeElement {
    Rect rect;
    double angle_deg = 0.0;
    Rgb color_a{0.2, 0.2, 0.2};
    Rgb color_b{0.8, 0.8, 0.8};
};

/// Achromatic zone plate mean + amplitude*cos(pi * k * r^2) with
/// k = max_frequency / R, R = min(w, h)/2, r measured from the rect centre.
/// Local frequency at radius r is max_frequency * r / R cycles per pixel.
struct ZonePlateElement {
    Rect rect;
    double max_frequency = 0.25;
    double mean = 0.5;
    double amplitude = 0.4;
};

/// rows x cols grid of colour patches filled from `colors` in row-major order (cycled).
struct PatchGridElement {
    Rect rect;
    int rows = 2;
    int cols = 3;
    std::vector<Rgb> colors;
};

/// Smooth seeded random texture: bilinearly upsampled uniform noise on a
/// grid of `cell` pixels.
struct TextureElement {
    Rect rect;
    double mean = 0.5;
    double amplitude = 0.2;
    int cell = 4;
};

using SceneElement = std::variant<FlatElement, EdgeElement, ZonePlateElement, PatchGridElement, TextureElement>;

struct SceneSpec {
    int width = 128;
    int height = 128;
    Rgb background{0.45, 0.45, 0.45};
    std::vector<SceneElement> elements;

    /// Test chart used by the tuner when no scene file is given. Element
    /// geometry scales with the requested size.
    static SceneSpec default_chart(int width = 128, int height = 128);
};

struct Scene {
    PlanarImage rgb; ///< LinearRGB
    std::vector<bool> flat_mask;
};

Scene synthesize_scene(const SceneSpec& spec, std::uint64_t seed);

/// Evaluates the zone plate formula at a (continuous) pixel-centre position.
double zone_plate_value(const ZonePlateElement& z, double px, double py);

} // namespace isptune

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace isptune {

enum class ColorDomain { LinearRGB, YUV, Plane };

std::string_view to_string(ColorDomain d);

/// Real-valued image stored channel-planar: all of channel 0, then channel 1, ...
/// Nominal range is [0,1] but intermediate stages may overshoot.
class PlanarImage {
public:
    PlanarImage() = default;
    PlanarImage(int width, int height, int channels, ColorDomain domain, double fill = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    ColorDomain domain() const noexcept { return domain_; }
    std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width_) * height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
    double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

    /// Edge-replicated access; coordinates outside the image clamp to the border.
    double clamped(int c, int y, int x) const;

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> plane(int c);
    std::span<const double> plane(int c) const;

    /// Copy of one channel as a single-plane image.
    PlanarImage channel(int c) const;
    void set_channel(int c, const PlanarImage& plane);

    void set_domain(ColorDomain d) noexcept { domain_ = d; }

    bool same_shape(const PlanarImage& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }
    bool all_finite() const noexcept;

    friend bool operator==(const PlanarImage&, const PlanarImage&) = default;

private:
    std::size_t index(int c, int y, int x) const noexcept {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    ColorDomain domain_ = ColorDomain::Plane;
    std::vector<double> data_;
};

PlanarImage transpose(const PlanarImage& img);

// -----------------------------------------------------------------------------
// Color filter array
// -----------------------------------------------------------------------------

enum class CfaPattern { RGGB, BGGR, GRBG, GBRG };

/// Channel index (0 = R, 1 = G, 2 = B) sampled at (x, y) for the pattern.
int cfa_channel(CfaPattern pattern, int x, int y) noexcept;

std::string_view to_string(CfaPattern p);
CfaPattern parse_cfa_pattern(std::string_view s);

/// Single-plane CFA image. Width and height are always even.
class BayerMosaic {
public:
    BayerMosaic() = default;
    BayerMosaic(int width, int height, CfaPattern pattern, double fill = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    CfaPattern pattern() const noexcept { return pattern_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& at(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    double at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

    int channel_at(int x, int y) const noexcept { return cfa_channel(pattern_, x, y); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool same_geometry(const BayerMosaic& o) const noexcept {
        return width_ == o.width_ && height_ == o.height_ && pattern_ == o.pattern_;
    }

    /// View of the mosaic as a one-channel Plane image (copy).
    PlanarImage as_plane() const;
    static BayerMosaic from_plane(const PlanarImage& plane, CfaPattern pattern);

    friend bool operator==(const BayerMosaic&, const BayerMosaic&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    CfaPattern pattern_ = CfaPattern::RGGB;
    std::vector<double> data_;
};

BayerMosaic bayer_subsample(const PlanarImage& rgb, CfaPattern pattern);

// -----------------------------------------------------------------------------
// Kernels and filtering
// -----------------------------------------------------------------------------

/// Square odd-sized kernel, row-major taps. Applied as correlation:
/// out(x,y) = sum k(i,j) * in(x+i, y+j), no flip.
class Kernel2D {
public:
    Kernel2D(int size, std::vector<double> taps);

    int size() const noexcept { return size_; }
    int radius() const noexcept { return size_ / 2; }
    double tap(int dy, int dx) const noexcept {
        return taps_[static_cast<std::size_t>(dy + radius()) * size_ + (dx + radius())];
    }
    std::span<const double> taps() const noexcept { return taps_; }
    double sum() const noexcept;
    Kernel2D transposed() const;

private:
    int size_;
    std::vector<double> taps_;
};

Kernel2D gaussian_kernel(int size, double sigma);
Kernel2D box_kernel(int size);
Kernel2D identity_kernel();

/// 3x3 Scharr pair, taps (3, 10, 3) / 32 so a unit-slope ramp gives 1.0.
Kernel2D scharr_horizontal();
Kernel2D scharr_vertical();

/// Per-channel correlation with edge replication.
PlanarImage convolve2d(const PlanarImage& img, const Kernel2D& k);

/// Separable Gaussian blur, numerically the same filter as
/// convolve2d(img, gaussian_kernel(size, sigma)).
PlanarImage gaussian_blur(const PlanarImage& img, int size, double sigma);

/// Kernel size covering +-3 sigma, always odd.
int gaussian_size_for(double sigma);

struct Gradients {
    PlanarImage horizontal;
    PlanarImage vertical;
};

Gradients scharr_gradients(const PlanarImage& plane);

// -----------------------------------------------------------------------------
// Color conversion (BT.601 full range)
// -----------------------------------------------------------------------------

PlanarImage rgb_to_yuv(const PlanarImage& rgb);
PlanarImage yuv_to_rgb(const PlanarImage& yuv);
/// Luma of an RGB image, the Y plane of a YUV image, or the plane itself.
PlanarImage luma(const PlanarImage& img);

// -----------------------------------------------------------------------------
// Netpbm I/O. 16-bit samples, big-endian, values mapped linearly to [0,1].
// -----------------------------------------------------------------------------

std::uint16_t quantize16(double v) noexcept;
double dequantize16(std::uint16_t s) noexcept;

PlanarImage read_pgm(const std::filesystem::path& path);
PlanarImage read_ppm(const std::filesystem::path& path);
/// Reads P5 or P6, picking the channel count from the magic number.
PlanarImage read_image(const std::filesystem::path& path);
void write_pgm16(const std::filesystem::path& path, const PlanarImage& plane);
void write_ppm16(const std::filesystem::path& path, const PlanarImage& rgb);
/// Writes .pgm for one channel and .ppm for three (YUV is written as-is).
void write_image(const std::filesystem::path& path, const PlanarImage& img);

/// Mosaic as PGM-16 plus a sidecar "<stem>.json" holding {"pattern": "..."}.
void write_mosaic(const std::filesystem::path& path, const BayerMosaic& m);
BayerMosaic read_mosaic(const std::filesystem::path& path);
std::filesystem::path mosaic_sidecar_path(const std::filesystem::path& path);

/// 8-bit PGM mask, 0 or 255.
void write_mask(const std::filesystem::path& path, const std::vector<bool>& mask, int width, int height);
std::vector<bool> read_mask(const std::filesystem::path& path, int* width = nullptr, int* height = nullptr);

} // namespace isptune

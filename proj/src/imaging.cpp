// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "isptune/imaging.hpp"

#include "isptune/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace isptune {

std::string_view to_string(ColorDomain d) {
    switch (d) {
    case ColorDomain::LinearRGB: return "LinearRGB";
    case ColorDomain::YUV: return "YUV";
    case ColorDomain::Plane: return "Plane";
    }
    return "?";
}

// =============================================================================
// PlanarImage
// =============================================================================

PlanarImage::PlanarImage(int width, int height, int channels, ColorDomain domain, double fill)
    : width_(width), height_(height), channels_(channels), domain_(domain) {
    require(width > 0 && height > 0, "image dimensions must be positive");
    require(channels == 1 || channels == 3, "image must have 1 or 3 channels");
    require(channels == 1 || domain != ColorDomain::Plane, "Plane domain requires one channel");
    require(channels == 3 || domain == ColorDomain::Plane, "RGB/YUV domain requires three channels");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

double PlanarImage::clamped(int c, int y, int x) const {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return data_[index(c, y, x)];
}

std::span<double> PlanarImage::plane(int c) {
    return std::span<double>(data_).subspan(static_cast<std::size_t>(c) * plane_size(), plane_size());
}

std::span<const double> PlanarImage::plane(int c) const {
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(c) * plane_size(), plane_size());
}

PlanarImage PlanarImage::channel(int c) const {
    require(c >= 0 && c < channels_, "channel index out of range");
    PlanarImage out(width_, height_, 1, ColorDomain::Plane);
    std::ranges::copy(plane(c), out.data_.begin());
    return out;
}

void PlanarImage::set_channel(int c, const PlanarImage& p) {
    require(c >= 0 && c < channels_, "channel index out of range");
    if (p.width_ != width_ || p.height_ != height_ || p.channels_ != 1) {
        fail(ErrorCode::ShapeMismatch, "set_channel: plane shape mismatch");
    }
    std::ranges::copy(p.data_, plane(c).begin());
}

bool PlanarImage::all_finite() const noexcept {
    return std::ranges::all_of(data_, [](double v) { return std::isfinite(v); });
}

PlanarImage transpose(const PlanarImage& img) {
    PlanarImage out(img.height(), img.width(), img.channels(), img.domain());
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) out.at(c, x, y) = img.at(c, y, x);
    return out;
}

// =============================================================================
// CFA
// =============================================================================

int cfa_channel(CfaPattern pattern, int x, int y) noexcept {
    // Site index within the 2x2 tile: 0 = (0,0), 1 = (1,0), 2 = (0,1), 3 = (1,1).
    const int site = (x & 1) + 2 * (y & 1);
    static constexpr int kTable[4][4] = {
        {0, 1, 1, 2}, // RGGB
        {2, 1, 1, 0}, // BGGR
        {1, 0, 2, 1}, // GRBG
        {1, 2, 0, 1}, // GBRG
    };
    return kTable[static_cast<int>(pattern)][site];
}

std::string_view to_string(CfaPattern p) {
    switch (p) {
    case CfaPattern::RGGB: return "RGGB";
    case CfaPattern::BGGR: return "BGGR";
    case CfaPattern::GRBG: return "GRBG";
    case CfaPattern::GBRG: return "GBRG";
    }
    return "?";
}

CfaPattern parse_cfa_pattern(std::string_view s) {
    if (s == "RGGB") return CfaPattern::RGGB;
    if (s == "BGGR") return CfaPattern::BGGR;
    if (s == "GRBG") return CfaPattern::GRBG;
    if (s == "GBRG") return CfaPattern::GBRG;
    fail(ErrorCode::InvalidArgument, "unknown CFA pattern: " + std::string(s));
}

BayerMosaic::BayerMosaic(int width, int height, CfaPattern pattern, double fill)
    : width_(width), height_(height), pattern_(pattern) {
    require(width > 0 && height > 0, "mosaic dimensions must be positive");
    require(width % 2 == 0 && height % 2 == 0, "mosaic dimensions must be even");
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

PlanarImage BayerMosaic::as_plane() const {
    PlanarImage out(width_, height_, 1, ColorDomain::Plane);
    std::ranges::copy(data_, out.data().begin());
    return out;
}

BayerMosaic BayerMosaic::from_plane(const PlanarImage& plane, CfaPattern pattern) {
    require(plane.channels() == 1, "mosaic source must be single-plane");
    BayerMosaic out(plane.width(), plane.height(), pattern);
    std::ranges::copy(plane.data(), out.data_.begin());
    return out;
}

BayerMosaic bayer_subsample(const PlanarImage& rgb, CfaPattern pattern) {
    if (rgb.domain() != ColorDomain::LinearRGB) {
        fail(ErrorCode::DomainMismatch, "bayer_subsample expects a LinearRGB image");
    }
    if (rgb.width() % 2 != 0 || rgb.height() % 2 != 0) {
        fail(ErrorCode::InvalidArgument, "bayer_subsample requires even dimensions");
    }
    BayerMosaic out(rgb.width(), rgb.height(), pattern);
    for (int y = 0; y < rgb.height(); ++y)
        for (int x = 0; x < rgb.width(); ++x) out.at(y, x) = rgb.at(cfa_channel(pattern, x, y), y, x);
    return out;
}

// =============================================================================
// Kernels
// =============================================================================

Kernel2D::Kernel2D(int size, std::vector<double> taps) : size_(size), taps_(std::move(taps)) {
    require(size >= 1 && size % 2 == 1, "kernel size must be odd and positive");
    require(taps_.size() == static_cast<std::size_t>(size) * size, "kernel taps must be size^2");
}

double Kernel2D::sum() const noexcept { return std::accumulate(taps_.begin(), taps_.end(), 0.0); }

Kernel2D Kernel2D::transposed() const {
    std::vector<double> t(taps_.size());
    for (int i = 0; i < size_; ++i)
        for (int j = 0; j < size_; ++j) t[static_cast<std::size_t>(j) * size_ + i] = taps_[static_cast<std::size_t>(i) * size_ + j];
    return Kernel2D(size_, std::move(t));
}

namespace {

std::vector<double> gaussian_taps_1d(int size, double sigma) {
    const int r = size / 2;
    std::vector<double> g(static_cast<std::size_t>(size));
    for (int i = -r; i <= r; ++i) g[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    return g;
}

} // namespace

Kernel2D gaussian_kernel(int size, double sigma) {
    require(size >= 1 && size % 2 == 1, "gaussian_kernel: size must be odd and >= 1");
    require(sigma > 0.0, "gaussian_kernel: sigma must be positive");
    const auto g = gaussian_taps_1d(size, sigma);
    std::vector<double> taps(static_cast<std::size_t>(size) * size);
    double total = 0.0;
    for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
            const double v = g[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(j)];
            taps[static_cast<std::size_t>(i) * size + j] = v;
            total += v;
        }
    for (double& t : taps) t /= total;
    return Kernel2D(size, std::move(taps));
}

Kernel2D box_kernel(int size) {
    require(size >= 1 && size % 2 == 1, "box_kernel: size must be odd and >= 1");
    const double v = 1.0 / (static_cast<double>(size) * size);
    return Kernel2D(size, std::vector<double>(static_cast<std::size_t>(size) * size, v));
}

Kernel2D identity_kernel() { return Kernel2D(1, {1.0}); }

Kernel2D scharr_horizontal() {
    return Kernel2D(3, {-3.0 / 32, 0.0, 3.0 / 32,
                        -10.0 / 32, 0.0, 10.0 / 32,
                        -3.0 / 32, 0.0, 3.0 / 32});
}

Kernel2D scharr_vertical() { return scharr_horizontal().transposed(); }

int gaussian_size_for(double sigma) { return 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1; }

PlanarImage convolve2d(const PlanarImage& img, const Kernel2D& k) {
    if (k.size() > img.width() || k.size() > img.height()) {
        fail(ErrorCode::KernelTooLarge, "kernel exceeds image");
    }
    const int r = k.radius();
    const int w = img.width();
    const int h = img.height();
    PlanarImage out(w, h, img.channels(), img.domain());
    for (int c = 0; c < img.channels(); ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int dy = -r; dy <= r; ++dy) {
                    const int yy = std::clamp(y + dy, 0, h - 1);
                    for (int dx = -r; dx <= r; ++dx) {
                        const int xx = std::clamp(x + dx, 0, w - 1);
                        acc += k.tap(dy, dx) * img.at(c, yy, xx);
                    }
                }
                out.at(c, y, x) = acc;
            }
        }
    }
    return out;
}

PlanarImage gaussian_blur(const PlanarImage& img, int size, double sigma) {
    require(size >= 1 && size % 2 == 1, "gaussian_blur: size must be odd and >= 1");
    require(sigma > 0.0, "gaussian_blur: sigma must be positive");
    if (size > img.width() || size > img.height()) {
        fail(ErrorCode::KernelTooLarge, "kernel exceeds image");
    }
    auto g = gaussian_taps_1d(size, sigma);
    const double total = std::accumulate(g.begin(), g.end(), 0.0);
    for (double& t : g) t /= total;
    const int r = size / 2;
    const int w = img.width();
    const int h = img.height();
    PlanarImage tmp(w, h, img.channels(), img.domain());
    PlanarImage out(w, h, img.channels(), img.domain());
    for (int c = 0; c < img.channels(); ++c) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int d = -r; d <= r; ++d) acc += g[static_cast<std::size_t>(d + r)] * img.at(c, y, std::clamp(x + d, 0, w - 1));
                tmp.at(c, y, x) = acc;
            }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int d = -r; d <= r; ++d) acc += g[static_cast<std::size_t>(d + r)] * tmp.at(c, std::clamp(y + d, 0, h - 1), x);
                out.at(c, y, x) = acc;
            }
    }
    return out;
}

Gradients scharr_gradients(const PlanarImage& plane) {
    require(plane.channels() == 1, "scharr_gradients expects a single-channel image");
    return {convolve2d(plane, scharr_horizontal()), convolve2d(plane, scharr_vertical())};
}

// =============================================================================
// Color conversion
// =============================================================================

namespace {
constexpr double kR = 0.299;
constexpr double kG = 0.587;
constexpr double kB = 0.114;
constexpr double kU = 0.564;
constexpr double kV = 0.713;
} // namespace

PlanarImage rgb_to_yuv(const PlanarImage& rgb) {
    if (rgb.domain() != ColorDomain::LinearRGB) {
        fail(ErrorCode::DomainMismatch, "rgb_to_yuv expects a LinearRGB image");
    }
    PlanarImage out(rgb.width(), rgb.height(), 3, ColorDomain::YUV);
    const auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
    auto y = out.plane(0), u = out.plane(1), v = out.plane(2);
    for (std::size_t i = 0; i < rgb.plane_size(); ++i) {
        const double yy = kR * r[i] + kG * g[i] + kB * b[i];
        y[i] = yy;
        u[i] = kU * (b[i] - yy);
        v[i] = kV * (r[i] - yy);
    }
    return out;
}

PlanarImage yuv_to_rgb(const PlanarImage& yuv) {
    if (yuv.domain() != ColorDomain::YUV) {
        fail(ErrorCode::DomainMismatch, "yuv_to_rgb expects a YUV image");
    }
    PlanarImage out(yuv.width(), yuv.height(), 3, ColorDomain::LinearRGB);
    const auto y = yuv.plane(0), u = yuv.plane(1), v = yuv.plane(2);
    auto r = out.plane(0), g = out.plane(1), b = out.plane(2);
    for (std::size_t i = 0; i < yuv.plane_size(); ++i) {
        const double rr = y[i] + v[i] / kV;
        const double bb = y[i] + u[i] / kU;
        r[i] = rr;
        b[i] = bb;
        g[i] = (y[i] - kR * rr - kB * bb) / kG;
    }
    return out;
}

PlanarImage luma(const PlanarImage& img) {
    switch (img.domain()) {
    case ColorDomain::Plane: return img;
    case ColorDomain::YUV: return img.channel(0);
    case ColorDomain::LinearRGB: return rgb_to_yuv(img).channel(0);
    }
    return img;
}

} // namespace isptune

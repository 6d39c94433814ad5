// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "isptune/refgen.hpp"

#include "isptune/error.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>

namespace isptune {

// =============================================================================
// Bursts
// =============================================================================

void Burst::validate() const {
    require(!frames.empty(), "burst is empty");
    for (const auto& f : frames) {
        if (!f.same_geometry(frames.front())) {
            fail(ErrorCode::ShapeMismatch, "burst frames differ in geometry or CFA pattern");
        }
    }
}

BayerMosaic temporal_fusion(const Burst& burst) {
    burst.validate();
    const auto& first = burst.frames.front();
    BayerMosaic out(first.width(), first.height(), first.pattern());
    auto acc = out.data();
    for (const auto& f : burst.frames) {
        const auto src = f.data();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
    }
    const double n = static_cast<double>(burst.size());
    for (double& v : acc) v /= n;
    return out;
}

BayerMosaic blend_references(const BayerMosaic& a, const BayerMosaic& b, double w) {
    require(w >= 0.0 && w <= 1.0, "blend weight must lie in [0,1]");
    if (!a.same_geometry(b)) {
        fail(ErrorCode::ShapeMismatch, "blend_references: geometry mismatch");
    }
    BayerMosaic out = a;
    const auto bd = b.data();
    auto od = out.data();
    for (std::size_t i = 0; i < od.size(); ++i) od[i] = w * od[i] + (1.0 - w) * bd[i];
    return out;
}

// =============================================================================
// Simulation and calibration
// =============================================================================

Burst simulate_capture(const PlanarImage& clean_rgb, const NoiseModel& nm, CfaPattern pattern, int n_frames,
                       std::uint64_t seed) {
    require(n_frames >= 1, "simulate_capture needs at least one frame");
    const BayerMosaic clean = bayer_subsample(clean_rgb, pattern);
    std::vector<double> sigma(clean.size());
    std::ranges::transform(clean.data(), sigma.begin(), [&](double v) { return nm.sigma(v); });

    Burst burst;
    burst.frames.reserve(static_cast<std::size_t>(n_frames));
    for (int k = 0; k < n_frames; ++k) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(k), 0x5eedu};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, 1.0);
        BayerMosaic frame = clean;
        auto d = frame.data();
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double z = normal(rng);
            if (sigma[i] > 0.0) {
                d[i] = std::clamp(d[i] + sigma[i] * z, 0.0, 1.0);
            }
        }
        burst.frames.push_back(std::move(frame));
    }
    return burst;
}

namespace {

double norm_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double norm_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double sigma_from_clipped_variance(double level, double measured) {
    if (measured <= 0.0) return 0.0;
    // clipped_variance is increasing in sigma and saturates; bracket then bisect.
    double lo = 0.0;
    double hi = std::sqrt(measured);
    for (int i = 0; i < 60 && clipped_variance(level, hi) < measured; ++i) hi *= 2.0;
    if (clipped_variance(level, hi) < measured) return hi;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (clipped_variance(level, mid) < measured) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-15 * hi) break;
    }
    return 0.5 * (lo + hi);
}

void warn(std::vector<std::string>* sink, const std::string& msg) {
    if (sink) {
        sink->push_back(msg);
    } else {
        std::clog << "warning: " << msg << "\n";
    }
}

} // namespace

double clipped_variance(double level, double sigma) {
    if (sigma <= 0.0) return 0.0;
    const double a = (0.0 - level) / sigma;
    const double b = (1.0 - level) / sigma;
    const double pa = norm_cdf(a);
    const double pb = norm_cdf(b);
    const double inside = (pb - pa) + a * norm_pdf(a) - b * norm_pdf(b);
    return level * level * pa + (1.0 - level) * (1.0 - level) * (1.0 - pb) + sigma * sigma * inside;
}

NoiseModel calibrate_noise_model(std::span<const FlatCapture> flats, std::vector<std::string>* warnings) {
    std::vector<double> levels;
    std::vector<double> variances;
    for (const auto& f : flats) {
        f.burst.validate();
        require(f.level >= 0.0 && f.level <= 1.0, "flat level must lie in [0,1]");
        double sum_sq = 0.0;
        std::size_t count = 0;
        for (const auto& frame : f.burst.frames)
            for (double v : frame.data()) {
                sum_sq += (v - f.level) * (v - f.level);
                ++count;
            }
        const double sigma = sigma_from_clipped_variance(f.level, sum_sq / static_cast<double>(count));
        levels.push_back(f.level);
        variances.push_back(sigma * sigma);
    }
    std::vector<double> distinct = levels;
    std::ranges::sort(distinct);
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2) {
        fail(ErrorCode::InvalidArgument, "calibrate_noise_model needs flats at two or more distinct levels");
    }
    if (std::ranges::all_of(variances, [](double v) { return v == 0.0; })) {
        return NoiseModel{0.0, 0.0, 1.0};
    }

    const double floor = 1e-12;
    std::vector<double> weight(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double v = std::max(variances[i], floor);
        weight[i] = 1.0 / (v * v);
    }
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        sw += weight[i];
        sx += weight[i] * levels[i];
        sy += weight[i] * variances[i];
        sxx += weight[i] * levels[i] * levels[i];
        sxy += weight[i] * levels[i] * variances[i];
    }
    const double det = sw * sxx - sx * sx;
    double a = (sw * sxy - sx * sy) / det;
    double b = (sxx * sy - sx * sxy) / det;

    if (a < 0.0) {
        warn(warnings, "fitted shot-noise slope " + std::to_string(a) + " < 0, clamped to 0");
        a = 0.0;
        b = sy / sw;
    }
    if (b < 0.0) {
        warn(warnings, "fitted read-noise floor " + std::to_string(b) + " < 0, clamped to 0");
        b = 0.0;
        a = std::max(sxy / sxx, 0.0);
    }
    return NoiseModel{a, b, 1.0};
}

// =============================================================================
// Sharpening reference
// =============================================================================

Kernel2D detail_kernel_h() { return Kernel2D(3, {0.0, -1.0, 0.0, 0.0, 2.0, 0.0, 0.0, -1.0, 0.0}); }

Kernel2D detail_kernel_v() { return detail_kernel_h().transposed(); }

std::vector<bool> gradient_flat_mask(const PlanarImage& plane, double percentile) {
    require(plane.channels() == 1, "gradient_flat_mask expects a single-channel image");
    require(percentile > 0.0 && percentile < 1.0, "flat percentile must lie in (0,1)");
    const Gradients g = scharr_gradients(plane);
    std::vector<double> mag(plane.size());
    for (std::size_t i = 0; i < mag.size(); ++i)
        mag[i] = std::hypot(g.horizontal.data()[i], g.vertical.data()[i]);
    std::vector<double> sorted = mag;
    const auto k = static_cast<std::size_t>(std::floor(percentile * static_cast<double>(sorted.size() - 1)));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    const double threshold = sorted[k];
    std::vector<bool> mask(mag.size());
    for (std::size_t i = 0; i < mag.size(); ++i) mask[i] = mag[i] <= threshold;
    return mask;
}

SharpenRefTerms sharpening_reference_terms(const PlanarImage& fused_y, const SharpenRefConfig& cfg,
                                           const std::vector<bool>& flat_mask) {
    require(fused_y.channels() == 1, "sharpening reference expects a single-channel luma image");
    require(cfg.alpha >= 0.0, "sharpening alpha must be non-negative");
    require(cfg.sigma_ndir > 0.0 && cfg.sigma_usm > 0.0, "sharpening sigmas must be positive");
    if (flat_mask.size() != fused_y.size()) {
        fail(ErrorCode::ShapeMismatch, "flat mask size does not match the image");
    }
    if (std::ranges::none_of(flat_mask, [](bool b) { return b; })) {
        fail(ErrorCode::InvalidArgument, "flat mask is empty");
    }

    SharpenRefTerms t;
    const Gradients g = scharr_gradients(fused_y);
    t.grad_h = g.horizontal;
    t.grad_v = g.vertical;
    const PlanarImage dh = convolve2d(fused_y, detail_kernel_h());
    const PlanarImage dv = convolve2d(fused_y, detail_kernel_v());
    const PlanarImage low = convolve2d(fused_y, gaussian_kernel(cfg.usm_size, cfg.sigma_usm));

    const int w = fused_y.width();
    const int h = fused_y.height();
    t.w = PlanarImage(w, h, 1, ColorDomain::Plane);
    t.detail_dir = PlanarImage(w, h, 1, ColorDomain::Plane);
    t.detail_ndir = PlanarImage(w, h, 1, ColorDomain::Plane);
    t.w_ndir = PlanarImage(w, h, 1, ColorDomain::Plane);
    PlanarImage abs_ndir(w, h, 1, ColorDomain::Plane);

    const double inv_ndir2 = 1.0 / (cfg.sigma_ndir * cfg.sigma_ndir);
    for (std::size_t i = 0; i < fused_y.size(); ++i) {
        const double gh = std::abs(t.grad_h.data()[i]);
        const double gv = std::abs(t.grad_v.data()[i]);
        const double wi = (gh < 1e-12 && gv < 1e-12) ? 0.5 : gh / (gh + gv);
        t.w.data()[i] = wi;
        t.detail_dir.data()[i] = wi * dh.data()[i] + (1.0 - wi) * dv.data()[i];
        const double nd = fused_y.data()[i] - low.data()[i];
        t.detail_ndir.data()[i] = nd;
        abs_ndir.data()[i] = std::abs(nd);
        const double m = std::min(gh, gv);
        t.w_ndir.data()[i] = std::exp(-m * m * inv_ndir2);
    }

    t.energy = convolve2d(abs_ndir, box_kernel(cfg.box_size));

    double sum = 0.0, sum_sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < flat_mask.size(); ++i) {
        if (!flat_mask[i]) continue;
        const double e = t.energy.data()[i];
        sum += e;
        sum_sq += e * e;
        ++n;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(sum_sq / static_cast<double>(n) - mean * mean, 0.0);
    t.sigma_alpha = std::max(mean + std::sqrt(var), 1e-6);

    const double inv_sa2 = 1.0 / (t.sigma_alpha * t.sigma_alpha);
    t.alpha_ndir = PlanarImage(w, h, 1, ColorDomain::Plane);
    t.added = PlanarImage(w, h, 1, ColorDomain::Plane);
    for (std::size_t i = 0; i < fused_y.size(); ++i) {
        const double an = 1.0 - std::exp(-t.energy.data()[i] * inv_sa2);
        t.alpha_ndir.data()[i] = an;
        const double wn = t.w_ndir.data()[i];
        t.added.data()[i] = an * (wn * t.detail_ndir.data()[i] + (1.0 - wn) * t.detail_dir.data()[i]);
    }
    return t;
}

PlanarImage sharpening_reference(const PlanarImage& fused_y, const SharpenRefConfig& cfg,
                                 const std::vector<bool>& flat_mask) {
    const SharpenRefTerms t = sharpening_reference_terms(fused_y, cfg, flat_mask);
    PlanarImage out = fused_y;
    if (cfg.alpha == 0.0) {
        return out;
    }
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += cfg.alpha * t.added.data()[i];
    return out;
}

} // namespace isptune

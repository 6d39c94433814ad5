// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "isptune/isp.hpp"

#include "isptune/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace isptune {

namespace {

const std::vector<ParamSpec>& specs_for(BlockId b) {
    static const std::vector<ParamSpec> kBayerNR = {
        ParamSpec::make("sigma_s", 0.5, 3.0),
        ParamSpec::make("k_r", 0.0, 8.0),
        ParamSpec::make("radius", 1.0, 3.0, true),
        ParamSpec::make("beta", 0.0, 1.0),
    };
    static const std::vector<ParamSpec> kDemosaic = {
        ParamSpec::make("t_g", 0.0, 0.5),
        ParamSpec::make("fc_radius", 0.0, 2.0, true),
        ParamSpec::make("fc_strength", 0.0, 1.0),
        ParamSpec::make("zipper", 0.0, 1.0),
    };
    static const std::vector<ParamSpec> kYuvNR = {
        ParamSpec::make("sigma_y", 0.0, 0.2),
        ParamSpec::make("sigma_c", 0.0, 0.3),
        ParamSpec::make("sigma_s", 0.5, 4.0),
        ParamSpec::make("beta", 0.0, 1.0),
    };
    static const std::vector<ParamSpec> kSharpen = {
        ParamSpec::make("sigma_u", 0.5, 3.0),
        ParamSpec::make("coring", 0.0, 0.05),
        ParamSpec::make("gain", 0.0, 4.0),
        ParamSpec::make("overshoot", 0.0, 0.5),
    };
    switch (b) {
    case BlockId::BayerNR: return kBayerNR;
    case BlockId::Demosaic: return kDemosaic;
    case BlockId::YuvNR: return kYuvNR;
    case BlockId::Sharpen: return kSharpen;
    }
    return kBayerNR;
}

void expect_block(const BlockParams& p, BlockId b) {
    if (p.block() != b) {
        fail(ErrorCode::InvalidArgument,
             std::string(to_string(b)) + " called with " + std::string(to_string(p.block())) + " parameters");
    }
}

constexpr double kTinySigma = 1e-12;

// Reflect-101 index; for even n it preserves parity, so CFA phase survives the border.
int mirror(int i, int n) noexcept {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
    }
    return i;
}

std::vector<double> spatial_weights(int radius, double sigma) {
    const int size = 2 * radius + 1;
    std::vector<double> w(static_cast<std::size_t>(size) * size);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            w[static_cast<std::size_t>(dy + radius) * size + (dx + radius)] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
    return w;
}

} // namespace

std::string_view to_string(BlockId b) {
    switch (b) {
    case BlockId::BayerNR: return "BayerNR";
    case BlockId::Demosaic: return "Demosaic";
    case BlockId::YuvNR: return "YuvNR";
    case BlockId::Sharpen: return "Sharpen";
    }
    return "?";
}

BlockId parse_block_id(std::string_view s) {
    for (BlockId b : kPipelineOrder)
        if (to_string(b) == s) return b;
    fail(ErrorCode::InvalidArgument, "unknown block: " + std::string(s));
}

std::span<const ParamSpec> block_param_specs(BlockId block) { return specs_for(block); }

// =============================================================================
// BlockParams / PipelineTuning
// =============================================================================

BlockParams::BlockParams(BlockId block, std::vector<double> values) : block_(block), values_(std::move(values)) {
    const auto specs = block_param_specs(block);
    require(values_.size() == specs.size(), std::string(to_string(block)) + ": expected " +
                                                std::to_string(specs.size()) + " parameters");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (!(values_[i] >= specs[i].physical_min && values_[i] <= specs[i].physical_max)) {
            fail(ErrorCode::InvalidArgument, std::string(to_string(block)) + "." + specs[i].name + " = " +
                                                 std::to_string(values_[i]) + " outside its physical range");
        }
    }
}

double BlockParams::get(std::string_view name) const {
    const auto specs = block_param_specs(block_);
    for (std::size_t i = 0; i < specs.size(); ++i)
        if (specs[i].name == name) return values_[i];
    fail(ErrorCode::InvalidArgument, std::string(to_string(block_)) + " has no parameter " + std::string(name));
}

void BlockParams::set(std::string_view name, double value) {
    const auto specs = block_param_specs(block_);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].name == name) {
            require(value >= specs[i].physical_min && value <= specs[i].physical_max,
                    std::string(name) + " outside its physical range");
            values_[i] = value;
            return;
        }
    }
    fail(ErrorCode::InvalidArgument, std::string(to_string(block_)) + " has no parameter " + std::string(name));
}

BlockParams BlockParams::mid_range(BlockId block) {
    std::vector<double> v;
    for (const auto& s : block_param_specs(block)) v.push_back(0.5 * (s.physical_min + s.physical_max));
    return BlockParams(block, std::move(v));
}

BlockParams BlockParams::passthrough(BlockId block) {
    BlockParams p = mid_range(block);
    switch (block) {
    case BlockId::BayerNR: p.set("beta", 0.0); break;
    case BlockId::Demosaic:
        p.set("fc_radius", 0.0);
        p.set("fc_strength", 0.0);
        p.set("zipper", 0.0);
        break;
    case BlockId::YuvNR: p.set("beta", 0.0); break;
    case BlockId::Sharpen: p.set("gain", 0.0); break;
    }
    return p;
}

const BlockParams& PipelineTuning::at(BlockId b) const {
    const auto& slot = slots_[block_index(b)];
    if (!slot) {
        fail(ErrorCode::MissingUpstream, "no tuning for block " + std::string(to_string(b)));
    }
    return *slot;
}

void PipelineTuning::set(BlockParams p) {
    const int i = block_index(p.block());
    slots_[i] = std::move(p);
}

bool PipelineTuning::complete() const noexcept {
    return std::ranges::all_of(slots_, [](const auto& s) { return s.has_value(); });
}

PipelineTuning PipelineTuning::passthrough() {
    PipelineTuning t;
    for (BlockId b : kPipelineOrder) t.set(BlockParams::passthrough(b));
    return t;
}

PipelineTuning PipelineTuning::mid_range() {
    PipelineTuning t;
    for (BlockId b : kPipelineOrder) t.set(BlockParams::mid_range(b));
    return t;
}

// =============================================================================
// Bayer NR
// =============================================================================

BayerMosaic bayer_nr(const BayerMosaic& m, const BlockParams& p, const NoiseModel& nm) {
    expect_block(p, BlockId::BayerNR);
    const double sigma_s = p.get("sigma_s");
    const double k_r = p.get("k_r");
    const int radius = static_cast<int>(std::lround(p.get("radius")));
    const double beta = p.get("beta");

    BayerMosaic out = m;
    if (beta == 0.0 || k_r == 0.0) {
        return out;
    }

    // Each CFA phase is filtered as its own half-resolution plane.
    const int pw = m.width() / 2;
    const int ph = m.height() / 2;
    const int size = 2 * radius + 1;
    const auto ws = spatial_weights(radius, sigma_s);
    std::vector<double> sub(static_cast<std::size_t>(pw) * ph);

    for (int oy = 0; oy < 2; ++oy) {
        for (int ox = 0; ox < 2; ++ox) {
            for (int y = 0; y < ph; ++y)
                for (int x = 0; x < pw; ++x) sub[static_cast<std::size_t>(y) * pw + x] = m.at(2 * y + oy, 2 * x + ox);

            for (int y = 0; y < ph; ++y) {
                for (int x = 0; x < pw; ++x) {
                    const double centre = sub[static_cast<std::size_t>(y) * pw + x];
                    const double sigma_r = k_r * nm.sigma(centre);
                    if (sigma_r < kTinySigma) {
                        continue;
                    }
                    const double inv = -1.0 / (2.0 * sigma_r * sigma_r);
                    double num = 0.0;
                    double den = 0.0;
                    for (int dy = -radius; dy <= radius; ++dy) {
                        const int yy = std::clamp(y + dy, 0, ph - 1);
                        const double* row = &sub[static_cast<std::size_t>(yy) * pw];
                        const double* wrow = &ws[static_cast<std::size_t>(dy + radius) * size + radius];
                        for (int dx = -radius; dx <= radius; ++dx) {
                            const double v = row[std::clamp(x + dx, 0, pw - 1)];
                            const double d = v - centre;
                            const double w = wrow[dx] * std::exp(d * d * inv);
                            num += w * v;
                            den += w;
                        }
                    }
                    out.at(2 * y + oy, 2 * x + ox) = (1.0 - beta) * centre + beta * (num / den);
                }
            }
        }
    }
    return out;
}

// =============================================================================
// Demosaic
// =============================================================================

namespace {

PlanarImage interpolate_green(const BayerMosaic& m, double threshold) {
    const int w = m.width();
    const int h = m.height();
    PlanarImage g(w, h, 1, ColorDomain::Plane);
    auto at = [&](int y, int x) { return m.at(mirror(y, h), mirror(x, w)); };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double c = m.at(y, x);
            if (m.channel_at(x, y) == 1) {
                g.at(0, y, x) = c;
                continue;
            }
            const double gl = at(y, x - 1), gr = at(y, x + 1);
            const double gu = at(y - 1, x), gd = at(y + 1, x);
            const double lap_h = 2.0 * c - at(y, x - 2) - at(y, x + 2);
            const double lap_v = 2.0 * c - at(y - 2, x) - at(y + 2, x);
            const double est_h = 0.5 * (gl + gr) + 0.25 * lap_h;
            const double est_v = 0.5 * (gu + gd) + 0.25 * lap_v;
            const double grad_h = std::abs(gl - gr) + std::abs(lap_h);
            const double grad_v = std::abs(gu - gd) + std::abs(lap_v);
            double est;
            if (grad_h + threshold < grad_v) {
                est = est_h;
            } else if (grad_v + threshold < grad_h) {
                est = est_v;
            } else {
                est = 0.5 * (est_h + est_v);
            }
            g.at(0, y, x) = est;
        }
    }
    return g;
}

PlanarImage binomial3(const PlanarImage& img) {
    static const Kernel2D k(3, {1.0 / 16, 2.0 / 16, 1.0 / 16, 2.0 / 16, 4.0 / 16, 2.0 / 16, 1.0 / 16, 2.0 / 16, 1.0 / 16});
    return convolve2d(img, k);
}

// Bilinear fill of a colour difference sampled only at one CFA channel's sites.
PlanarImage fill_difference(const BayerMosaic& m, const PlanarImage& green, int channel) {
    const int w = m.width();
    const int h = m.height();
    PlanarImage sparse(w, h, 1, ColorDomain::Plane);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (m.channel_at(x, y) == channel) sparse.at(0, y, x) = m.at(y, x) - green.at(0, y, x);

    static constexpr double kTaps[3][3] = {{0.25, 0.5, 0.25}, {0.5, 1.0, 0.5}, {0.25, 0.5, 0.25}};
    PlanarImage out(w, h, 1, ColorDomain::Plane);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) acc += kTaps[dy + 1][dx + 1] * sparse.at(0, mirror(y + dy, h), mirror(x + dx, w));
            out.at(0, y, x) = acc;
        }
    return out;
}

PlanarImage median_filter(const PlanarImage& plane, int radius) {
    if (radius == 0) return plane;
    const int w = plane.width();
    const int h = plane.height();
    PlanarImage out(w, h, 1, ColorDomain::Plane);
    std::vector<double> window;
    window.reserve(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            window.clear();
            for (int dy = -radius; dy <= radius; ++dy)
                for (int dx = -radius; dx <= radius; ++dx) window.push_back(plane.clamped(0, y + dy, x + dx));
            auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
            std::nth_element(window.begin(), mid, window.end());
            out.at(0, y, x) = *mid;
        }
    return out;
}

} // namespace

PlanarImage demosaic(const BayerMosaic& m, const BlockParams& p) {
    expect_block(p, BlockId::Demosaic);
    const double t_g = p.get("t_g");
    const int fc_radius = static_cast<int>(std::lround(p.get("fc_radius")));
    const double fc_strength = p.get("fc_strength");
    const double zipper = p.get("zipper");

    PlanarImage green = interpolate_green(m, t_g);
    if (zipper > 0.0) {
        const PlanarImage smooth = binomial3(green);
        for (std::size_t i = 0; i < green.size(); ++i)
            green.data()[i] = (1.0 - zipper) * green.data()[i] + zipper * smooth.data()[i];
    }

    PlanarImage diff_r = fill_difference(m, green, 0);
    PlanarImage diff_b = fill_difference(m, green, 2);

    if (fc_radius > 0 && fc_strength > 0.0) {
        const PlanarImage med_r = median_filter(diff_r, fc_radius);
        const PlanarImage med_b = median_filter(diff_b, fc_radius);
        for (std::size_t i = 0; i < diff_r.size(); ++i) {
            diff_r.data()[i] = (1.0 - fc_strength) * diff_r.data()[i] + fc_strength * med_r.data()[i];
            diff_b.data()[i] = (1.0 - fc_strength) * diff_b.data()[i] + fc_strength * med_b.data()[i];
        }
    }

    PlanarImage rgb(m.width(), m.height(), 3, ColorDomain::LinearRGB);
    auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
    for (std::size_t i = 0; i < green.size(); ++i) {
        g[i] = green.data()[i];
        r[i] = green.data()[i] + diff_r.data()[i];
        b[i] = green.data()[i] + diff_b.data()[i];
    }
    return rgb;
}

// =============================================================================
// YUV NR
// =============================================================================

PlanarImage yuv_nr(const PlanarImage& yuv, const BlockParams& p) {
    expect_block(p, BlockId::YuvNR);
    if (yuv.domain() != ColorDomain::YUV) {
        fail(ErrorCode::DomainMismatch, "yuv_nr expects a YUV image");
    }
    const double sigma_y = p.get("sigma_y");
    const double sigma_c = p.get("sigma_c");
    const double sigma_s = p.get("sigma_s");
    const double beta = p.get("beta");

    PlanarImage out = yuv;
    const bool luma_on = sigma_y > kTinySigma;
    const bool chroma_on = sigma_c > kTinySigma;
    if (beta == 0.0 || (!luma_on && !chroma_on)) {
        return out;
    }

    const int w = yuv.width();
    const int h = yuv.height();
    const int radius = std::min(static_cast<int>(std::ceil(2.0 * sigma_s)), 6);
    const int size = 2 * radius + 1;
    const auto ws = spatial_weights(radius, sigma_s);
    const auto y_in = yuv.plane(0);
    const auto u_in = yuv.plane(1);
    const auto v_in = yuv.plane(2);
    auto y_out = out.plane(0);
    auto u_out = out.plane(1);
    auto v_out = out.plane(2);
    const double inv_y = luma_on ? -1.0 / (2.0 * sigma_y * sigma_y) : 0.0;
    const double inv_c = chroma_on ? -1.0 / (2.0 * sigma_c * sigma_c) : 0.0;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t ci = static_cast<std::size_t>(y) * w + x;
            const double centre = y_in[ci];
            double ny = 0.0, dy_sum = 0.0, nu = 0.0, nv = 0.0, dc_sum = 0.0;
            for (int dy = -radius; dy <= radius; ++dy) {
                const int yy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -radius; dx <= radius; ++dx) {
                    const int xx = std::clamp(x + dx, 0, w - 1);
                    const std::size_t qi = static_cast<std::size_t>(yy) * w + xx;
                    const double ws_q = ws[static_cast<std::size_t>(dy + radius) * size + (dx + radius)];
                    const double d = y_in[qi] - centre;
                    const double d2 = d * d;
                    if (luma_on) {
                        const double wq = ws_q * std::exp(d2 * inv_y);
                        ny += wq * y_in[qi];
                        dy_sum += wq;
                    }
                    if (chroma_on) {
                        const double wq = ws_q * std::exp(d2 * inv_c);
                        nu += wq * u_in[qi];
                        nv += wq * v_in[qi];
                        dc_sum += wq;
                    }
                }
            }
            if (luma_on) y_out[ci] = (1.0 - beta) * centre + beta * (ny / dy_sum);
            if (chroma_on) {
                u_out[ci] = (1.0 - beta) * u_in[ci] + beta * (nu / dc_sum);
                v_out[ci] = (1.0 - beta) * v_in[ci] + beta * (nv / dc_sum);
            }
        }
    }
    return out;
}

// =============================================================================
// Sharpen
// =============================================================================

PlanarImage sharpen(const PlanarImage& yuv, const BlockParams& p) {
    expect_block(p, BlockId::Sharpen);
    if (yuv.domain() != ColorDomain::YUV) {
        fail(ErrorCode::DomainMismatch, "sharpen expects a YUV image");
    }
    const double sigma_u = p.get("sigma_u");
    const double coring = p.get("coring");
    const double gain = p.get("gain");
    const double overshoot = p.get("overshoot");

    PlanarImage out = yuv;
    if (gain == 0.0) {
        return out;
    }
    const int w = yuv.width();
    const int h = yuv.height();
    const PlanarImage y_in = yuv.channel(0);
    int size = gaussian_size_for(sigma_u);
    const int max_size = std::min(w, h) % 2 == 1 ? std::min(w, h) : std::min(w, h) - 1;
    size = std::min(size, max_size);
    const PlanarImage blurred = gaussian_blur(y_in, size, sigma_u);

    auto y_out = out.plane(0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = y_in.at(0, y, x);
            const double d = v - blurred.at(0, y, x);
            const double cored = std::copysign(std::max(std::abs(d) - coring, 0.0), d);
            double lo = v, hi = v;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const double q = y_in.clamped(0, y + dy, x + dx);
                    lo = std::min(lo, q);
                    hi = std::max(hi, q);
                }
            y_out[static_cast<std::size_t>(y) * w + x] = std::clamp(v + gain * cored, lo - overshoot, hi + overshoot);
        }
    }
    return out;
}

// =============================================================================
// Pipeline
// =============================================================================

PlanarImage PipelineTaps::block_output(BlockId block) const {
    auto missing = [&]() -> PlanarImage {
        fail(ErrorCode::MissingTap, "pipeline tap for " + std::string(to_string(block)) + " not available");
    };
    switch (block) {
    case BlockId::BayerNR: return bayer_nr ? bayer_nr->as_plane() : missing();
    case BlockId::Demosaic: return demosaic ? *demosaic : missing();
    case BlockId::YuvNR: return yuv_nr ? *yuv_nr : missing();
    case BlockId::Sharpen: return sharpen ? sharpen->channel(0) : missing();
    }
    return missing();
}

PipelineTaps run_pipeline_until(const BayerMosaic& m, const PipelineTuning& t, const NoiseModel& nm, BlockId last) {
    PipelineTaps taps;
    taps.bayer_nr = bayer_nr(m, t.at(BlockId::BayerNR), nm);
    if (last == BlockId::BayerNR) return taps;
    taps.demosaic = demosaic(*taps.bayer_nr, t.at(BlockId::Demosaic));
    if (last == BlockId::Demosaic) return taps;
    taps.yuv_nr = yuv_nr(rgb_to_yuv(*taps.demosaic), t.at(BlockId::YuvNR));
    if (last == BlockId::YuvNR) return taps;
    taps.sharpen = sharpen(*taps.yuv_nr, t.at(BlockId::Sharpen));

    PlanarImage rgb = yuv_to_rgb(*taps.sharpen);
    for (double& v : rgb.data()) v = std::clamp(v, 0.0, 1.0);
    taps.output = std::move(rgb);
    return taps;
}

PipelineTaps run_pipeline(const BayerMosaic& m, const PipelineTuning& t, const NoiseModel& nm) {
    if (!t.complete()) {
        fail(ErrorCode::MissingUpstream, "run_pipeline requires a tuning for all four blocks");
    }
    return run_pipeline_until(m, t, nm, BlockId::Sharpen);
}

} // namespace isptune

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "isptune/error.hpp"
#include "isptune/refgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace isptune {

namespace {

constexpr int kSupersample = 4;

struct Painter {
    PlanarImage& img;
    std::vector<int>& owner;
    int index;

    void put(int x, int y, const Rgb& c) {
        if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return;
        for (int ch = 0; ch < 3; ++ch) img.at(ch, y, x) = c[static_cast<std::size_t>(ch)];
        owner[static_cast<std::size_t>(y) * img.width() + x] = index;
    }
};

void paint(Painter& p, const FlatElement& e, std::uint64_t) {
    for (int y = e.rect.y; y < e.rect.y + e.rect.height; ++y)
        for (int x = e.rect.x; x < e.rect.x + e.rect.width; ++x) p.put(x, y, e.color);
}

void paint(Painter& p, const EdgeElement& e, std::uint64_t) {
    const double theta = e.angle_deg * std::numbers::pi / 180.0;
    const double nx = std::cos(theta);
    const double ny = std::sin(theta);
    const double cx = e.rect.x + 0.5 * e.rect.width;
    const double cy = e.rect.y + 0.5 * e.rect.height;
    for (int y = e.rect.y; y < e.rect.y + e.rect.height; ++y)
        for (int x = e.rect.x; x < e.rect.x + e.rect.width; ++x) {
            int on_b = 0;
            for (int sy = 0; sy < kSupersample; ++sy)
                for (int sx = 0; sx < kSupersample; ++sx) {
                    const double px = x + (sx + 0.5) / kSupersample - cx;
                    const double py = y + (sy + 0.5) / kSupersample - cy;
                    if (px * nx + py * ny >= 0.0) ++on_b;
                }
            const double f = static_cast<double>(on_b) / (kSupersample * kSupersample);
            Rgb c;
            for (std::size_t ch = 0; ch < 3; ++ch) c[ch] = (1.0 - f) * e.color_a[ch] + f * e.color_b[ch];
            p.put(x, y, c);
        }
}

void paint(Painter& p, const ZonePlateElement& e, std::uint64_t) {
    for (int y = e.rect.y; y < e.rect.y + e.rect.height; ++y)
        for (int x = e.rect.x; x < e.rect.x + e.rect.width; ++x) {
            const double v = zone_plate_value(e, x + 0.5, y + 0.5);
            p.put(x, y, {v, v, v});
        }
}

void paint(Painter& p, const PatchGridElement& e, std::uint64_t) {
    require(e.rows > 0 && e.cols > 0 && !e.colors.empty(), "patch grid needs rows, cols and colours");
    for (int y = e.rect.y; y < e.rect.y + e.rect.height; ++y)
        for (int x = e.rect.x; x < e.rect.x + e.rect.width; ++x) {
            const int r = std::min((y - e.rect.y) * e.rows / e.rect.height, e.rows - 1);
            const int c = std::min((x - e.rect.x) * e.cols / e.rect.width, e.cols - 1);
            p.put(x, y, e.colors[static_cast<std::size_t>(r * e.cols + c) % e.colors.size()]);
        }
}

void paint(Painter& p, const TextureElement& e, std::uint64_t seed) {
    require(e.cell >= 1, "texture cell must be >= 1");
    const int gw = e.rect.width / e.cell + 2;
    const int gh = e.rect.height / e.cell + 2;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(p.index), 0x7e47u};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
    for (double& g : grid) g = uni(rng);
    for (int y = 0; y < e.rect.height; ++y)
        for (int x = 0; x < e.rect.width; ++x) {
            const double gx = static_cast<double>(x) / e.cell;
            const double gy = static_cast<double>(y) / e.cell;
            const int ix = static_cast<int>(gx);
            const int iy = static_cast<int>(gy);
            const double fx = gx - ix;
            const double fy = gy - iy;
            auto at = [&](int i, int j) { return grid[static_cast<std::size_t>(j) * gw + i]; };
            const double n = (1 - fx) * (1 - fy) * at(ix, iy) + fx * (1 - fy) * at(ix + 1, iy) +
                             (1 - fx) * fy * at(ix, iy + 1) + fx * fy * at(ix + 1, iy + 1);
            const double v = std::clamp(e.mean + e.amplitude * n, 0.0, 1.0);
            p.put(e.rect.x + x, e.rect.y + y, {v, v, v});
        }
}

} // namespace

double zone_plate_value(const ZonePlateElement& z, double px, double py) {
    const double cx = z.rect.x + 0.5 * z.rect.width;
    const double cy = z.rect.y + 0.5 * z.rect.height;
    const double radius = 0.5 * std::min(z.rect.width, z.rect.height);
    const double k = z.max_frequency / radius;
    const double r2 = (px - cx) * (px - cx) + (py - cy) * (py - cy);
    return z.mean + z.amplitude * std::cos(std::numbers::pi * k * r2);
}

Scene synthesize_scene(const SceneSpec& spec, std::uint64_t seed) {
    if (spec.width < 2 || spec.height < 2 || spec.width % 2 != 0 || spec.height % 2 != 0) {
        fail(ErrorCode::InvalidArgument, "scene dimensions must be even and at least 2x2");
    }
    Scene scene;
    scene.rgb = PlanarImage(spec.width, spec.height, 3, ColorDomain::LinearRGB);
    for (int c = 0; c < 3; ++c)
        std::ranges::fill(scene.rgb.plane(c), spec.background[static_cast<std::size_t>(c)]);

    std::vector<int> owner(scene.rgb.plane_size(), -1);
    for (std::size_t i = 0; i < spec.elements.size(); ++i) {
        Painter painter{scene.rgb, owner, static_cast<int>(i)};
        std::visit([&](const auto& e) { paint(painter, e, seed); }, spec.elements[i]);
    }

    scene.flat_mask.assign(scene.rgb.plane_size(), false);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const int idx = owner[static_cast<std::size_t>(y) * spec.width + x];
            if (idx < 0) continue;
            const auto* flat = std::get_if<FlatElement>(&spec.elements[static_cast<std::size_t>(idx)]);
            if (!flat) continue;
            const Rect inner{flat->rect.x + flat->margin, flat->rect.y + flat->margin, flat->rect.width - 2 * flat->margin,
                             flat->rect.height - 2 * flat->margin};
            scene.flat_mask[static_cast<std::size_t>(y) * spec.width + x] = inner.contains(x, y);
        }
    if (std::ranges::none_of(scene.flat_mask, [](bool b) { return b; })) {
        fail(ErrorCode::InvalidArgument, "scene has an empty flat-region mask");
    }
    return scene;
}

SceneSpec SceneSpec::default_chart(int width, int height) {
    require(width >= 32 && height >= 32, "default chart needs at least 32x32 pixels");
    SceneSpec s;
    s.width = width;
    s.height = height;
    auto sx = [&](double f) { return static_cast<int>(std::lround(f * width)); };
    auto sy = [&](double f) { return static_cast<int>(std::lround(f * height)); };
    auto rect = [&](double x, double y, double w, double h) { return Rect{sx(x), sy(y), sx(w), sy(h)}; };
    const int margin = std::max(2, sx(0.04));

    // Top row: dark flat, slanted edge, zone plate.
    s.elements.emplace_back(FlatElement{rect(0.03, 0.03, 0.25, 0.25), {0.18, 0.18, 0.18}, margin});
    s.elements.emplace_back(EdgeElement{rect(0.31, 0.03, 0.30, 0.30), 5.0, {0.15, 0.15, 0.15}, {0.75, 0.75, 0.75}});
    s.elements.emplace_back(ZonePlateElement{rect(0.64, 0.03, 0.33, 0.33), 0.3, 0.5, 0.35});
    // Middle band: colour patches.
    s.elements.emplace_back(PatchGridElement{rect(0.03, 0.38, 0.94, 0.20), 2, 6,
                                             {{0.60, 0.20, 0.15}, {0.20, 0.55, 0.20}, {0.15, 0.25, 0.65},
                                              {0.70, 0.65, 0.15}, {0.55, 0.20, 0.55}, {0.15, 0.55, 0.60},
                                              {0.85, 0.50, 0.30}, {0.30, 0.35, 0.70}, {0.75, 0.35, 0.40},
                                              {0.35, 0.20, 0.40}, {0.60, 0.75, 0.25}, {0.90, 0.65, 0.15}}});
    // Bottom row: bright flat, texture, near-horizontal edge.
    s.elements.emplace_back(FlatElement{rect(0.03, 0.62, 0.25, 0.35), {0.62, 0.62, 0.62}, margin});
    s.elements.emplace_back(TextureElement{rect(0.31, 0.62, 0.33, 0.35), 0.45, 0.25, std::max(2, sx(0.03))});
    s.elements.emplace_back(EdgeElement{rect(0.67, 0.62, 0.30, 0.35), 95.0, {0.70, 0.55, 0.45}, {0.12, 0.18, 0.25}});
    return s;
}

} // namespace isptune

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "isptune/fitness.hpp"

#include "isptune/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace isptune {

namespace {

void check_same(const PlanarImage& a, const PlanarImage& b, const char* what) {
    if (!a.same_shape(b)) {
        fail(ErrorCode::ShapeMismatch, std::string(what) + ": image shapes differ");
    }
}

// Gaussian-weighted "valid" filter: output is (w-n+1) x (h-n+1).
std::vector<double> valid_filter(std::span<const double> src, int w, int h, const std::vector<double>& g) {
    const int n = static_cast<int>(g.size());
    const int ow = w - n + 1;
    const int oh = h - n + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            const double* row = &src[static_cast<std::size_t>(y) * w + x];
            for (int k = 0; k < n; ++k) acc += g[static_cast<std::size_t>(k)] * row[k];
            tmp[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += g[static_cast<std::size_t>(k)] * tmp[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

struct SsimTerms {
    double ssim = 0.0; ///< mean of l*cs map
    double cs = 0.0;   ///< mean of contrast-structure map
};

SsimTerms ssim_terms(const PlanarImage& a, const PlanarImage& b, const SsimOptions& opt) {
    const int w = a.width();
    const int h = a.height();
    if (w < opt.window || h < opt.window) {
        fail(ErrorCode::InvalidArgument, "image smaller than the SSIM window");
    }
    std::vector<double> g(static_cast<std::size_t>(opt.window));
    const int r = opt.window / 2;
    for (int i = 0; i < opt.window; ++i) g[static_cast<std::size_t>(i)] = std::exp(-((i - r) * (i - r)) / (2.0 * opt.sigma * opt.sigma));
    const double total = std::accumulate(g.begin(), g.end(), 0.0);
    for (double& v : g) v /= total;

    const auto pa = a.data();
    const auto pb = b.data();
    std::vector<double> aa(pa.size()), bb(pa.size()), ab(pa.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        aa[i] = pa[i] * pa[i];
        bb[i] = pb[i] * pb[i];
        ab[i] = pa[i] * pb[i];
    }
    const auto mu_a = valid_filter(pa, w, h, g);
    const auto mu_b = valid_filter(pb, w, h, g);
    const auto s_aa = valid_filter(aa, w, h, g);
    const auto s_bb = valid_filter(bb, w, h, g);
    const auto s_ab = valid_filter(ab, w, h, g);

    const double c1 = (opt.k1 * opt.dynamic_range) * (opt.k1 * opt.dynamic_range);
    const double c2 = (opt.k2 * opt.dynamic_range) * (opt.k2 * opt.dynamic_range);
    double sum_ssim = 0.0;
    double sum_cs = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i];
        const double mb = mu_b[i];
        const double va = s_aa[i] - ma * ma;
        const double vb = s_bb[i] - mb * mb;
        const double cov = s_ab[i] - ma * mb;
        const double cs = (2.0 * cov + c2) / (va + vb + c2);
        const double l = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
        sum_ssim += l * cs;
        sum_cs += cs;
    }
    const double n = static_cast<double>(mu_a.size());
    return {sum_ssim / n, sum_cs / n};
}

PlanarImage downsample2(const PlanarImage& p) {
    const int w = p.width() / 2;
    const int h = p.height() / 2;
    PlanarImage out(w, h, 1, ColorDomain::Plane);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            out.at(0, y, x) = 0.25 * (p.at(0, 2 * y, 2 * x) + p.at(0, 2 * y, 2 * x + 1) + p.at(0, 2 * y + 1, 2 * x) +
                                      p.at(0, 2 * y + 1, 2 * x + 1));
    return out;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

double sad(const PlanarImage& a, const PlanarImage& b) {
    check_same(a, b, "sad");
    const auto pa = a.data();
    const auto pb = b.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) acc += std::abs(pa[i] - pb[i]);
    return acc;
}

double mad_8bit(const PlanarImage& a, const PlanarImage& b) {
    check_same(a, b, "mad_8bit");
    return 255.0 * sad(a, b) / static_cast<double>(a.size());
}

double ssim(const PlanarImage& a, const PlanarImage& b, const SsimOptions& opt) {
    check_same(a, b, "ssim");
    return ssim_terms(luma(a), luma(b), opt).ssim;
}

int ms_ssim_scales(int width, int height, int max_scales, int window) {
    int scales = 0;
    int w = width;
    int h = height;
    while (scales < max_scales && w >= window && h >= window) {
        ++scales;
        w /= 2;
        h /= 2;
    }
    return scales;
}

double ms_ssim(const PlanarImage& a, const PlanarImage& b, int max_scales, const SsimOptions& opt) {
    check_same(a, b, "ms_ssim");
    require(max_scales >= 1 && max_scales <= static_cast<int>(kMsSsimWeights.size()), "ms_ssim: 1..5 scales");
    const int scales = ms_ssim_scales(a.width(), a.height(), max_scales, opt.window);
    if (scales == 0) {
        fail(ErrorCode::InvalidArgument, "image smaller than the SSIM window");
    }
    double weight_sum = 0.0;
    for (int j = 0; j < scales; ++j) weight_sum += kMsSsimWeights[static_cast<std::size_t>(j)];

    PlanarImage x = luma(a);
    PlanarImage y = luma(b);
    double result = 1.0;
    for (int j = 0; j < scales; ++j) {
        const SsimTerms t = ssim_terms(x, y, opt);
        const double wj = kMsSsimWeights[static_cast<std::size_t>(j)] / weight_sum;
        const double term = j + 1 == scales ? t.ssim : t.cs;
        result *= std::pow(std::max(term, 0.0), wj);
        if (j + 1 < scales) {
            x = downsample2(x);
            y = downsample2(y);
        }
    }
    return result;
}

PlanarImage fitness_view(BlockId block, const PlanarImage& image) {
    switch (block) {
    case BlockId::BayerNR:
        if (image.channels() != 1) fail(ErrorCode::DomainMismatch, "BayerNR fitness compares Bayer planes");
        return image;
    case BlockId::Demosaic:
        if (image.domain() != ColorDomain::LinearRGB) fail(ErrorCode::DomainMismatch, "Demosaic fitness compares linear RGB");
        return image;
    case BlockId::YuvNR:
        if (image.domain() != ColorDomain::YUV) fail(ErrorCode::DomainMismatch, "YuvNR fitness compares YUV");
        return image;
    case BlockId::Sharpen:
        if (image.domain() == ColorDomain::YUV) return image.channel(0);
        if (image.domain() == ColorDomain::Plane) return image;
        fail(ErrorCode::DomainMismatch, "Sharpen fitness compares the Y plane");
    }
    return image;
}

double block_fitness(BlockId block, const PipelineTaps& taps, const PlanarImage& reference) {
    return sad(taps.block_output(block), fitness_view(block, reference));
}

FitnessReport fitness_report(BlockId block, std::string label, const PlanarImage& output, const PlanarImage& reference) {
    const PlanarImage out = fitness_view(block, output);
    const PlanarImage ref = fitness_view(block, reference);
    FitnessReport r;
    r.block = block;
    r.label = std::move(label);
    r.sad = sad(out, ref);
    r.mad_8bit = 255.0 * r.sad / static_cast<double>(out.size());
    r.ssim = ssim(out, ref);
    r.ms_ssim = ms_ssim(out, ref);
    r.domain = out.domain();
    r.pixel_count = out.size();
    return r;
}

std::string fitness_csv_header() { return "block,tuning,MAD,SSIM,MS-SSIM"; }

std::string to_csv_row(const FitnessReport& r) {
    return std::string(to_string(r.block)) + "," + r.label + "," + fmt_double(r.mad_8bit) + "," + fmt_double(r.ssim) + "," +
           fmt_double(r.ms_ssim);
}

} // namespace isptune

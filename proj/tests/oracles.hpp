// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

// Straightforward reference implementations used as test oracles. They are
// written independently of the library code: plain loops, no separability,
// no shared helpers.

#pragma once

#include "isptune/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using isptune::ColorDomain;
using isptune::PlanarImage;

inline PlanarImage random_image(int w, int h, int c, unsigned seed, double lo = 0.0, double hi = 1.0) {
    PlanarImage img(w, h, c, c == 3 ? ColorDomain::LinearRGB : ColorDomain::Plane);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    for (double& v : img.data()) v = u(rng);
    return img;
}

// Edge-replicated correlation with a size x size kernel given row-major.
inline std::vector<double> correlate(const std::vector<double>& src, int w, int h, const std::vector<double>& k, int size) {
    const int r = size / 2;
    std::vector<double> out(src.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i)
                for (int j = -r; j <= r; ++j) {
                    const int yy = std::min(std::max(y + i, 0), h - 1);
                    const int xx = std::min(std::max(x + j, 0), w - 1);
                    acc += k[(i + r) * size + (j + r)] * src[yy * w + xx];
                }
            out[y * w + x] = acc;
        }
    return out;
}

inline std::vector<double> gaussian_taps(int size, double sigma) {
    std::vector<double> k(size * size);
    const int r = size / 2;
    double total = 0.0;
    for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j) {
            const double v = std::exp(-(i * i + j * j) / (2.0 * sigma * sigma));
            k[(i + r) * size + (j + r)] = v;
            total += v;
        }
    for (double& v : k) v /= total;
    return k;
}

inline std::vector<double> plane_vector(const PlanarImage& img, int c = 0) {
    const auto p = img.plane(c);
    return {p.begin(), p.end()};
}

// Sharpening reference computed step by step as printed in its formula
// chain, with flat statistics over the masked pixels.
struct SharpenOracle {
    std::vector<double> ref;
    std::vector<double> added;
};

inline SharpenOracle sharpening_reference(const std::vector<double>& I, int w, int h, double alpha,
                                          const std::vector<bool>& flat) {
    const std::vector<double> sh = {-3, 0, 3, -10, 0, 10, -3, 0, 3};
    std::vector<double> sv(9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) sv[i * 3 + j] = sh[j * 3 + i];
    std::vector<double> shs(sh), svs(sv);
    for (double& v : shs) v /= 32.0;
    for (double& v : svs) v /= 32.0;
    const auto gh = correlate(I, w, h, shs, 3);
    const auto gv = correlate(I, w, h, svs, 3);
    const std::vector<double> dh = {0, -1, 0, 0, 2, 0, 0, -1, 0};
    const std::vector<double> dv = {0, 0, 0, -1, 2, -1, 0, 0, 0};
    const auto dhi = correlate(I, w, h, dh, 3);
    const auto dvi = correlate(I, w, h, dv, 3);
    const auto blur = correlate(I, w, h, gaussian_taps(9, 2.5), 9);
    const std::size_t n = I.size();
    std::vector<double> dndir(n), absn(n);
    for (std::size_t i = 0; i < n; ++i) {
        dndir[i] = I[i] - blur[i];
        absn[i] = std::abs(dndir[i]);
    }
    const auto energy = correlate(absn, w, h, std::vector<double>(81, 1.0 / 81.0), 9);
    double sum = 0.0;
    double count = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (flat[i]) {
            sum += energy[i];
            count += 1.0;
        }
    const double mean = sum / count;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (flat[i]) ss += (energy[i] - mean) * (energy[i] - mean);
    const double sigma_alpha = std::max(mean + std::sqrt(ss / count), 1e-6);

    SharpenOracle out{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double ah = std::abs(gh[i]);
        const double av = std::abs(gv[i]);
        const double wgt = (ah < 1e-12 && av < 1e-12) ? 0.5 : ah / (ah + av);
        const double ddir = wgt * dhi[i] + (1.0 - wgt) * dvi[i];
        const double m = std::min(ah, av);
        const double wn = std::exp(-(m * m) / (0.5 * 0.5));
        const double an = 1.0 - std::exp(-energy[i] / (sigma_alpha * sigma_alpha));
        out.added[i] = an * (wn * dndir[i] + (1.0 - wn) * ddir);
        out.ref[i] = I[i] + alpha * out.added[i];
    }
    return out;
}

} // namespace oracle

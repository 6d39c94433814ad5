// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#pragma once

#include <algorithm>
#include <cmath>

namespace isptune {

/// Affine signal-dependent sensor noise, sigma^2(I) = a*g*I + b*g^2 where
/// (a, b) are the base-gain coefficients and g the sensor gain.
struct NoiseModel {
    double a = 0.0;
    double b = 0.0;
    double gain = 1.0;

    double variance(double intensity) const noexcept {
        return a * gain * std::max(intensity, 0.0) + b * gain * gain;
    }
    double sigma(double intensity) const noexcept { return std::sqrt(variance(intensity)); }

    NoiseModel at_gain(double g) const noexcept { return NoiseModel{a, b, g}; }

    friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

} // namespace isptune

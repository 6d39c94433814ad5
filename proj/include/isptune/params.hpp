// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#pragma once

#include <span>
#include <string>
#include <vector>

namespace isptune {

/// Physical description of one tunable parameter. The optimizer only ever
/// sees values in [0,1]; 0 maps to prior_min and 1 to prior_max.
struct ParamSpec {
    std::string name;
    double physical_min = 0.0;
    double physical_max = 1.0;
    double prior_min = 0.0;
    double prior_max = 1.0;
    /// Discrete parameters are stored as reals and rounded where consumed.
    bool integer = false;

    static ParamSpec make(std::string name, double lo, double hi, bool integer = false) {
        return ParamSpec{std::move(name), lo, hi, lo, hi, integer};
    }

    /// Copy with prior bounds narrowed to [lo, hi] (validated).
    ParamSpec with_prior(double lo, double hi) const;
    void validate() const;
};

double normalize(const ParamSpec& spec, double physical);
double denormalize(const ParamSpec& spec, double unit);

std::vector<double> normalize(std::span<const ParamSpec> specs, std::span<const double> physical);
std::vector<double> denormalize(std::span<const ParamSpec> specs, std::span<const double> unit);

} // namespace isptune

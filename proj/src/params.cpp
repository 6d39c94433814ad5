// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "isptune/params.hpp"

#include "isptune/error.hpp"

#include <cmath>

namespace isptune {

void ParamSpec::validate() const {
    require(std::isfinite(physical_min) && std::isfinite(physical_max), name + ": non-finite bounds");
    require(physical_min < physical_max, name + ": physical_min must be below physical_max");
    require(physical_min <= prior_min && prior_min < prior_max && prior_max <= physical_max,
            name + ": prior bounds must satisfy physical_min <= prior_min < prior_max <= physical_max");
}

ParamSpec ParamSpec::with_prior(double lo, double hi) const {
    ParamSpec out = *this;
    out.prior_min = lo;
    out.prior_max = hi;
    out.validate();
    return out;
}

double normalize(const ParamSpec& spec, double physical) {
    if (!(physical >= spec.prior_min && physical <= spec.prior_max)) {
        fail(ErrorCode::InvalidArgument, spec.name + ": value " + std::to_string(physical) + " outside prior bounds [" +
                                             std::to_string(spec.prior_min) + ", " + std::to_string(spec.prior_max) + "]");
    }
    return (physical - spec.prior_min) / (spec.prior_max - spec.prior_min);
}

double denormalize(const ParamSpec& spec, double unit) {
    if (!(unit >= 0.0 && unit <= 1.0)) {
        fail(ErrorCode::InvalidArgument, spec.name + ": normalized value outside [0,1]");
    }
    if (unit == 1.0) {
        return spec.prior_max;
    }
    return spec.prior_min + unit * (spec.prior_max - spec.prior_min);
}

std::vector<double> normalize(std::span<const ParamSpec> specs, std::span<const double> physical) {
    require(specs.size() == physical.size(), "normalize: spec/value count mismatch");
    std::vector<double> out(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) out[i] = normalize(specs[i], physical[i]);
    return out;
}

std::vector<double> denormalize(std::span<const ParamSpec> specs, std::span<const double> unit) {
    require(specs.size() == unit.size(), "denormalize: spec/value count mismatch");
    std::vector<double> out(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) out[i] = denormalize(specs[i], unit[i]);
    return out;
}

} // namespace isptune

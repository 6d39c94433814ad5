// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#pragma once

#include "isptune/imaging.hpp"
#include "isptune/noise_model.hpp"
#include "isptune/params.hpp"

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace isptune {

/// The four tunable blocks, in pipeline order.
enum class BlockId { BayerNR = 0, Demosaic = 1, YuvNR = 2, Sharpen = 3 };

inline constexpr std::array<BlockId, 4> kPipelineOrder = {BlockId::BayerNR, BlockId::Demosaic, BlockId::YuvNR,
                                                          BlockId::Sharpen};

std::string_view to_string(BlockId b);
BlockId parse_block_id(std::string_view s);
constexpr int block_index(BlockId b) noexcept { return static_cast<int>(b); }

/// Physical parameter table for a block. Order is fixed and is the JSON key order.
std::span<const ParamSpec> block_param_specs(BlockId block);

/// Parameter values of one block in physical units, ordered as block_param_specs().
class BlockParams {
public:
    BlockParams(BlockId block, std::vector<double> values);

    BlockId block() const noexcept { return block_; }
    std::span<const double> values() const noexcept { return values_; }
    double get(std::string_view name) const;
    void set(std::string_view name, double value);
    std::size_t size() const noexcept { return values_.size(); }

    /// Every parameter at the middle of its physical range.
    static BlockParams mid_range(BlockId block);
    /// Settings under which the block leaves its input unchanged.
    static BlockParams passthrough(BlockId block);

    friend bool operator==(const BlockParams&, const BlockParams&) = default;

private:
    BlockId block_;
    std::vector<double> values_;
};

/// One BlockParams slot per block. Partial tunings are allowed while a
/// session is still tuning downstream blocks; run_pipeline requires all four.
class PipelineTuning {
public:
    PipelineTuning() = default;

    bool has(BlockId b) const noexcept { return slots_[block_index(b)].has_value(); }
    const BlockParams& at(BlockId b) const;
    void set(BlockParams p);
    bool complete() const noexcept;

    static PipelineTuning passthrough();
    static PipelineTuning mid_range();

    friend bool operator==(const PipelineTuning&, const PipelineTuning&) = default;

private:
    std::array<std::optional<BlockParams>, 4> slots_;
};

// -----------------------------------------------------------------------------
// Blocks
// -----------------------------------------------------------------------------

/// Per-CFA-plane bilateral filter. Range sigma follows the noise model at the
/// centre sample, scaled by k_r; output blends input and filtered by beta.
BayerMosaic bayer_nr(const BayerMosaic& m, const BlockParams& p, const NoiseModel& nm);

/// Gradient-directed green interpolation, bilinear colour-difference red/blue,
/// optional green anti-zipper blur and chroma-median false-colour suppression.
PlanarImage demosaic(const BayerMosaic& m, const BlockParams& p);

/// Bilateral on Y, Y-guided joint bilateral on U and V.
PlanarImage yuv_nr(const PlanarImage& yuv, const BlockParams& p);

/// Cored unsharp mask on Y with a 3x3 overshoot clamp. U and V pass through.
PlanarImage sharpen(const PlanarImage& yuv, const BlockParams& p);

// -----------------------------------------------------------------------------
// Pipeline
// -----------------------------------------------------------------------------

/// Intermediate results. A tap is empty when the pipeline stopped before it.
struct PipelineTaps {
    std::optional<BayerMosaic> bayer_nr;
    std::optional<PlanarImage> demosaic; ///< LinearRGB
    std::optional<PlanarImage> yuv_nr;   ///< YUV
    std::optional<PlanarImage> sharpen;  ///< YUV
    std::optional<PlanarImage> output;   ///< LinearRGB, clamped to [0,1]

    /// Output of the block in its fitness domain: Bayer plane, RGB, YUV, or Y.
    PlanarImage block_output(BlockId block) const;
};

PipelineTaps run_pipeline(const BayerMosaic& m, const PipelineTuning& t, const NoiseModel& nm);

/// Runs the pipeline up to and including `last`, using whatever blocks the
/// tuning holds. Missing upstream params raise MissingUpstream.
PipelineTaps run_pipeline_until(const BayerMosaic& m, const PipelineTuning& t, const NoiseModel& nm, BlockId last);

} // namespace isptune

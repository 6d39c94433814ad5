// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#pragma once

#include "isptune/fitness.hpp"
#include "isptune/imaging.hpp"
#include "isptune/isp.hpp"
#include "isptune/noise_model.hpp"
#include "isptune/optim.hpp"
#include "isptune/refgen.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace isptune {

using Json = nlohmann::ordered_json;

/// Narrowed search range for one parameter.
struct PriorBound {
    std::string param;
    double min = 0.0;
    double max = 1.0;
};

struct SessionConfig {
    /// Scene spec JSON; the built-in chart at scene_width x scene_height when empty.
    std::filesystem::path scene_path;
    int scene_width = 128;
    int scene_height = 128;
    CfaPattern pattern = CfaPattern::RGGB;
    /// Base-gain noise coefficients; the gain field is ignored.
    NoiseModel noise{2e-4, 2e-6, 1.0};
    std::vector<double> gains{1.0, 2.0, 4.0, 8.0};
    std::vector<std::string> gain_labels{"ISO50", "ISO100", "ISO200", "ISO400"};
    int burst_size = 10;
    /// Weight of the fused burst against a single frame in the BayerNR reference.
    double nr_blend = 1.0;
    SharpenRefConfig sharpen_ref;
    /// Blocks to tune, a prefix of the pipeline order.
    std::vector<BlockId> blocks{BlockId::BayerNR, BlockId::Demosaic, BlockId::YuvNR, BlockId::Sharpen};
    std::array<OptimConfig, 4> optim;
    /// Warm-start every gain above the lowest from the gain below.
    bool regularize = false;
    /// With regularize: keep a shortened global stage (this fraction of the
    /// global share) before the warm-started local stage.
    bool regularize_with_global = false;
    double regularized_global_fraction = 0.25;
    /// Prior bounds per block, applied when use_priors is set and by the
    /// "w/ Prior" repeatability flow.
    std::map<BlockId, std::vector<PriorBound>> priors;
    bool use_priors = false;
    /// Gain used by repeat/evaluate when none is given.
    double experiment_gain = 8.0;
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 0;

    /// Defaults plus the documented BayerNR priors.
    static SessionConfig defaults();
    void validate() const;
    const OptimConfig& optim_for(BlockId b) const { return optim[static_cast<std::size_t>(block_index(b))]; }
    OptimConfig& optim_for(BlockId b) { return optim[static_cast<std::size_t>(block_index(b))]; }
    std::string label_for(std::size_t gain_index) const;
    std::size_t gain_index(double gain) const;
};

Json to_json(const SessionConfig& c);
SessionConfig session_config_from_json(const Json& j);
SessionConfig load_session_config(const std::filesystem::path& path);

Json scene_spec_to_json(const SceneSpec& s);
SceneSpec scene_spec_from_json(const Json& j);
Json noise_model_to_json(const NoiseModel& nm);
NoiseModel noise_model_from_json(const Json& j);

/// {block: {param: physical value}} in pipeline and table order.
Json tuning_to_json(const PipelineTuning& t);
PipelineTuning tuning_from_json(const Json& j);

/// Parameter table of a block, with priors applied when requested.
std::vector<ParamSpec> effective_specs(const SessionConfig& cfg, BlockId block, bool with_priors);

/// Fixed manual tuning standing in for an expert hand tuning.
PipelineTuning hand_proxy_tuning();

// -----------------------------------------------------------------------------
// Per-gain data
// -----------------------------------------------------------------------------

/// Everything simulated for one gain: scene, burst, and the noisy frame fed
/// to the pipeline.
struct GainCapture {
    double gain = 1.0;
    std::size_t gain_index = 0;
    NoiseModel noise;
    Scene scene;
    Burst burst;
    BayerMosaic noisy;
    BayerMosaic fused;
};

GainCapture simulate_gain(const SessionConfig& cfg, std::size_t gain_index);

/// The scene the session tunes on (spec file or built-in chart).
Scene session_scene(const SessionConfig& cfg);

/// Reference of one block. Blocks after Demosaic need their upstream tuning:
/// the fused burst is run through it (YuvNR), and the sharpening reference is
/// computed on the luma of that result (Sharpen).
PlanarImage block_reference(BlockId block, const GainCapture& cap, const PipelineTuning& upstream,
                            const SessionConfig& cfg);

// -----------------------------------------------------------------------------
// Tuning
// -----------------------------------------------------------------------------

enum class SearchMode { TwoStage, GlobalOnly, WarmLocal, WarmWithGlobal };

struct BlockTuneResult {
    BlockParams params;
    TuningVector normalized; ///< in the coordinates of the specs used for the search
    double fitness = 0.0;    ///< SAD against the reference
    OptimResult optim;
};

/// Tunes `block` with every upstream block frozen at `upstream`.
BlockTuneResult tune_block(BlockId block, const BayerMosaic& source, const PlanarImage& reference,
                           const PipelineTuning& upstream, const NoiseModel& nm, std::span<const ParamSpec> specs,
                           const OptimConfig& cfg, SearchMode mode, const std::optional<TuningVector>& warm_start = {});

/// Fitness of a given parameter set for `block` (upstream frozen).
double evaluate_block(BlockId block, const BayerMosaic& source, const PlanarImage& reference,
                      const PipelineTuning& upstream, const NoiseModel& nm, const BlockParams& params);

struct BlockRecord {
    double fitness = 0.0;
    long evals = 0;
    OptimResult optim;
};

struct GainTuning {
    double gain = 1.0;
    std::string label;
    PipelineTuning tuning;
    std::map<BlockId, BlockRecord> blocks;
};

GainTuning tune_pipeline(const SessionConfig& cfg, std::size_t gain_index,
                         const std::optional<PipelineTuning>& warm_start = {});

struct TuningLadder {
    std::uint64_t seed = 0;
    bool regularize = false;
    std::vector<GainTuning> gains;
};

TuningLadder tune_ladder(const SessionConfig& cfg);

Json ladder_to_json(const TuningLadder& l);
TuningLadder ladder_from_json(const Json& j);

/// block,param,gain,label,value rows.
std::string ladder_fitness_csv(const TuningLadder& l);

// -----------------------------------------------------------------------------
// Experiments
// -----------------------------------------------------------------------------

struct SmoothnessTable {
    std::vector<std::string> params;                       ///< "Block.param"
    std::vector<std::pair<std::string, std::string>> pairs; ///< (from, to) gain labels
    std::vector<std::vector<double>> jumps;                 ///< [pair][param], normalized units
    double mean = 0.0;

    /// Mean jump over every pair and the parameters of one block.
    double block_mean(BlockId block) const;
};

/// |normalized(k+1) - normalized(k)| per parameter, normalized over the full
/// physical range.
SmoothnessTable transition_smoothness(const TuningLadder& ladder);
std::string smoothness_csv(const SmoothnessTable& t);

enum class RepeatFlow { Global, GlobalLocal, GlobalLocalPrior };
std::string_view to_string(RepeatFlow f);

struct RepeatRow {
    RepeatFlow flow = RepeatFlow::Global;
    std::vector<double> mad; ///< final MAD (8-bit scale) per run
    double ave = 0.0;
    double std = 0.0;        ///< sample standard deviation
};

/// Tunes BayerNR `runs` times per flow at the experiment gain, with equal
/// total budget. Run r uses seed (cfg.seed, r) unless distinct_seeds is false.
std::vector<RepeatRow> repeatability_experiment(const SessionConfig& cfg, int runs, bool distinct_seeds = true);
std::string repeat_csv(const std::vector<RepeatRow>& rows);

struct EvaluationReport {
    std::vector<FitnessReport> rows; ///< block-major, then Not, Hand, Auto
};

/// Side-by-side comparison at one gain between passthrough ("Not"),
/// hand_proxy_tuning() ("Hand") and `auto_tuning` ("Auto"). Blocks absent
/// from auto_tuning are skipped.
EvaluationReport evaluate_tuning(const SessionConfig& cfg, std::size_t gain_index, const PipelineTuning& auto_tuning);
std::string evaluation_csv(const EvaluationReport& r);
EvaluationReport evaluation_from_csv(const std::string& csv);

/// Side-by-side crops of the final RGB output: Not | Hand | Auto | clean scene.
PlanarImage comparison_strip(const SessionConfig& cfg, std::size_t gain_index, const PipelineTuning& auto_tuning,
                             int crop_size = 48);

/// Stable 64-bit mixing of a base seed with stream indices.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

} // namespace isptune

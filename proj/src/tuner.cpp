// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "isptune/tuner.hpp"

#include "isptune/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace isptune {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(base) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

Scene session_scene(const SessionConfig& cfg) {
    SceneSpec spec;
    if (cfg.scene_path.empty()) {
        spec = SceneSpec::default_chart(cfg.scene_width, cfg.scene_height);
    } else {
        std::ifstream in(cfg.scene_path);
        if (!in) fail(ErrorCode::Io, "cannot open scene " + cfg.scene_path.string());
        Json j;
        try {
            j = Json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::InvalidArgument, "scene " + cfg.scene_path.string() + " is not valid JSON: " + e.what());
        }
        spec = scene_spec_from_json(j);
    }
    return synthesize_scene(spec, cfg.seed);
}

GainCapture simulate_gain(const SessionConfig& cfg, std::size_t gain_index) {
    require(gain_index < cfg.gains.size(), "gain index out of range");
    GainCapture cap;
    cap.gain = cfg.gains[gain_index];
    cap.gain_index = gain_index;
    cap.noise = cfg.noise.at_gain(cap.gain);
    cap.scene = session_scene(cfg);
    cap.burst = simulate_capture(cap.scene.rgb, cap.noise, cfg.pattern, cfg.burst_size, derive_seed(cfg.seed, 1, gain_index));
    cap.noisy = cap.burst.frames.front();
    cap.fused = temporal_fusion(cap.burst);
    return cap;
}

PlanarImage block_reference(BlockId block, const GainCapture& cap, const PipelineTuning& upstream, const SessionConfig& cfg) {
    switch (block) {
    case BlockId::BayerNR:
        return blend_references(cap.fused, cap.noisy, cfg.nr_blend).as_plane();
    case BlockId::Demosaic:
        return cap.scene.rgb;
    case BlockId::YuvNR:
    case BlockId::Sharpen: {
        const PipelineTaps taps = run_pipeline_until(cap.fused, upstream, cap.noise, BlockId::Demosaic);
        PlanarImage yuv = rgb_to_yuv(*taps.demosaic);
        if (block == BlockId::YuvNR) return yuv;
        yuv = yuv_nr(yuv, upstream.at(BlockId::YuvNR));
        return sharpening_reference(yuv.channel(0), cfg.sharpen_ref, cap.scene.flat_mask);
    }
    }
    fail(ErrorCode::InvalidArgument, "unknown block");
}

// =============================================================================
// Tuning
// =============================================================================

namespace {

// Input of a block with everything upstream frozen, so each evaluation only
// runs the block being tuned.
struct Stage {
    BlockId block;
    std::optional<BayerMosaic> mosaic;
    std::optional<PlanarImage> image;
    NoiseModel nm;

    PlanarImage run(const BlockParams& p) const {
        switch (block) {
        case BlockId::BayerNR: return bayer_nr(*mosaic, p, nm).as_plane();
        case BlockId::Demosaic: return demosaic(*mosaic, p);
        case BlockId::YuvNR: return yuv_nr(*image, p);
        case BlockId::Sharpen: return sharpen(*image, p).channel(0);
        }
        return {};
    }
};

Stage make_stage(BlockId block, const BayerMosaic& source, const PipelineTuning& upstream, const NoiseModel& nm) {
    Stage s{block, std::nullopt, std::nullopt, nm};
    if (block == BlockId::BayerNR) {
        s.mosaic = source;
        return s;
    }
    const BayerMosaic nr = bayer_nr(source, upstream.at(BlockId::BayerNR), nm);
    if (block == BlockId::Demosaic) {
        s.mosaic = nr;
        return s;
    }
    PlanarImage yuv = rgb_to_yuv(demosaic(nr, upstream.at(BlockId::Demosaic)));
    if (block == BlockId::YuvNR) {
        s.image = std::move(yuv);
        return s;
    }
    s.image = yuv_nr(yuv, upstream.at(BlockId::YuvNR));
    return s;
}

long global_share(const OptimConfig& cfg) {
    return static_cast<long>(std::floor(cfg.stage_split * static_cast<double>(cfg.total_evals)));
}

} // namespace

double evaluate_block(BlockId block, const BayerMosaic& source, const PlanarImage& reference, const PipelineTuning& upstream,
                      const NoiseModel& nm, const BlockParams& params) {
    require(params.block() == block, "parameters belong to another block");
    const Stage stage = make_stage(block, source, upstream, nm);
    return sad(stage.run(params), fitness_view(block, reference));
}

BlockTuneResult tune_block(BlockId block, const BayerMosaic& source, const PlanarImage& reference,
                           const PipelineTuning& upstream, const NoiseModel& nm, std::span<const ParamSpec> specs,
                           const OptimConfig& cfg, SearchMode mode, const std::optional<TuningVector>& warm_start) {
    cfg.validate();
    require(specs.size() == block_param_specs(block).size(), "spec table does not match the block");
    const Stage stage = make_stage(block, source, upstream, nm);
    const PlanarImage ref = fitness_view(block, reference);
    const std::vector<ParamSpec> table(specs.begin(), specs.end());
    Objective f([&](std::span<const double> x) { return sad(stage.run(BlockParams(block, denormalize(table, x))), ref); });
    const int d = static_cast<int>(table.size());

    // One integer unit for discrete parameters, so the local stage can leave a plateau.
    OptimConfig base = cfg;
    base.local.min_step.assign(table.size(), 0.0);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const double range = table[i].prior_max - table[i].prior_min;
        if (table[i].integer && range >= 1.0) base.local.min_step[i] = std::min(1.0 / range, 0.5);
    }

    OptimResult r;
    switch (mode) {
    case SearchMode::TwoStage:
        r = two_stage(f, d, base);
        break;
    case SearchMode::GlobalOnly: {
        OptimConfig c = base;
        c.abc.max_evals = base.total_evals;
        r = abc_optimize(f, d, c, base.seed);
        break;
    }
    case SearchMode::WarmLocal: {
        require(warm_start.has_value(), "warm start required");
        OptimConfig c = base;
        c.local.max_evals = base.total_evals - global_share(base);
        r = warm_start_local(f, *warm_start, c);
        break;
    }
    case SearchMode::WarmWithGlobal: {
        require(warm_start.has_value(), "warm start required");
        // base.abc.max_evals is the shortened global budget here.
        const OptimResult g = abc_optimize(f, d, base, base.seed);
        const double fw = f(*warm_start);
        OptimConfig c = base;
        c.local.max_evals = base.total_evals - global_share(base);
        const bool warm_better = fw <= g.best_f;
        OptimResult l = c.local.method == LocalMethod::Subplex
                            ? subplex(f, warm_better ? *warm_start : g.best, warm_better ? fw : g.best_f, c)
                            : local_optimize(f, warm_better ? *warm_start : g.best, c);
        r = l;
        r.evals_used = f.evals();
        r.trace = g.trace;
        if (!r.trace.empty()) r.trace.pop_back();
        const long offset = g.evals_used + 1;
        for (TracePoint t : l.trace) {
            t.eval += offset;
            if (r.trace.empty() || t.best_f < r.trace.back().best_f) r.trace.push_back(t);
        }
        if (r.trace.empty() || r.trace.back().eval != r.evals_used) {
            r.trace.push_back({r.evals_used, std::min(r.best_f, r.trace.empty() ? r.best_f : r.trace.back().best_f)});
        }
        if (g.best_f < r.best_f) {
            r.best = g.best;
            r.best_f = g.best_f;
        }
        break;
    }
    }

    // Store integer parameters as the values the block actually uses.
    std::vector<double> physical = denormalize(table, r.best);
    for (std::size_t i = 0; i < table.size(); ++i)
        if (table[i].integer) physical[i] = std::round(physical[i]);
    BlockTuneResult out{BlockParams(block, std::move(physical)), r.best, r.best_f, r};
    return out;
}

GainTuning tune_pipeline(const SessionConfig& cfg, std::size_t gain_index, const std::optional<PipelineTuning>& warm_start) {
    cfg.validate();
    const GainCapture cap = simulate_gain(cfg, gain_index);
    GainTuning g;
    g.gain = cap.gain;
    g.label = cfg.label_for(gain_index);
    for (BlockId block : cfg.blocks) {
        const PlanarImage ref = block_reference(block, cap, g.tuning, cfg);
        const auto specs = effective_specs(cfg, block, cfg.use_priors);
        OptimConfig oc = cfg.optim_for(block);
        oc.seed = derive_seed(cfg.seed, 2 + gain_index, static_cast<std::uint64_t>(block_index(block)));
        SearchMode mode = SearchMode::TwoStage;
        std::optional<TuningVector> x0;
        if (warm_start && warm_start->has(block)) {
            x0 = normalize(specs, warm_start->at(block).values());
            mode = cfg.regularize_with_global ? SearchMode::WarmWithGlobal : SearchMode::WarmLocal;
            if (mode == SearchMode::WarmWithGlobal) {
                oc.abc.max_evals = std::max<long>(
                    oc.abc.population,
                    static_cast<long>(std::floor(cfg.regularized_global_fraction * static_cast<double>(global_share(oc)))));
            }
        }
        BlockTuneResult r = tune_block(block, cap.noisy, ref, g.tuning, cap.noise, specs, oc, mode, x0);
        g.tuning.set(r.params);
        g.blocks[block] = BlockRecord{r.fitness, r.optim.evals_used, std::move(r.optim)};
    }
    return g;
}

TuningLadder tune_ladder(const SessionConfig& cfg) {
    cfg.validate();
    TuningLadder ladder;
    ladder.seed = cfg.seed;
    ladder.regularize = cfg.regularize;
    for (std::size_t k = 0; k < cfg.gains.size(); ++k) {
        std::optional<PipelineTuning> warm;
        if (cfg.regularize && k > 0) warm = ladder.gains.back().tuning;
        ladder.gains.push_back(tune_pipeline(cfg, k, warm));
    }
    return ladder;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string ladder_fitness_csv(const TuningLadder& l) {
    std::string out = "block,param,gain,label,value\n";
    for (BlockId b : kPipelineOrder) {
        const auto specs = block_param_specs(b);
        for (std::size_t i = 0; i < specs.size(); ++i)
            for (const auto& g : l.gains) {
                if (!g.tuning.has(b)) continue;
                out += std::string(to_string(b)) + "," + specs[i].name + "," + fmt(g.gain) + "," + g.label + "," +
                       fmt(g.tuning.at(b).values()[i]) + "\n";
            }
    }
    return out;
}

// =============================================================================
// Experiments
// =============================================================================

double SmoothnessTable::block_mean(BlockId block) const {
    const std::string prefix = std::string(to_string(block)) + ".";
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (params[p].rfind(prefix, 0) != 0) continue;
        for (const auto& row : jumps) {
            acc += row[p];
            ++n;
        }
    }
    return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

SmoothnessTable transition_smoothness(const TuningLadder& ladder) {
    require(ladder.gains.size() >= 2, "transition smoothness needs at least two gains");
    SmoothnessTable t;
    std::vector<std::pair<BlockId, std::size_t>> index;
    for (BlockId b : kPipelineOrder) {
        const bool everywhere = std::ranges::all_of(ladder.gains, [&](const GainTuning& g) { return g.tuning.has(b); });
        if (!everywhere) continue;
        const auto specs = block_param_specs(b);
        for (std::size_t i = 0; i < specs.size(); ++i) {
            t.params.push_back(std::string(to_string(b)) + "." + specs[i].name);
            index.emplace_back(b, i);
        }
    }
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k + 1 < ladder.gains.size(); ++k) {
        const auto& lo = ladder.gains[k];
        const auto& hi = ladder.gains[k + 1];
        t.pairs.emplace_back(lo.label, hi.label);
        std::vector<double> row;
        for (const auto& [b, i] : index) {
            const ParamSpec& s = block_param_specs(b)[i];
            const double range = s.physical_max - s.physical_min;
            const double j = std::abs(hi.tuning.at(b).values()[i] - lo.tuning.at(b).values()[i]) / range;
            row.push_back(j);
            acc += j;
            ++n;
        }
        t.jumps.push_back(std::move(row));
    }
    t.mean = n == 0 ? 0.0 : acc / static_cast<double>(n);
    return t;
}

std::string smoothness_csv(const SmoothnessTable& t) {
    std::string out = "param";
    for (const auto& [a, b] : t.pairs) out += "," + a + "->" + b;
    out += "\n";
    for (std::size_t p = 0; p < t.params.size(); ++p) {
        out += t.params[p];
        for (const auto& row : t.jumps) out += "," + fmt(row[p]);
        out += "\n";
    }
    out += "mean";
    for (const auto& row : t.jumps) {
        double acc = 0.0;
        for (double v : row) acc += v;
        out += "," + fmt(row.empty() ? 0.0 : acc / static_cast<double>(row.size()));
    }
    out += "\n";
    return out;
}

std::string_view to_string(RepeatFlow f) {
    switch (f) {
    case RepeatFlow::Global: return "Global";
    case RepeatFlow::GlobalLocal: return "Global+Local";
    case RepeatFlow::GlobalLocalPrior: return "Global+Local w/ Prior";
    }
    return "?";
}

std::vector<RepeatRow> repeatability_experiment(const SessionConfig& cfg, int runs, bool distinct_seeds) {
    cfg.validate();
    require(runs >= 2, "repeatability needs at least two runs");
    const GainCapture cap = simulate_gain(cfg, cfg.gain_index(cfg.experiment_gain));
    const PlanarImage ref = block_reference(BlockId::BayerNR, cap, {}, cfg);
    const auto plain = effective_specs(cfg, BlockId::BayerNR, false);
    const auto prior = effective_specs(cfg, BlockId::BayerNR, true);
    const double pixels = static_cast<double>(cap.noisy.size());

    std::vector<RepeatRow> rows;
    for (RepeatFlow flow : {RepeatFlow::Global, RepeatFlow::GlobalLocal, RepeatFlow::GlobalLocalPrior}) {
        RepeatRow row;
        row.flow = flow;
        for (int r = 0; r < runs; ++r) {
            OptimConfig oc = cfg.optim_for(BlockId::BayerNR);
            oc.seed = derive_seed(cfg.seed, 7000, distinct_seeds ? static_cast<std::uint64_t>(r) : 0);
            const auto& specs = flow == RepeatFlow::GlobalLocalPrior ? prior : plain;
            const SearchMode mode = flow == RepeatFlow::Global ? SearchMode::GlobalOnly : SearchMode::TwoStage;
            const BlockTuneResult t = tune_block(BlockId::BayerNR, cap.noisy, ref, {}, cap.noise, specs, oc, mode);
            row.mad.push_back(255.0 * t.fitness / pixels);
        }
        double sum = 0.0;
        for (double m : row.mad) sum += m;
        row.ave = sum / runs;
        double ss = 0.0;
        for (double m : row.mad) ss += (m - row.ave) * (m - row.ave);
        row.std = std::sqrt(ss / (runs - 1));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string repeat_csv(const std::vector<RepeatRow>& rows) {
    std::string out = "flow,AVE,STD";
    const std::size_t runs = rows.empty() ? 0 : rows.front().mad.size();
    for (std::size_t r = 0; r < runs; ++r) out += ",run" + std::to_string(r);
    out += "\n";
    for (const auto& row : rows) {
        out += std::string(to_string(row.flow)) + "," + fmt(row.ave) + "," + fmt(row.std);
        for (double m : row.mad) out += "," + fmt(m);
        out += "\n";
    }
    return out;
}

namespace {

PipelineTuning filled(const PipelineTuning& t) {
    PipelineTuning out = PipelineTuning::passthrough();
    for (BlockId b : kPipelineOrder)
        if (t.has(b)) out.set(t.at(b));
    return out;
}

} // namespace

EvaluationReport evaluate_tuning(const SessionConfig& cfg, std::size_t gain_index, const PipelineTuning& auto_tuning) {
    cfg.validate();
    const GainCapture cap = simulate_gain(cfg, gain_index);
    const std::array<std::pair<const char*, PipelineTuning>, 3> columns{{
        {"Not", PipelineTuning::passthrough()},
        {"Hand", hand_proxy_tuning()},
        {"Auto", filled(auto_tuning)},
    }};
    EvaluationReport report;
    for (BlockId block : kPipelineOrder) {
        if (!auto_tuning.has(block)) continue;
        const PlanarImage ref = block_reference(block, cap, auto_tuning, cfg);
        for (const auto& [label, tuning] : columns) {
            const PipelineTaps taps = run_pipeline_until(cap.noisy, tuning, cap.noise, block);
            report.rows.push_back(fitness_report(block, label, taps.block_output(block), ref));
        }
    }
    return report;
}

std::string evaluation_csv(const EvaluationReport& r) {
    std::string out = fitness_csv_header() + "\n";
    for (const auto& row : r.rows) out += to_csv_row(row) + "\n";
    return out;
}

EvaluationReport evaluation_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != fitness_csv_header()) {
        fail(ErrorCode::MalformedHeader, "evaluation CSV header must be " + fitness_csv_header());
    }
    EvaluationReport r;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 5) fail(ErrorCode::InvalidArgument, "evaluation CSV row needs 5 cells: " + line);
        FitnessReport f;
        f.block = parse_block_id(cells[0]);
        f.label = cells[1];
        try {
            f.mad_8bit = std::stod(cells[2]);
            f.ssim = std::stod(cells[3]);
            f.ms_ssim = std::stod(cells[4]);
        } catch (const std::exception&) {
            fail(ErrorCode::InvalidArgument, "evaluation CSV has a non-numeric cell: " + line);
        }
        r.rows.push_back(std::move(f));
    }
    return r;
}

PlanarImage comparison_strip(const SessionConfig& cfg, std::size_t gain_index, const PipelineTuning& auto_tuning, int crop_size) {
    cfg.validate();
    const GainCapture cap = simulate_gain(cfg, gain_index);
    const int w = cap.scene.rgb.width();
    const int h = cap.scene.rgb.height();
    require(crop_size >= 1 && crop_size <= w && crop_size <= h, "crop size must fit the scene");
    const int x0 = (w - crop_size) / 2;
    const int y0 = (h - crop_size) / 2;
    const std::array<PlanarImage, 4> panels{
        *run_pipeline(cap.noisy, PipelineTuning::passthrough(), cap.noise).output,
        *run_pipeline(cap.noisy, hand_proxy_tuning(), cap.noise).output,
        *run_pipeline(cap.noisy, filled(auto_tuning), cap.noise).output,
        cap.scene.rgb,
    };
    PlanarImage strip(4 * crop_size, crop_size, 3, ColorDomain::LinearRGB);
    for (int p = 0; p < 4; ++p)
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < crop_size; ++y)
                for (int x = 0; x < crop_size; ++x) strip.at(c, y, p * crop_size + x) = panels[p].at(c, y0 + y, x0 + x);
    return strip;
}

} // namespace isptune

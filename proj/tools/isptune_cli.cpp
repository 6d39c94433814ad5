// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "CLI11.hpp"

#include "isptune/error.hpp"
#include "isptune/tuner.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace isptune;

namespace {

// Artifacts written by one command, with the seed that produced each.
class Manifest {
public:
    Manifest(std::string command, fs::path out) : command_(std::move(command)), out_(std::move(out)) {}

    void add(const fs::path& path, std::uint64_t seed) {
        artifacts_.push_back({{"path", fs::relative(path, out_).generic_string()}, {"seed", seed}});
    }
    void set(const std::string& key, Json value) { extra_[key] = std::move(value); }

    void write() const {
        Json j;
        j["command"] = command_;
        for (const auto& [k, v] : extra_.items()) j[k] = v;
        j["artifacts"] = artifacts_;
        std::ofstream(out_ / "manifest.json") << j.dump(2) << "\n";
    }

private:
    std::string command_;
    fs::path out_;
    Json artifacts_ = Json::array();
    Json extra_ = Json::object();
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_json(const fs::path& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
    }
}

SessionConfig load_config(const std::string& path) {
    return path.empty() ? SessionConfig::defaults() : load_session_config(path);
}

std::size_t resolve_gain(const SessionConfig& cfg, double gain) {
    return cfg.gain_index(gain > 0.0 ? gain : cfg.experiment_gain);
}

// Accepts a ladder file (tuning of the requested gain) or a bare tuning.
PipelineTuning load_tuning(const fs::path& path, double gain) {
    const Json j = read_json(path);
    if (!j.contains("gains")) return tuning_from_json(j);
    const TuningLadder l = ladder_from_json(j);
    for (const auto& g : l.gains)
        if (g.gain == gain) return g.tuning;
    fail(ErrorCode::InvalidArgument, "ladder has no tuning for gain " + Json(gain).dump());
}

std::string file_label(std::string s) {
    std::ranges::replace(s, '.', '_');
    return s;
}

void cmd_synth(const SessionConfig& cfg, const fs::path& out, const std::vector<double>& flats) {
    fs::create_directories(out);
    Manifest m("synth", out);
    m.set("seed", cfg.seed);
    const Scene scene = session_scene(cfg);
    write_ppm16(out / "scene.ppm", scene.rgb);
    m.add(out / "scene.ppm", cfg.seed);
    write_mask(out / "flat_mask.pgm", scene.flat_mask, scene.rgb.width(), scene.rgb.height());
    m.add(out / "flat_mask.pgm", cfg.seed);
    for (std::size_t k = 0; k < cfg.gains.size(); ++k) {
        const GainCapture cap = simulate_gain(cfg, k);
        const std::uint64_t seed = derive_seed(cfg.seed, 1, k);
        const fs::path dir = out / "burst" / cfg.label_for(k);
        fs::create_directories(dir);
        for (std::size_t f = 0; f < cap.burst.size(); ++f) {
            char name[32];
            std::snprintf(name, sizeof name, "frame_%03zu.pgm", f);
            write_mosaic(dir / name, cap.burst.frames[f]);
            m.add(dir / name, seed);
        }
    }
    for (std::size_t i = 0; i < flats.size(); ++i) {
        const double level = flats[i];
        require(level >= 0.0 && level <= 1.0, "flat level must lie in [0,1]");
        const std::uint64_t seed = derive_seed(cfg.seed, 9, i);
        const PlanarImage flat(scene.rgb.width(), scene.rgb.height(), 3, ColorDomain::LinearRGB, level);
        const Burst b = simulate_capture(flat, cfg.noise, cfg.pattern, cfg.burst_size, seed);
        const fs::path dir = out / "flats" / ("L" + file_label(Json(level).dump()));
        fs::create_directories(dir);
        for (std::size_t f = 0; f < b.size(); ++f) {
            char name[32];
            std::snprintf(name, sizeof name, "frame_%03zu.pgm", f);
            write_mosaic(dir / name, b.frames[f]);
            m.add(dir / name, seed);
        }
    }
    m.write();
}

Burst load_burst(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".pgm") files.push_back(e.path());
    std::ranges::sort(files);
    if (files.empty()) fail(ErrorCode::Io, "no .pgm frames in " + dir.string());
    Burst b;
    for (const auto& f : files) b.frames.push_back(read_mosaic(f));
    b.validate();
    return b;
}

void cmd_calibrate(const std::vector<std::string>& flat_args, const fs::path& out) {
    std::vector<FlatCapture> flats;
    for (const auto& arg : flat_args) {
        const auto eq = arg.find('=');
        if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, "--flat expects LEVEL=DIR, got " + arg);
        double level = 0.0;
        try {
            level = std::stod(arg.substr(0, eq));
        } catch (const std::exception&) {
            fail(ErrorCode::InvalidArgument, "bad flat level in " + arg);
        }
        flats.push_back({load_burst(arg.substr(eq + 1)), level});
    }
    std::vector<std::string> warnings;
    const NoiseModel nm = calibrate_noise_model(flats, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    fs::create_directories(out);
    Manifest m("calibrate", out);
    write_text(out / "noise_model.json", noise_model_to_json(nm).dump(2) + "\n");
    m.add(out / "noise_model.json", 0);
    m.write();
    std::cout << "a=" << nm.a << " b=" << nm.b << "\n";
}

void cmd_make_ref(const SessionConfig& cfg, double gain, const std::string& tuning_path, const fs::path& out) {
    const std::size_t k = resolve_gain(cfg, gain);
    const PipelineTuning upstream = tuning_path.empty() ? hand_proxy_tuning() : load_tuning(tuning_path, cfg.gains[k]);
    const GainCapture cap = simulate_gain(cfg, k);
    fs::create_directories(out);
    Manifest m("make-ref", out);
    m.set("seed", cfg.seed);
    m.set("gain", cap.gain);
    const std::uint64_t seed = derive_seed(cfg.seed, 1, k);
    for (BlockId b : cfg.blocks) {
        const PlanarImage ref = block_reference(b, cap, upstream, cfg);
        const fs::path path = out / ("ref_" + std::string(to_string(b)) + (ref.channels() == 3 ? ".ppm" : ".pgm"));
        if (b == BlockId::BayerNR) {
            write_mosaic(path, BayerMosaic::from_plane(ref, cfg.pattern));
        } else if (b == BlockId::YuvNR) {
            write_ppm16(path, yuv_to_rgb(ref));
        } else {
            write_image(path, ref);
        }
        m.add(path, seed);
    }
    m.write();
}

void cmd_tune(SessionConfig cfg, bool ladder, double gain, const fs::path& out) {
    fs::create_directories(out / "traces");
    Manifest m("tune", out);
    m.set("seed", cfg.seed);
    m.set("regularize", cfg.regularize);
    m.set("regularize_with_global", cfg.regularize_with_global);
    TuningLadder l;
    l.seed = cfg.seed;
    l.regularize = cfg.regularize;
    std::vector<std::size_t> indices;
    if (ladder) {
        l = tune_ladder(cfg);
        for (std::size_t k = 0; k < cfg.gains.size(); ++k) indices.push_back(k);
    } else {
        const std::size_t k = resolve_gain(cfg, gain);
        l.gains.push_back(tune_pipeline(cfg, k));
        indices.push_back(k);
    }
    write_text(out / "ladder.json", ladder_to_json(l).dump(2) + "\n");
    m.add(out / "ladder.json", cfg.seed);
    write_text(out / "ladder.csv", ladder_fitness_csv(l));
    m.add(out / "ladder.csv", cfg.seed);
    for (std::size_t i = 0; i < l.gains.size(); ++i) {
        for (const auto& [block, rec] : l.gains[i].blocks) {
            const fs::path p = out / "traces" / (l.gains[i].label + "_" + std::string(to_string(block)) + ".csv");
            write_text(p, trace_to_csv(rec.optim));
            m.add(p, derive_seed(cfg.seed, 2 + indices[i], static_cast<std::uint64_t>(block_index(block))));
        }
    }
    if (l.gains.size() >= 2) {
        write_text(out / "smoothness.csv", smoothness_csv(transition_smoothness(l)));
        m.add(out / "smoothness.csv", cfg.seed);
    }
    m.write();
}

void cmd_evaluate(const SessionConfig& cfg, const std::string& tuning_path, double gain, int crop, const fs::path& out) {
    const std::size_t k = resolve_gain(cfg, gain);
    const PipelineTuning t = load_tuning(tuning_path, cfg.gains[k]);
    fs::create_directories(out);
    Manifest m("evaluate", out);
    m.set("seed", cfg.seed);
    m.set("gain", cfg.gains[k]);
    const EvaluationReport r = evaluate_tuning(cfg, k, t);
    write_text(out / "evaluation.csv", evaluation_csv(r));
    m.add(out / "evaluation.csv", cfg.seed);
    write_ppm16(out / "crops.ppm", comparison_strip(cfg, k, t, crop));
    m.add(out / "crops.ppm", cfg.seed);
    m.write();
    std::cout << evaluation_csv(r);
}

void cmd_repeat(const SessionConfig& cfg, int runs, const fs::path& out) {
    fs::create_directories(out);
    Manifest m("repeat", out);
    m.set("seed", cfg.seed);
    m.set("runs", runs);
    const auto rows = repeatability_experiment(cfg, runs);
    write_text(out / "repeatability.csv", repeat_csv(rows));
    for (int r = 0; r < runs; ++r) m.add(out / "repeatability.csv", derive_seed(cfg.seed, 7000, static_cast<std::uint64_t>(r)));
    m.write();
    std::cout << repeat_csv(rows);
}

void cmd_smoothness(const fs::path& ladder_path, const fs::path& out) {
    const TuningLadder l = ladder_from_json(read_json(ladder_path));
    fs::create_directories(out);
    Manifest m("smoothness", out);
    m.set("seed", l.seed);
    const SmoothnessTable t = transition_smoothness(l);
    write_text(out / "smoothness.csv", smoothness_csv(t));
    m.add(out / "smoothness.csv", l.seed);
    m.write();
    std::cout << smoothness_csv(t);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Automatic ISP tuning on synthetic scenes"};
    app.require_subcommand(1);

    std::string config;
    std::string out = "out";
    std::uint64_t seed = 0;
    bool seed_given = false;
    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config, "Session config JSON");
        sub->add_option("-o,--out", out, "Output directory");
        sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) {
            seed = s;
            seed_given = true;
        }, "Override the config seed");
    };

    std::vector<double> flat_levels;
    auto* synth = app.add_subcommand("synth", "Write the scene, flat mask and simulated bursts");
    common(synth);
    synth->add_option("--flats", flat_levels, "Also simulate flat-field bursts at these levels")->delimiter(',');

    std::vector<std::string> flat_args;
    auto* calibrate = app.add_subcommand("calibrate", "Fit the noise model from flat-field bursts");
    calibrate->add_option("--flat", flat_args, "LEVEL=DIR of mosaic frames")->required();
    calibrate->add_option("-o,--out", out, "Output directory");

    double gain = 0.0;
    std::string tuning;
    auto* make_ref = app.add_subcommand("make-ref", "Write per-block references at one gain");
    common(make_ref);
    make_ref->add_option("--gain", gain, "Sensor gain (default: experiment_gain)");
    make_ref->add_option("--tuning", tuning, "Upstream tuning or ladder (default: hand proxy)");

    bool ladder = false;
    bool regularize = false;
    bool regularize_global = false;
    auto* tune = app.add_subcommand("tune", "Tune one gain or the whole gain ladder");
    common(tune);
    tune->add_flag("--ladder", ladder, "Tune every configured gain");
    tune->add_option("--gain", gain, "Sensor gain for a single-gain run");
    tune->add_flag("--regularize", regularize, "Warm-start each gain from the one below");
    tune->add_flag("--regularize-with-global", regularize_global, "Regularize but keep a shortened global stage");

    int crop = 48;
    auto* evaluate = app.add_subcommand("evaluate", "Not / Hand / Auto comparison table and crops");
    common(evaluate);
    evaluate->add_option("--tuning", tuning, "Tuning or ladder JSON")->required();
    evaluate->add_option("--gain", gain, "Sensor gain (default: experiment_gain)");
    evaluate->add_option("--crop", crop, "Crop size of the comparison strip");

    int runs = 10;
    auto* repeat = app.add_subcommand("repeat", "BayerNR repeatability over optimization flows");
    common(repeat);
    repeat->add_option("--runs", runs, "Runs per flow");

    std::string ladder_path;
    auto* smooth = app.add_subcommand("smoothness", "Adjacent-gain parameter jumps of a ladder");
    smooth->add_option("--ladder", ladder_path, "Ladder JSON")->required();
    smooth->add_option("-o,--out", out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        auto session = [&] {
            SessionConfig cfg = load_config(config);
            if (seed_given) cfg.seed = seed;
            if (regularize || regularize_global) cfg.regularize = true;
            if (regularize_global) cfg.regularize_with_global = true;
            return cfg;
        };
        if (*synth) cmd_synth(session(), out, flat_levels);
        else if (*calibrate) cmd_calibrate(flat_args, out);
        else if (*make_ref) cmd_make_ref(session(), gain, tuning, out);
        else if (*tune) cmd_tune(session(), ladder, gain, out);
        else if (*evaluate) cmd_evaluate(session(), tuning, gain, crop, out);
        else if (*repeat) cmd_repeat(session(), runs, out);
        else if (*smooth) cmd_smoothness(ladder_path, out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "isptune/error.hpp"
#include "isptune/tuner.hpp"

#include <fstream>

namespace isptune {

namespace {

Json rgb_json(const Rgb& c) { return Json::array({c[0], c[1], c[2]}); }

Rgb rgb_from(const Json& j) {
    require(j.is_array() && j.size() == 3, "colour must be a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json rect_json(const Rect& r) { return Json::array({r.x, r.y, r.width, r.height}); }

Rect rect_from(const Json& j) {
    require(j.is_array() && j.size() == 4, "rect must be [x, y, width, height]");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

std::string_view method_name(LocalMethod m) { return m == LocalMethod::NelderMead ? "NelderMead" : "Subplex"; }

LocalMethod parse_method(const std::string& s) {
    if (s == "NelderMead") return LocalMethod::NelderMead;
    if (s == "Subplex") return LocalMethod::Subplex;
    fail(ErrorCode::InvalidArgument, "unknown local method: " + s);
}

Json optim_json(const OptimConfig& c) {
    Json j;
    j["abc"] = {{"population", c.abc.population}, {"limit", c.abc.limit}, {"max_evals", c.abc.max_evals}};
    j["local"] = {{"method", method_name(c.local.method)},
                  {"init_step", c.local.init_step},
                  {"x_tol", c.local.x_tol},
                  {"f_tol", c.local.f_tol},
                  {"max_evals", c.local.max_evals},
                  {"subspace_min", c.local.subspace_min},
                  {"subspace_max", c.local.subspace_max}};
    j["total_evals"] = c.total_evals;
    j["stage_split"] = c.stage_split;
    return j;
}

OptimConfig optim_from(const Json& j, OptimConfig c) {
    if (j.contains("abc")) {
        const Json& a = j["abc"];
        c.abc.population = a.value("population", c.abc.population);
        c.abc.limit = a.value("limit", c.abc.limit);
        c.abc.max_evals = a.value("max_evals", c.abc.max_evals);
    }
    if (j.contains("local")) {
        const Json& l = j["local"];
        if (l.contains("method")) c.local.method = parse_method(l["method"].get<std::string>());
        c.local.init_step = l.value("init_step", c.local.init_step);
        c.local.x_tol = l.value("x_tol", c.local.x_tol);
        c.local.f_tol = l.value("f_tol", c.local.f_tol);
        c.local.max_evals = l.value("max_evals", c.local.max_evals);
        c.local.subspace_min = l.value("subspace_min", c.local.subspace_min);
        c.local.subspace_max = l.value("subspace_max", c.local.subspace_max);
    }
    c.total_evals = j.value("total_evals", c.total_evals);
    c.stage_split = j.value("stage_split", c.stage_split);
    return c;
}

} // namespace

// =============================================================================
// SessionConfig
// =============================================================================

SessionConfig SessionConfig::defaults() {
    SessionConfig c;
    c.priors[BlockId::BayerNR] = {
        {"sigma_s", 1.0, 3.0},
        {"k_r", 1.5, 6.0},
        {"radius", 2.0, 3.0},
        {"beta", 0.5, 1.0},
    };
    return c;
}

void SessionConfig::validate() const {
    require(!gains.empty(), "at least one gain is required");
    require(gains.front() >= 1.0, "gains must be >= 1");
    for (std::size_t i = 1; i < gains.size(); ++i) require(gains[i] > gains[i - 1], "gains must be strictly increasing");
    require(gain_labels.empty() || gain_labels.size() == gains.size(), "gain_labels must match gains");
    require(burst_size >= 1, "burst_size must be >= 1");
    require(nr_blend >= 0.0 && nr_blend <= 1.0, "nr_blend must lie in [0,1]");
    require(noise.a >= 0.0 && noise.b >= 0.0, "noise coefficients must be non-negative");
    require(!blocks.empty(), "at least one block must be tuned");
    for (std::size_t i = 0; i < blocks.size(); ++i)
        require(blocks[i] == kPipelineOrder[i], "blocks must be a prefix of BayerNR, Demosaic, YuvNR, Sharpen");
    require(regularized_global_fraction > 0.0 && regularized_global_fraction <= 1.0,
            "regularized_global_fraction must lie in (0,1]");
    for (const auto& o : optim) o.validate();
    for (const auto& [block, bounds] : priors) (void)effective_specs(*this, block, true);
}

std::string SessionConfig::label_for(std::size_t gain_index) const {
    if (gain_index < gain_labels.size()) return gain_labels[gain_index];
    return "x" + Json(gains.at(gain_index)).dump();
}

std::size_t SessionConfig::gain_index(double gain) const {
    for (std::size_t i = 0; i < gains.size(); ++i)
        if (gains[i] == gain) return i;
    fail(ErrorCode::InvalidArgument, "gain " + Json(gain).dump() + " is not in the configured gain list");
}

std::vector<ParamSpec> effective_specs(const SessionConfig& cfg, BlockId block, bool with_priors) {
    const auto base = block_param_specs(block);
    std::vector<ParamSpec> specs(base.begin(), base.end());
    if (!with_priors) return specs;
    const auto it = cfg.priors.find(block);
    if (it == cfg.priors.end()) return specs;
    for (const auto& bound : it->second) {
        auto s = std::ranges::find_if(specs, [&](const ParamSpec& p) { return p.name == bound.param; });
        if (s == specs.end()) {
            fail(ErrorCode::InvalidArgument, "prior for unknown parameter " + std::string(to_string(block)) + "." + bound.param);
        }
        *s = s->with_prior(bound.min, bound.max);
    }
    return specs;
}

Json to_json(const SessionConfig& c) {
    Json j;
    j["scene"] = c.scene_path.string();
    j["scene_width"] = c.scene_width;
    j["scene_height"] = c.scene_height;
    j["pattern"] = std::string(to_string(c.pattern));
    j["noise"] = noise_model_to_json(c.noise);
    j["gains"] = c.gains;
    j["gain_labels"] = c.gain_labels;
    j["burst_size"] = c.burst_size;
    j["nr_blend"] = c.nr_blend;
    j["sharpen_ref"] = {{"alpha", c.sharpen_ref.alpha},
                        {"sigma_usm", c.sharpen_ref.sigma_usm},
                        {"usm_size", c.sharpen_ref.usm_size},
                        {"sigma_ndir", c.sharpen_ref.sigma_ndir},
                        {"box_size", c.sharpen_ref.box_size},
                        {"flat_percentile", c.sharpen_ref.flat_percentile}};
    Json blocks = Json::array();
    for (BlockId b : c.blocks) blocks.push_back(std::string(to_string(b)));
    j["blocks"] = blocks;
    Json optim;
    for (BlockId b : kPipelineOrder) optim[std::string(to_string(b))] = optim_json(c.optim_for(b));
    j["optim"] = optim;
    j["regularize"] = c.regularize;
    j["regularize_with_global"] = c.regularize_with_global;
    j["regularized_global_fraction"] = c.regularized_global_fraction;
    Json priors = Json::object();
    for (BlockId b : kPipelineOrder) {
        const auto it = c.priors.find(b);
        if (it == c.priors.end()) continue;
        Json bj;
        for (const auto& p : it->second) bj[p.param] = Json::array({p.min, p.max});
        priors[std::string(to_string(b))] = bj;
    }
    j["priors"] = priors;
    j["use_priors"] = c.use_priors;
    j["experiment_gain"] = c.experiment_gain;
    j["out_dir"] = c.out_dir.string();
    j["seed"] = c.seed;
    return j;
}

SessionConfig session_config_from_json(const Json& j) {
    SessionConfig c = SessionConfig::defaults();
    try {
        c.scene_path = j.value("scene", std::string());
        c.scene_width = j.value("scene_width", c.scene_width);
        c.scene_height = j.value("scene_height", c.scene_height);
        if (j.contains("pattern")) c.pattern = parse_cfa_pattern(j["pattern"].get<std::string>());
        if (j.contains("noise")) c.noise = noise_model_from_json(j["noise"]);
        if (j.contains("gains")) c.gains = j["gains"].get<std::vector<double>>();
        if (j.contains("gain_labels")) {
            c.gain_labels = j["gain_labels"].get<std::vector<std::string>>();
        } else if (j.contains("gains")) {
            c.gain_labels.clear();
        }
        c.burst_size = j.value("burst_size", c.burst_size);
        c.nr_blend = j.value("nr_blend", c.nr_blend);
        if (j.contains("sharpen_ref")) {
            const Json& s = j["sharpen_ref"];
            c.sharpen_ref.alpha = s.value("alpha", c.sharpen_ref.alpha);
            c.sharpen_ref.sigma_usm = s.value("sigma_usm", c.sharpen_ref.sigma_usm);
            c.sharpen_ref.usm_size = s.value("usm_size", c.sharpen_ref.usm_size);
            c.sharpen_ref.sigma_ndir = s.value("sigma_ndir", c.sharpen_ref.sigma_ndir);
            c.sharpen_ref.box_size = s.value("box_size", c.sharpen_ref.box_size);
            c.sharpen_ref.flat_percentile = s.value("flat_percentile", c.sharpen_ref.flat_percentile);
        }
        if (j.contains("blocks")) {
            c.blocks.clear();
            for (const auto& b : j["blocks"]) c.blocks.push_back(parse_block_id(b.get<std::string>()));
        }
        if (j.contains("optim")) {
            const Json& o = j["optim"];
            if (o.contains("all")) {
                for (auto& oc : c.optim) oc = optim_from(o["all"], oc);
            }
            for (BlockId b : kPipelineOrder) {
                const std::string name(to_string(b));
                if (o.contains(name)) c.optim_for(b) = optim_from(o[name], c.optim_for(b));
            }
        }
        c.regularize = j.value("regularize", c.regularize);
        c.regularize_with_global = j.value("regularize_with_global", c.regularize_with_global);
        c.regularized_global_fraction = j.value("regularized_global_fraction", c.regularized_global_fraction);
        if (j.contains("priors")) {
            c.priors.clear();
            for (const auto& [name, bounds] : j["priors"].items()) {
                std::vector<PriorBound> list;
                for (const auto& [param, range] : bounds.items()) {
                    require(range.is_array() && range.size() == 2, "prior bounds must be [min, max]");
                    list.push_back({param, range[0].get<double>(), range[1].get<double>()});
                }
                c.priors[parse_block_id(name)] = std::move(list);
            }
        }
        c.use_priors = j.value("use_priors", c.use_priors);
        c.experiment_gain = j.value("experiment_gain", c.experiment_gain);
        c.out_dir = j.value("out_dir", c.out_dir.string());
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("bad session config: ") + e.what());
    }
    c.validate();
    return c;
}

SessionConfig load_session_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::Io, "cannot open config " + path.string());
    }
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, "config " + path.string() + " is not valid JSON: " + e.what());
    }
    SessionConfig c = session_config_from_json(j);
    if (!c.scene_path.empty() && c.scene_path.is_relative()) {
        c.scene_path = path.parent_path() / c.scene_path;
    }
    return c;
}

// =============================================================================
// Scene spec / noise model
// =============================================================================

Json scene_spec_to_json(const SceneSpec& s) {
    Json j;
    j["width"] = s.width;
    j["height"] = s.height;
    j["background"] = rgb_json(s.background);
    Json elements = Json::array();
    for (const auto& el : s.elements) {
        Json e;
        if (const auto* f = std::get_if<FlatElement>(&el)) {
            e = {{"type", "flat"}, {"rect", rect_json(f->rect)}, {"color", rgb_json(f->color)}, {"margin", f->margin}};
        } else if (const auto* d = std::get_if<EdgeElement>(&el)) {
            e = {{"type", "edge"},
                 {"rect", rect_json(d->rect)},
                 {"angle_deg", d->angle_deg},
                 {"color_a", rgb_json(d->color_a)},
                 {"color_b", rgb_json(d->color_b)}};
        } else if (const auto* z = std::get_if<ZonePlateElement>(&el)) {
            e = {{"type", "zone_plate"},
                 {"rect", rect_json(z->rect)},
                 {"max_frequency", z->max_frequency},
                 {"mean", z->mean},
                 {"amplitude", z->amplitude}};
        } else if (const auto* p = std::get_if<PatchGridElement>(&el)) {
            Json colors = Json::array();
            for (const auto& c : p->colors) colors.push_back(rgb_json(c));
            e = {{"type", "patches"}, {"rect", rect_json(p->rect)}, {"rows", p->rows}, {"cols", p->cols}, {"colors", colors}};
        } else if (const auto* t = std::get_if<TextureElement>(&el)) {
            e = {{"type", "texture"},
                 {"rect", rect_json(t->rect)},
                 {"mean", t->mean},
                 {"amplitude", t->amplitude},
                 {"cell", t->cell}};
        }
        elements.push_back(e);
    }
    j["elements"] = elements;
    return j;
}

SceneSpec scene_spec_from_json(const Json& j) {
    SceneSpec s;
    try {
        s.width = j.at("width").get<int>();
        s.height = j.at("height").get<int>();
        if (j.contains("background")) s.background = rgb_from(j["background"]);
        for (const auto& e : j.value("elements", Json::array())) {
            const std::string type = e.at("type").get<std::string>();
            const Rect rect = rect_from(e.at("rect"));
            if (type == "flat") {
                FlatElement f;
                f.rect = rect;
                if (e.contains("color")) f.color = rgb_from(e["color"]);
                f.margin = e.value("margin", 0);
                s.elements.emplace_back(f);
            } else if (type == "edge") {
                EdgeElement d;
                d.rect = rect;
                d.angle_deg = e.value("angle_deg", d.angle_deg);
                if (e.contains("color_a")) d.color_a = rgb_from(e["color_a"]);
                if (e.contains("color_b")) d.color_b = rgb_from(e["color_b"]);
                s.elements.emplace_back(d);
            } else if (type == "zone_plate") {
                ZonePlateElement z;
                z.rect = rect;
                z.max_frequency = e.value("max_frequency", z.max_frequency);
                z.mean = e.value("mean", z.mean);
                z.amplitude = e.value("amplitude", z.amplitude);
                s.elements.emplace_back(z);
            } else if (type == "patches") {
                PatchGridElement p;
                p.rect = rect;
                p.rows = e.value("rows", p.rows);
                p.cols = e.value("cols", p.cols);
                for (const auto& c : e.at("colors")) p.colors.push_back(rgb_from(c));
                s.elements.emplace_back(p);
            } else if (type == "texture") {
                TextureElement t;
                t.rect = rect;
                t.mean = e.value("mean", t.mean);
                t.amplitude = e.value("amplitude", t.amplitude);
                t.cell = e.value("cell", t.cell);
                s.elements.emplace_back(t);
            } else {
                fail(ErrorCode::InvalidArgument, "unknown scene element type: " + type);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("bad scene spec: ") + e.what());
    }
    return s;
}

Json noise_model_to_json(const NoiseModel& nm) { return {{"a", nm.a}, {"b", nm.b}, {"gain", nm.gain}}; }

NoiseModel noise_model_from_json(const Json& j) {
    NoiseModel nm;
    nm.a = j.value("a", 0.0);
    nm.b = j.value("b", 0.0);
    nm.gain = j.value("gain", 1.0);
    require(nm.a >= 0.0 && nm.b >= 0.0 && nm.gain >= 1.0, "noise model needs a, b >= 0 and gain >= 1");
    return nm;
}

// =============================================================================
// Tunings and ladders
// =============================================================================

Json tuning_to_json(const PipelineTuning& t) {
    Json j = Json::object();
    for (BlockId b : kPipelineOrder) {
        if (!t.has(b)) continue;
        const BlockParams& p = t.at(b);
        const auto specs = block_param_specs(b);
        Json bj;
        for (std::size_t i = 0; i < specs.size(); ++i) bj[specs[i].name] = p.values()[i];
        j[std::string(to_string(b))] = bj;
    }
    return j;
}

PipelineTuning tuning_from_json(const Json& j) {
    PipelineTuning t;
    try {
        for (const auto& [name, params] : j.items()) {
            const BlockId b = parse_block_id(name);
            const auto specs = block_param_specs(b);
            std::vector<double> values;
            for (const auto& s : specs) {
                if (!params.contains(s.name)) {
                    fail(ErrorCode::InvalidArgument, "tuning for " + name + " lacks parameter " + s.name);
                }
                values.push_back(params[s.name].get<double>());
            }
            require(params.size() == specs.size(), "tuning for " + name + " has unknown parameters");
            t.set(BlockParams(b, std::move(values)));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("bad tuning JSON: ") + e.what());
    }
    return t;
}

PipelineTuning hand_proxy_tuning() {
    PipelineTuning t;
    t.set(BlockParams(BlockId::BayerNR, {1.5, 3.0, 2.0, 0.8}));
    t.set(BlockParams(BlockId::Demosaic, {0.05, 1.0, 0.5, 0.3}));
    t.set(BlockParams(BlockId::YuvNR, {0.03, 0.1, 1.5, 0.7}));
    t.set(BlockParams(BlockId::Sharpen, {1.5, 0.01, 1.0, 0.05}));
    return t;
}

Json ladder_to_json(const TuningLadder& l) {
    Json j;
    j["seed"] = l.seed;
    j["regularize"] = l.regularize;
    Json gains = Json::array();
    for (const auto& g : l.gains) {
        Json gj;
        gj["gain"] = g.gain;
        gj["label"] = g.label;
        gj["tuning"] = tuning_to_json(g.tuning);
        Json fit = Json::object();
        Json evals = Json::object();
        for (const auto& [block, rec] : g.blocks) {
            fit[std::string(to_string(block))] = rec.fitness;
            evals[std::string(to_string(block))] = rec.evals;
        }
        gj["fitness"] = fit;
        gj["evals"] = evals;
        gains.push_back(gj);
    }
    j["gains"] = gains;
    return j;
}

TuningLadder ladder_from_json(const Json& j) {
    TuningLadder l;
    try {
        l.seed = j.at("seed").get<std::uint64_t>();
        l.regularize = j.at("regularize").get<bool>();
        for (const auto& gj : j.at("gains")) {
            GainTuning g;
            g.gain = gj.at("gain").get<double>();
            g.label = gj.at("label").get<std::string>();
            g.tuning = tuning_from_json(gj.at("tuning"));
            for (const auto& [name, v] : gj.at("fitness").items()) g.blocks[parse_block_id(name)].fitness = v.get<double>();
            for (const auto& [name, v] : gj.at("evals").items()) g.blocks[parse_block_id(name)].evals = v.get<long>();
            l.gains.push_back(std::move(g));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("bad ladder JSON: ") + e.what());
    }
    return l;
}

} // namespace isptune

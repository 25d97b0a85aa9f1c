#include "posedec/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "posedec/error.hpp"

namespace posedec {

namespace {

using nlohmann::json;

void check_keys(const json& section, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
    for (const auto& [key, value] : section.items()) {
        (void)value;
        bool known = false;
        for (auto a : allowed) known |= key == a;
        if (!known) fail_validation("unknown config key: " + where + "." + key);
    }
}

void parse_skeleton(const json& j, SkeletonConfig& cfg) {
    check_keys(j,
               {"keypoint_count", "sticks", "oks_k", "sigma", "center_radius", "mask_bg_weight",
                "center_metric"},
               "skeleton");
    if (j.contains("keypoint_count")) cfg.keypoint_count = j["keypoint_count"].get<int>();
    if (j.contains("sticks")) {
        cfg.sticks.clear();
        for (const auto& stick : j["sticks"]) {
            if (!stick.is_array() || stick.size() != 2)
                fail_validation("skeleton.sticks entries must be [i, j] pairs");
            cfg.sticks.emplace_back(stick[0].get<int>(), stick[1].get<int>());
        }
    }
    if (j.contains("oks_k")) cfg.oks_k = j["oks_k"].get<std::vector<double>>();
    if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
    if (j.contains("center_radius")) cfg.center_radius = j["center_radius"].get<int>();
    if (j.contains("mask_bg_weight")) cfg.mask_bg_weight = j["mask_bg_weight"].get<double>();
    if (j.contains("center_metric")) {
        const auto metric = j["center_metric"].get<std::string>();
        if (metric == "chebyshev")
            cfg.center_metric = RadiusMetric::chebyshev;
        else if (metric == "euclidean")
            cfg.center_metric = RadiusMetric::euclidean;
        else
            fail_validation("skeleton.center_metric must be chebyshev or euclidean");
    }

    if (cfg.keypoint_count <= 0) fail_validation("skeleton.keypoint_count must be positive");
    if (cfg.sigma <= 0.0) fail_validation("skeleton.sigma must be positive");
    if (cfg.center_radius < 0) fail_validation("skeleton.center_radius must be non-negative");
    if (cfg.oks_k.size() != static_cast<std::size_t>(cfg.keypoint_count))
        fail_validation("skeleton.oks_k must have keypoint_count entries");
    for (double k : cfg.oks_k)
        if (k <= 0.0) fail_validation("skeleton.oks_k entries must be positive");
    for (const auto& [a, b] : cfg.sticks)
        if (a < 0 || b < 0 || a >= cfg.keypoint_count || b >= cfg.keypoint_count)
            fail_validation("skeleton.sticks indices out of range");
}

void parse_decode(const json& j, DecodeConfig& cfg) {
    check_keys(j,
               {"max_candidates", "heat_threshold", "max_cues", "output_stride",
                "absorb_radius_input", "absorb_radius", "nms_window", "refine"},
               "decode");
    if (j.contains("max_candidates")) cfg.max_candidates = j["max_candidates"].get<int>();
    if (j.contains("heat_threshold")) cfg.heat_threshold = j["heat_threshold"].get<double>();
    if (j.contains("max_cues")) cfg.max_cues = j["max_cues"].get<int>();
    if (j.contains("output_stride")) cfg.output_stride = j["output_stride"].get<double>();
    if (j.contains("nms_window")) cfg.nms_window = j["nms_window"].get<int>();
    if (j.contains("refine")) cfg.refine = j["refine"].get<bool>();

    // The paper-facing radius is in input-image pixels; the decoder works at
    // map resolution. An explicit map-space absorb_radius wins.
    if (j.contains("absorb_radius_input"))
        cfg.absorb_radius = j["absorb_radius_input"].get<double>() / cfg.output_stride;
    if (j.contains("absorb_radius")) cfg.absorb_radius = j["absorb_radius"].get<double>();

    if (cfg.max_candidates <= 0 || cfg.max_cues <= 0)
        fail_validation("decode candidate and cue limits must be positive");
    if (cfg.heat_threshold <= 0.0) fail_validation("decode.heat_threshold must be positive");
    if (cfg.output_stride <= 0.0) fail_validation("decode.output_stride must be positive");
    if (cfg.absorb_radius <= 0.0) fail_validation("decode.absorb_radius must be positive");
    if (cfg.nms_window < 3 || cfg.nms_window % 2 == 0)
        fail_validation("decode.nms_window must be odd and at least 3");
}

void parse_loss(const json& j, LossConfig& cfg) {
    check_keys(j, {"lambda", "smooth_l1_beta", "normalize"}, "loss");
    if (j.contains("lambda")) cfg.lambda = j["lambda"].get<double>();
    if (j.contains("smooth_l1_beta")) cfg.smooth_l1_beta = j["smooth_l1_beta"].get<double>();
    if (j.contains("normalize")) cfg.normalize = j["normalize"].get<bool>();
    if (cfg.lambda <= 0.0) fail_validation("loss.lambda must be positive");
    if (cfg.smooth_l1_beta <= 0.0) fail_validation("loss.smooth_l1_beta must be positive");
}

void parse_range(const json& j, const std::string& where, double& lo, double& hi) {
    if (!j.is_array() || j.size() != 2) fail_validation(where + " must be [lo, hi]");
    lo = j[0].get<double>();
    hi = j[1].get<double>();
    if (hi < lo) fail_validation(where + " range is empty");
}

void parse_synth(const json& j, SceneSpec& spec) {
    check_keys(j,
               {"map_h", "map_w", "n_persons", "scale_range", "rotation_range",
                "translation_range", "noise_sigma", "offset_noise_sigma", "min_center_dist",
                "seed"},
               "synth");
    if (j.contains("map_h")) spec.map_h = j["map_h"].get<int>();
    if (j.contains("map_w")) spec.map_w = j["map_w"].get<int>();
    if (j.contains("n_persons")) {
        const auto& n = j["n_persons"];
        if (n.is_number_integer()) {
            spec.n_persons_min = spec.n_persons_max = n.get<int>();
        } else if (n.is_array() && n.size() == 2) {
            spec.n_persons_min = n[0].get<int>();
            spec.n_persons_max = n[1].get<int>();
        } else {
            fail_validation("synth.n_persons must be an integer or [lo, hi]");
        }
    }
    if (j.contains("scale_range"))
        parse_range(j["scale_range"], "synth.scale_range", spec.scale_min, spec.scale_max);
    if (j.contains("rotation_range"))
        parse_range(j["rotation_range"], "synth.rotation_range", spec.rot_min_deg,
                    spec.rot_max_deg);
    if (j.contains("translation_range"))
        parse_range(j["translation_range"], "synth.translation_range", spec.trans_min,
                    spec.trans_max);
    if (j.contains("noise_sigma")) spec.noise_sigma = j["noise_sigma"].get<double>();
    if (j.contains("offset_noise_sigma"))
        spec.offset_noise_sigma = j["offset_noise_sigma"].get<double>();
    if (j.contains("min_center_dist")) spec.min_center_dist = j["min_center_dist"].get<double>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();

    if (spec.map_h < 32 || spec.map_w < 32) fail_validation("synth maps must be at least 32 x 32");
    if (spec.n_persons_min < 1 || spec.n_persons_max < spec.n_persons_min)
        fail_validation("synth.n_persons range is empty");
    if (spec.noise_sigma < 0.0 || spec.offset_noise_sigma < 0.0 || spec.min_center_dist < 0.0)
        fail_validation("synth noise and separation parameters must be non-negative");
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        fail_format(std::string("config JSON parse error: ") + e.what());
    }
    if (!doc.is_object()) fail_format("config must be a JSON object");
    check_keys(doc, {"skeleton", "decode", "loss", "synth"}, "config");

    RunConfig cfg;
    if (doc.contains("skeleton")) parse_skeleton(doc["skeleton"], cfg.skeleton);
    if (doc.contains("decode")) parse_decode(doc["decode"], cfg.decode);
    if (doc.contains("loss")) parse_loss(doc["loss"], cfg.loss);
    if (doc.contains("synth")) parse_synth(doc["synth"], cfg.synth);
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open config file: " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str());
}

RunConfig resolve_run_config(const std::string& explicit_path) {
    if (!explicit_path.empty()) return load_run_config(explicit_path);
    if (const char* env = std::getenv("POSEDEC_CONFIG"); env != nullptr && *env != '\0')
        return load_run_config(env);
    return RunConfig{};
}

std::string dump_run_config(const RunConfig& cfg) {
    json sticks = json::array();
    for (const auto& [a, b] : cfg.skeleton.sticks) sticks.push_back({a, b});

    json doc;
    doc["skeleton"] = {
        {"keypoint_count", cfg.skeleton.keypoint_count},
        {"sticks", std::move(sticks)},
        {"oks_k", cfg.skeleton.oks_k},
        {"sigma", cfg.skeleton.sigma},
        {"center_radius", cfg.skeleton.center_radius},
        {"mask_bg_weight", cfg.skeleton.mask_bg_weight},
        {"center_metric",
         cfg.skeleton.center_metric == RadiusMetric::chebyshev ? "chebyshev" : "euclidean"},
    };
    doc["decode"] = {
        {"max_candidates", cfg.decode.max_candidates},
        {"heat_threshold", cfg.decode.heat_threshold},
        {"max_cues", cfg.decode.max_cues},
        {"output_stride", cfg.decode.output_stride},
        {"absorb_radius", cfg.decode.absorb_radius},
        {"nms_window", cfg.decode.nms_window},
        {"refine", cfg.decode.refine},
    };
    doc["loss"] = {
        {"lambda", cfg.loss.lambda},
        {"smooth_l1_beta", cfg.loss.smooth_l1_beta},
        {"normalize", cfg.loss.normalize},
    };
    doc["synth"] = {
        {"map_h", cfg.synth.map_h},
        {"map_w", cfg.synth.map_w},
        {"n_persons", {cfg.synth.n_persons_min, cfg.synth.n_persons_max}},
        {"scale_range", {cfg.synth.scale_min, cfg.synth.scale_max}},
        {"rotation_range", {cfg.synth.rot_min_deg, cfg.synth.rot_max_deg}},
        {"translation_range", {cfg.synth.trans_min, cfg.synth.trans_max}},
        {"noise_sigma", cfg.synth.noise_sigma},
        {"offset_noise_sigma", cfg.synth.offset_noise_sigma},
        {"min_center_dist", cfg.synth.min_center_dist},
        {"seed", cfg.synth.seed},
    };
    return doc.dump(2) + "\n";
}

}  // namespace posedec

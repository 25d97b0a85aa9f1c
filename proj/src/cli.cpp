#include "posedec/cli.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "posedec/config.hpp"
#include "posedec/decoder.hpp"
#include "posedec/error.hpp"
#include "posedec/gradcheck.hpp"
#include "posedec/rng.hpp"
#include "posedec/scoring.hpp"
#include "posedec/synth.hpp"
#include "posedec/targets.hpp"
#include "posedec/tensor.hpp"

namespace posedec::cli {

namespace {

using nlohmann::json;

// Runs fn(0..n-1) on up to `jobs` workers. Work items must be independent;
// the first exception wins and is rethrown after all workers join.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& worker : pool) worker.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::string scene_dir_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%04zu", index);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail_io("cannot open file for writing: " + path.string());
    out << text;
    if (!out) fail_io("failed to write file: " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open file: " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        fail_format("JSON parse error in " + path.string() + ": " + e.what());
    }
    return doc;
}

// COCO-style results array. Keypoint coordinates are written at input-image
// scale; the per-keypoint third slot carries the heatvalue. center_score is
// an extra key so poses can be re-scored later from the file alone.
json results_to_json(const std::vector<DecodedPose>& poses, double stride, int image_id) {
    json arr = json::array();
    for (const auto& pose : poses) {
        json kps = json::array();
        for (std::size_t k = 0; k < pose.keypoints.size(); ++k) {
            kps.push_back(pose.keypoints[k].x * stride);
            kps.push_back(pose.keypoints[k].y * stride);
            kps.push_back(pose.kp_heatvalues[k]);
        }
        arr.push_back({{"image_id", image_id},
                       {"category_id", 1},
                       {"keypoints", std::move(kps)},
                       {"score", pose.score},
                       {"center_score", pose.center_heatvalue}});
    }
    return arr;
}

std::vector<DecodedPose> results_from_json(const json& arr, int keypoint_count, double stride) {
    if (!arr.is_array()) fail_format("results JSON must be an array");
    std::vector<DecodedPose> poses;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& item = arr[i];
        if (!item.contains("keypoints") ||
            item["keypoints"].size() != static_cast<std::size_t>(3 * keypoint_count))
            fail_format("results entry " + std::to_string(i) + " has a malformed keypoints array");
        DecodedPose pose;
        pose.keypoints.resize(keypoint_count);
        pose.kp_heatvalues.resize(keypoint_count);
        pose.absorbed.assign(keypoint_count, false);
        const auto& kps = item["keypoints"];
        for (int k = 0; k < keypoint_count; ++k) {
            pose.keypoints[k].x = kps[3 * k].get<double>() / stride;
            pose.keypoints[k].y = kps[3 * k + 1].get<double>() / stride;
            pose.kp_heatvalues[k] = kps[3 * k + 2].get<double>();
        }
        if (!item.contains("center_score"))
            fail_format("results entry " + std::to_string(i) +
                        " lacks center_score; decode output is required here");
        pose.center_heatvalue = item["center_score"].get<double>();
        if (item.contains("score")) pose.score = item["score"].get<double>();
        poses.push_back(std::move(pose));
    }
    return poses;
}

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;
};

RunConfig config_for(const GlobalOpts& opts) {
    RunConfig cfg = resolve_run_config(opts.config_path);
    if (opts.seed_set) cfg.synth.seed = opts.seed;
    return cfg;
}

int cmd_config(const GlobalOpts& opts, bool dump, const std::string& out_path) {
    const RunConfig cfg = config_for(opts);
    if (!dump && out_path.empty())
        fail_validation("config: nothing to do; pass --dump or --out");
    const std::string text = dump_run_config(cfg);
    if (!out_path.empty())
        write_text(out_path, text);
    else
        std::cout << text;
    return 0;
}

int cmd_synth(const GlobalOpts& opts, int scenes, const std::string& out_dir,
              double noise_sigma, bool noise_set, double offset_noise, bool offset_set,
              const std::string& template_path) {
    if (scenes < 1) fail_validation("synth: --scenes must be at least 1");
    if (out_dir.empty()) fail_validation("synth: --out directory is required");
    RunConfig cfg = config_for(opts);
    if (noise_set) cfg.synth.noise_sigma = noise_sigma;
    if (offset_set) cfg.synth.offset_noise_sigma = offset_noise;

    std::vector<Point> template_kps = template_keypoints();
    if (!template_path.empty()) {
        const json doc = read_json_file(template_path);
        if (!doc.is_array() || doc.size() != static_cast<std::size_t>(cfg.skeleton.keypoint_count))
            fail_format("template file must be an array of keypoint_count [x, y] pairs");
        template_kps.clear();
        for (const auto& p : doc) template_kps.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }

    std::filesystem::create_directories(out_dir);
    parallel_for(static_cast<std::size_t>(scenes), opts.jobs, [&](std::size_t i) {
        SceneSpec spec = cfg.synth;
        spec.seed = derive_seed(cfg.synth.seed, i);
        const Scene scene = sample_scene(spec, cfg.skeleton, template_kps);

        const auto dir = std::filesystem::path(out_dir) / scene_dir_name(i);
        std::filesystem::create_directories(dir);
        write_tensor(scene.maps.kp_heatmaps, dir / "heatmaps.pdt");
        write_tensor(scene.maps.center_heatmap, dir / "center.pdt");
        write_tensor(scene.maps.offset_maps, dir / "offsets.pdt");
        write_text(dir / "poses.json", poses_to_json(scene.poses));
    });
    return 0;
}

int cmd_gen_targets(const GlobalOpts& opts, const std::string& poses_path, int height, int width,
                    const std::string& out_dir) {
    if (poses_path.empty()) fail_validation("gen-targets: --poses is required");
    if (out_dir.empty()) fail_validation("gen-targets: --out directory is required");
    const RunConfig cfg = config_for(opts);

    const auto poses = load_poses(poses_path, cfg.skeleton.keypoint_count);
    const TargetSet targets = build_targets(poses, cfg.skeleton, height, width);

    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    write_tensor(targets.kp_heatmaps, dir / "heatmaps.pdt");
    write_tensor(targets.center_heatmap, dir / "center.pdt");
    write_tensor(targets.offset_maps, dir / "offsets.pdt");
    write_tensor(targets.loss_mask, dir / "mask.pdt");
    write_tensor(targets.offset_valid, dir / "offset_valid.pdt");
    write_tensor(targets.instance_size, dir / "instance_size.pdt");
    return 0;
}

int cmd_decode(const GlobalOpts& opts, const std::string& heatmaps_path,
               const std::string& center_path, const std::string& offsets_path,
               const std::string& out_path, const std::string& net_path, int image_id) {
    const RunConfig cfg = config_for(opts);
    const Tensor heatmaps = read_tensor(heatmaps_path);
    const Tensor center = read_tensor(center_path);
    const Tensor offsets = read_tensor(offsets_path);

    auto poses = decode(heatmaps, center, offsets, cfg.decode);
    if (!net_path.empty()) {
        const ScoreNet net = ScoreNet::load(net_path);
        poses = rank_poses(std::move(poses), cfg.skeleton, &net);
    } else {
        poses = rank_poses(std::move(poses), cfg.skeleton, nullptr);
    }

    const json out = results_to_json(poses, cfg.decode.output_stride, image_id);
    write_text(out_path, out.dump(2) + "\n");
    return 0;
}

int cmd_score(const GlobalOpts& opts, int train_scenes, const std::string& save_net,
              const std::string& in_path, const std::string& net_path,
              const std::string& out_path, int epochs, double learning_rate, int batch_size) {
    const RunConfig cfg = config_for(opts);

    if (train_scenes > 0) {
        const auto dataset = make_score_dataset(cfg.synth, cfg.skeleton, cfg.decode, train_scenes);
        TrainHyper hyper;
        hyper.epochs = epochs;
        hyper.learning_rate = learning_rate;
        hyper.batch_size = batch_size;
        hyper.seed = cfg.synth.seed;
        const TrainResult result = scorenet_train(dataset, {64, 64}, hyper);
        std::cout << "trained on " << dataset.size() << " poses, final mse " << result.final_loss
                  << "\n";
        if (!save_net.empty()) result.net.save(save_net);
        return 0;
    }

    if (in_path.empty()) fail_validation("score: pass --train-scenes or --in results.json");
    if (out_path.empty()) fail_validation("score: --out is required when rescoring");
    auto poses = results_from_json(read_json_file(in_path), cfg.skeleton.keypoint_count,
                                   cfg.decode.output_stride);
    if (!net_path.empty()) {
        const ScoreNet net = ScoreNet::load(net_path);
        poses = rank_poses(std::move(poses), cfg.skeleton, &net);
    } else {
        poses = rank_poses(std::move(poses), cfg.skeleton, nullptr);
    }
    write_text(out_path, results_to_json(poses, cfg.decode.output_stride, 0).dump(2) + "\n");
    return 0;
}

int cmd_eval_oks(const GlobalOpts& opts, const std::string& results_path,
                 const std::string& gt_path, const std::string& out_path) {
    const RunConfig cfg = config_for(opts);
    const auto gts = load_poses(gt_path, cfg.skeleton.keypoint_count);
    const auto decoded = results_from_json(read_json_file(results_path),
                                           cfg.skeleton.keypoint_count, cfg.decode.output_stride);

    std::vector<std::vector<Point>> preds;
    preds.reserve(decoded.size());
    for (const auto& pose : decoded) preds.push_back(pose.keypoints);
    const OksEvaluation eval = evaluate_poses(preds, gts, cfg.skeleton);

    json per_pose = json::array();
    char line[96];
    for (std::size_t g = 0; g < eval.per_gt.size(); ++g) {
        int pred_index = -1;
        for (const auto& match : eval.matches)
            if (match.gt_index == static_cast<int>(g)) pred_index = match.pred_index;
        per_pose.push_back({{"gt_index", g}, {"pred_index", pred_index}, {"oks", eval.per_gt[g]}});
        std::snprintf(line, sizeof line, "pose %3zu  pred %3d  oks %.6f", g, pred_index,
                      eval.per_gt[g]);
        std::cout << line << "\n";
    }
    std::snprintf(line, sizeof line, "mean_oks %.6f", eval.mean_oks);
    std::cout << line << "\n";

    if (!out_path.empty()) {
        const json doc = {{"per_pose", std::move(per_pose)}, {"mean_oks", eval.mean_oks}};
        write_text(out_path, doc.dump(2) + "\n");
    }
    return 0;
}

int cmd_gradcheck(const GlobalOpts& opts) {
    const std::uint64_t seed = opts.seed_set ? opts.seed : 12345;
    const auto suites = gradcheck::run_all(seed);
    int passed = 0;
    char line[96];
    for (const auto& suite : suites) {
        std::snprintf(line, sizeof line, "%s %-14s max_rel_err %.3e",
                      suite.pass ? "ok  " : "FAIL", suite.name.c_str(), suite.max_rel_err);
        std::cout << line << "\n";
        passed += suite.pass ? 1 : 0;
    }
    std::snprintf(line, sizeof line, "%s %d/%zu suites",
                  passed == static_cast<int>(suites.size()) ? "PASS" : "FAIL", passed,
                  suites.size());
    std::cout << line << "\n";
    return passed == static_cast<int>(suites.size()) ? 0 : 1;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"bottom-up pose decoding toolkit"};
    app.require_subcommand(1);

    GlobalOpts opts;
    app.add_option("--config", opts.config_path, "run config JSON (env POSEDEC_CONFIG as fallback)");
    auto* seed_opt = app.add_option("--seed", opts.seed, "seed override");
    app.add_option("--jobs", opts.jobs, "worker cap for scene-parallel commands")
        ->check(CLI::PositiveNumber);

    // config
    bool dump = false;
    std::string config_out;
    auto* config_cmd = app.add_subcommand("config", "print or write the resolved configuration");
    config_cmd->add_flag("--dump", dump, "print the full configuration");
    config_cmd->add_option("--out", config_out, "write the configuration to a file");

    // synth
    int scenes = 1;
    std::string synth_out, template_path;
    double noise_sigma = 0.0, offset_noise = 0.0;
    auto* synth_cmd = app.add_subcommand("synth", "generate synthetic scenes");
    synth_cmd->add_option("--scenes", scenes, "number of scenes");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    auto* noise_opt = synth_cmd->add_option("--noise-sigma", noise_sigma, "heat map noise override");
    auto* offset_opt =
        synth_cmd->add_option("--offset-noise-sigma", offset_noise, "offset noise override");
    synth_cmd->add_option("--template", template_path, "template keypoints JSON override");

    // gen-targets
    std::string poses_path, targets_out;
    int height = 128, width = 128;
    auto* targets_cmd = app.add_subcommand("gen-targets", "build groundtruth maps from pose JSON");
    targets_cmd->add_option("--poses", poses_path, "pose annotation JSON")->required();
    targets_cmd->add_option("--height", height, "map height")->required();
    targets_cmd->add_option("--width", width, "map width")->required();
    targets_cmd->add_option("--out", targets_out, "output directory")->required();

    // decode
    std::string heatmaps_path, center_path, offsets_path, decode_out, decode_net;
    int image_id = 0;
    auto* decode_cmd = app.add_subcommand("decode", "decode poses from map tensors");
    decode_cmd->add_option("--heatmaps", heatmaps_path, "keypoint heatmap tensor")->required();
    decode_cmd->add_option("--center", center_path, "center heatmap tensor")->required();
    decode_cmd->add_option("--offsets", offsets_path, "offset map tensor")->required();
    decode_cmd->add_option("--out", decode_out, "results JSON path")->required();
    decode_cmd->add_option("--scorenet", decode_net, "score net JSON for ranking");
    decode_cmd->add_option("--image-id", image_id, "image id stamped into the results");

    // score
    int train_scenes = 0, epochs = 400, batch_size = 32;
    double learning_rate = 0.05;
    std::string save_net, score_in, score_net, score_out;
    auto* score_cmd = app.add_subcommand("score", "train the scorer or rescore results");
    score_cmd->add_option("--train-scenes", train_scenes, "train on this many synthetic scenes");
    score_cmd->add_option("--save-net", save_net, "where to save the trained net");
    score_cmd->add_option("--epochs", epochs, "training epochs");
    score_cmd->add_option("--lr", learning_rate, "learning rate");
    score_cmd->add_option("--batch", batch_size, "mini-batch size");
    score_cmd->add_option("--in", score_in, "decode results JSON to rescore");
    score_cmd->add_option("--net", score_net, "score net JSON to apply");
    score_cmd->add_option("--out", score_out, "ranked results JSON path");

    // eval-oks
    std::string eval_results, eval_gt, eval_out;
    auto* eval_cmd = app.add_subcommand("eval-oks", "score results against groundtruth poses");
    eval_cmd->add_option("--results", eval_results, "decode results JSON")->required();
    eval_cmd->add_option("--gt", eval_gt, "groundtruth pose JSON")->required();
    eval_cmd->add_option("--out", eval_out, "evaluation JSON path");

    // gradcheck
    auto* gradcheck_cmd =
        app.add_subcommand("gradcheck", "finite-difference check of all analytic gradients");

    try {
        app.parse(argc, argv);
        opts.seed_set = seed_opt->count() > 0;

        if (config_cmd->parsed()) return cmd_config(opts, dump, config_out);
        if (synth_cmd->parsed())
            return cmd_synth(opts, scenes, synth_out, noise_sigma, noise_opt->count() > 0,
                             offset_noise, offset_opt->count() > 0, template_path);
        if (targets_cmd->parsed())
            return cmd_gen_targets(opts, poses_path, height, width, targets_out);
        if (decode_cmd->parsed())
            return cmd_decode(opts, heatmaps_path, center_path, offsets_path, decode_out,
                              decode_net, image_id);
        if (score_cmd->parsed())
            return cmd_score(opts, train_scenes, save_net, score_in, score_net, score_out, epochs,
                             learning_rate, batch_size);
        if (eval_cmd->parsed()) return cmd_eval_oks(opts, eval_results, eval_gt, eval_out);
        if (gradcheck_cmd->parsed()) return cmd_gradcheck(opts);
        fail_validation("no subcommand given");
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: validation: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        const char* kind = e.kind() == ErrorKind::validation ? "validation"
                           : e.kind() == ErrorKind::io      ? "io"
                                                             : "format";
        std::cerr << "error: " << kind << ": " << e.what() << "\n";
        return e.kind() == ErrorKind::validation ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

int run(const std::vector<std::string>& args) {
    std::vector<std::string> full;
    full.reserve(args.size() + 1);
    full.push_back("posedec");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const auto& arg : full) argv.push_back(arg.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace posedec::cli

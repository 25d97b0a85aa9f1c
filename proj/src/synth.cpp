#include "posedec/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "posedec/error.hpp"
#include "posedec/rng.hpp"

namespace posedec {

namespace {

constexpr int kPlacementTries = 500;
constexpr double kDegToRad = 0.017453292519943295;

void validate_spec(const SceneSpec& spec) {
    if (spec.map_h < 32 || spec.map_w < 32) fail_validation("scene maps must be at least 32 x 32");
    if (spec.n_persons_min < 1 || spec.n_persons_max < spec.n_persons_min)
        fail_validation("scene person-count range is empty");
    if (spec.scale_max < spec.scale_min || spec.rot_max_deg < spec.rot_min_deg ||
        spec.trans_max < spec.trans_min)
        fail_validation("scene parameter range is empty");
    if (spec.noise_sigma < 0.0 || spec.offset_noise_sigma < 0.0 || spec.min_center_dist < 0.0)
        fail_validation("scene noise and separation parameters must be non-negative");
}

}  // namespace

const std::vector<Point>& template_keypoints() {
    // Upright 17-keypoint person, about 52 map pixels tall, x right / y down,
    // in COCO keypoint order. The centroid is subtracted at use.
    static const std::vector<Point> kps = {
        {0.0, -24.0},   // nose
        {-2.0, -26.0},  // left eye
        {2.0, -26.0},   // right eye
        {-4.0, -25.0},  // left ear
        {4.0, -25.0},   // right ear
        {-8.0, -16.0},  // left shoulder
        {8.0, -16.0},   // right shoulder
        {-11.0, -6.0},  // left elbow
        {11.0, -6.0},   // right elbow
        {-12.0, 4.0},   // left wrist
        {12.0, 4.0},    // right wrist
        {-5.0, 2.0},    // left hip
        {5.0, 2.0},     // right hip
        {-6.0, 14.0},   // left knee
        {6.0, 14.0},    // right knee
        {-7.0, 26.0},   // left ankle
        {7.0, 26.0},    // right ankle
    };
    return kps;
}

Scene sample_scene(const SceneSpec& spec, const SkeletonConfig& cfg) {
    return sample_scene(spec, cfg, template_keypoints());
}

Scene sample_scene(const SceneSpec& spec, const SkeletonConfig& cfg,
                   const std::vector<Point>& template_kps) {
    validate_spec(spec);
    if (template_kps.size() != static_cast<std::size_t>(cfg.keypoint_count))
        fail_validation("template keypoint count does not match the skeleton");

    Rng rng(spec.seed);
    const int n_requested =
        spec.n_persons_min +
        static_cast<int>(rng.uniform_int(
            static_cast<std::uint64_t>(spec.n_persons_max - spec.n_persons_min) + 1));

    // Center the template so its keypoint mean sits at the origin; the
    // sampled position then is the pose center.
    double mean_x = 0.0, mean_y = 0.0;
    for (const auto& p : template_kps) {
        mean_x += p.x;
        mean_y += p.y;
    }
    mean_x /= static_cast<double>(template_kps.size());
    mean_y /= static_cast<double>(template_kps.size());

    Scene scene;
    std::vector<Point> centers;
    for (int person = 0; person < n_requested; ++person) {
        for (int attempt = 0; attempt < kPlacementTries; ++attempt) {
            const double scale = rng.uniform(spec.scale_min, spec.scale_max);
            const double angle = rng.uniform(spec.rot_min_deg, spec.rot_max_deg) * kDegToRad;
            const double tx = rng.uniform(spec.trans_min, spec.trans_max);
            const double ty = rng.uniform(spec.trans_min, spec.trans_max);
            const double bx = rng.uniform(0.0, static_cast<double>(spec.map_w - 1));
            const double by = rng.uniform(0.0, static_cast<double>(spec.map_h - 1));
            const Point center{bx + tx, by + ty};

            if (center.x < 0.0 || center.x > spec.map_w - 1 || center.y < 0.0 ||
                center.y > spec.map_h - 1)
                continue;
            bool separated = true;
            for (const auto& other : centers)
                separated &= std::hypot(center.x - other.x, center.y - other.y) >=
                             spec.min_center_dist;
            if (!separated) continue;

            const double cos_a = std::cos(angle);
            const double sin_a = std::sin(angle);
            Pose pose;
            pose.keypoints.resize(template_kps.size());
            pose.visibility.assign(template_kps.size(), 2);
            bool inside = true;
            double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
            double min_y = min_x, max_y = max_x;
            for (std::size_t k = 0; k < template_kps.size(); ++k) {
                const double qx = scale * (template_kps[k].x - mean_x);
                const double qy = scale * (template_kps[k].y - mean_y);
                const double px = cos_a * qx - sin_a * qy + center.x;
                const double py = sin_a * qx + cos_a * qy + center.y;
                if (px < 0.0 || px > spec.map_w - 1 || py < 0.0 || py > spec.map_h - 1) {
                    inside = false;
                    break;
                }
                pose.keypoints[k] = {px, py};
                min_x = std::min(min_x, px);
                max_x = std::max(max_x, px);
                min_y = std::min(min_y, py);
                max_y = std::max(max_y, py);
            }
            if (!inside) continue;

            pose.box_w = std::max(1.0, max_x - min_x);
            pose.box_h = std::max(1.0, max_y - min_y);
            scene.poses.push_back(std::move(pose));
            centers.push_back(center);
            break;
        }
    }
    if (scene.poses.empty())
        fail_validation("empty scene: no person fits the map under the given ranges");

    scene.maps = build_targets(scene.poses, cfg, spec.map_h, spec.map_w);

    if (spec.noise_sigma > 0.0) {
        for (std::size_t i = 0; i < scene.maps.kp_heatmaps.size(); ++i)
            scene.maps.kp_heatmaps[i] = std::clamp(
                scene.maps.kp_heatmaps[i] + rng.normal(spec.noise_sigma), 0.0, 1.0);
        for (std::size_t i = 0; i < scene.maps.center_heatmap.size(); ++i)
            scene.maps.center_heatmap[i] = std::clamp(
                scene.maps.center_heatmap[i] + rng.normal(spec.noise_sigma), 0.0, 1.0);
    }
    if (spec.offset_noise_sigma > 0.0) {
        const std::size_t plane = scene.maps.offset_valid.size();
        for (std::size_t c = 0; c < scene.maps.offset_maps.channels(); ++c)
            for (std::size_t p = 0; p < plane; ++p)
                if (scene.maps.offset_valid[p] > 0.0)
                    scene.maps.offset_maps[c * plane + p] += rng.normal(spec.offset_noise_sigma);
    }
    return scene;
}

std::vector<ScoreExample> make_score_dataset(const SceneSpec& spec, const SkeletonConfig& cfg,
                                             const DecodeConfig& decode_cfg, int n_scenes) {
    if (n_scenes < 1) fail_validation("score dataset needs at least one scene");

    std::vector<ScoreExample> dataset;
    for (int i = 0; i < n_scenes; ++i) {
        SceneSpec scene_spec = spec;
        scene_spec.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(i));
        const Scene scene = sample_scene(scene_spec, cfg);

        const auto decoded = decode(scene.maps.kp_heatmaps, scene.maps.center_heatmap,
                                    scene.maps.offset_maps, decode_cfg);
        std::vector<std::vector<Point>> preds;
        preds.reserve(decoded.size());
        for (const auto& pose : decoded) preds.push_back(pose.keypoints);
        const auto eval = evaluate_poses(preds, scene.poses, cfg);

        std::vector<double> target(decoded.size(), 0.0);
        for (const auto& match : eval.matches) target[match.pred_index] = match.oks;
        for (std::size_t p = 0; p < decoded.size(); ++p)
            dataset.push_back(
                {shape_features(decoded[p], cfg, pose_norm_scale(decoded[p])), target[p]});
    }
    return dataset;
}

}  // namespace posedec

#include "posedec/targets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "posedec/error.hpp"

namespace posedec {

namespace {

void validate_pose(const Pose& pose, int k, std::size_t index) {
    if (pose.keypoints.size() != static_cast<std::size_t>(k) ||
        pose.visibility.size() != static_cast<std::size_t>(k))
        fail_validation("pose " + std::to_string(index) + " does not have " + std::to_string(k) +
                        " keypoints");
}

void validate_dims(int height, int width) {
    if (height <= 0 || width <= 0) fail_validation("map dimensions must be positive");
}

}  // namespace

SkeletonConfig SkeletonConfig::coco() {
    SkeletonConfig cfg;
    cfg.keypoint_count = 17;
    cfg.sticks = {{15, 13}, {13, 11}, {16, 14}, {14, 12}, {11, 12}, {5, 11}, {6, 12},
                  {5, 6},   {5, 7},   {6, 8},   {7, 9},   {8, 10},  {1, 2},  {0, 1},
                  {0, 2},   {1, 3},   {2, 4},   {3, 5},   {4, 6}};
    cfg.oks_k = {0.052, 0.050, 0.050, 0.070, 0.070, 0.158, 0.158, 0.144, 0.144,
                 0.124, 0.124, 0.214, 0.214, 0.174, 0.174, 0.178, 0.178};
    return cfg;
}

Point pose_center(const Pose& pose) {
    double sx = 0.0, sy = 0.0;
    int labeled = 0;
    for (std::size_t k = 0; k < pose.keypoints.size(); ++k) {
        if (!pose.labeled(k)) continue;
        sx += pose.keypoints[k].x;
        sy += pose.keypoints[k].y;
        ++labeled;
    }
    if (labeled == 0) fail_validation("degenerate pose: no labeled keypoints");
    return {sx / labeled, sy / labeled};
}

Point rounded_center(const Point& p) {
    return {std::floor(p.x + 0.5), std::floor(p.y + 0.5)};
}

std::pair<Tensor, Tensor> build_keypoint_heatmaps(const std::vector<Pose>& poses,
                                                  const SkeletonConfig& cfg, int height, int width) {
    validate_dims(height, width);
    const auto k = static_cast<std::size_t>(cfg.keypoint_count);
    Tensor heat({k, static_cast<std::size_t>(height), static_cast<std::size_t>(width)}, 0.0);
    Tensor mask({k, static_cast<std::size_t>(height), static_cast<std::size_t>(width)},
                cfg.mask_bg_weight);

    const double radius = cfg.truncation_radius();
    const double r2 = radius * radius;
    const double inv_two_sigma2 = 1.0 / (2.0 * cfg.sigma * cfg.sigma);

    for (std::size_t n = 0; n < poses.size(); ++n) {
        validate_pose(poses[n], cfg.keypoint_count, n);
        for (std::size_t kp = 0; kp < k; ++kp) {
            if (!poses[n].labeled(kp)) continue;
            const Point p = poses[n].keypoints[kp];
            const int x_lo = std::max(0, static_cast<int>(std::ceil(p.x - radius)));
            const int x_hi = std::min(width - 1, static_cast<int>(std::floor(p.x + radius)));
            const int y_lo = std::max(0, static_cast<int>(std::ceil(p.y - radius)));
            const int y_hi = std::min(height - 1, static_cast<int>(std::floor(p.y + radius)));
            for (int y = y_lo; y <= y_hi; ++y) {
                for (int x = x_lo; x <= x_hi; ++x) {
                    const double dx = x - p.x;
                    const double dy = y - p.y;
                    const double d2 = dx * dx + dy * dy;
                    if (d2 > r2) continue;
                    auto& cell = heat.at(kp, y, x);
                    cell = std::max(cell, std::exp(-d2 * inv_two_sigma2));
                    mask.at(kp, y, x) = 1.0;
                }
            }
        }
    }
    return {std::move(heat), std::move(mask)};
}

CenterTargets build_center_targets(const std::vector<Pose>& poses, const SkeletonConfig& cfg,
                                   int height, int width) {
    validate_dims(height, width);
    if (cfg.center_radius < 0) fail_validation("center_radius must be non-negative");
    const auto k = static_cast<std::size_t>(cfg.keypoint_count);
    const auto h = static_cast<std::size_t>(height);
    const auto w = static_cast<std::size_t>(width);

    CenterTargets out{Tensor({1, h, w}, 0.0), Tensor({2 * k, h, w}, 0.0), Tensor({1, h, w}, 0.0),
                      Tensor({1, h, w}, 0.0)};

    std::vector<Point> centers(poses.size());
    std::vector<Point> rounded(poses.size());
    for (std::size_t n = 0; n < poses.size(); ++n) {
        validate_pose(poses[n], cfg.keypoint_count, n);
        centers[n] = pose_center(poses[n]);
        rounded[n] = rounded_center(centers[n]);
    }

    // Resolve ownership first: the footnote rule assigns a contested pixel to
    // the pose whose center lies nearest.
    std::vector<int> owner(h * w, -1);
    std::vector<double> owner_d2(h * w, std::numeric_limits<double>::infinity());
    const int radius = cfg.center_radius;
    for (std::size_t n = 0; n < poses.size(); ++n) {
        const int cx = static_cast<int>(rounded[n].x);
        const int cy = static_cast<int>(rounded[n].y);
        for (int y = cy - radius; y <= cy + radius; ++y) {
            if (y < 0 || y >= height) continue;
            for (int x = cx - radius; x <= cx + radius; ++x) {
                if (x < 0 || x >= width) continue;
                if (cfg.center_metric == RadiusMetric::euclidean) {
                    const int ddx = x - cx;
                    const int ddy = y - cy;
                    if (ddx * ddx + ddy * ddy > radius * radius) continue;
                }
                const double dx = x - centers[n].x;
                const double dy = y - centers[n].y;
                const double d2 = dx * dx + dy * dy;
                const std::size_t idx = static_cast<std::size_t>(y) * w + x;
                // Strict comparison keeps the earlier (lower-index) pose on ties.
                if (d2 < owner_d2[idx]) {
                    owner_d2[idx] = d2;
                    owner[idx] = static_cast<int>(n);
                }
            }
        }
    }

    const double inv_two_sigma2 = 1.0 / (2.0 * cfg.sigma * cfg.sigma);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const int n = owner[y * w + x];
            if (n < 0) continue;
            const Pose& pose = poses[n];
            const double gx = static_cast<double>(x) - rounded[n].x;
            const double gy = static_cast<double>(y) - rounded[n].y;
            out.center_heatmap.at(0, y, x) = std::exp(-(gx * gx + gy * gy) * inv_two_sigma2);
            out.offset_valid.at(0, y, x) = 1.0;
            out.instance_size.at(0, y, x) = std::hypot(pose.box_h, pose.box_w);
            for (std::size_t kp = 0; kp < k; ++kp) {
                out.offset_maps.at(2 * kp, y, x) = pose.keypoints[kp].x - static_cast<double>(x);
                out.offset_maps.at(2 * kp + 1, y, x) = pose.keypoints[kp].y - static_cast<double>(y);
            }
        }
    }
    return out;
}

TargetSet build_targets(const std::vector<Pose>& poses, const SkeletonConfig& cfg, int height,
                        int width) {
    auto [heat, mask] = build_keypoint_heatmaps(poses, cfg, height, width);
    auto centers = build_center_targets(poses, cfg, height, width);
    return TargetSet{std::move(heat),
                     std::move(centers.center_heatmap),
                     std::move(centers.offset_maps),
                     std::move(mask),
                     std::move(centers.offset_valid),
                     std::move(centers.instance_size)};
}

std::vector<Pose> parse_poses(const std::string& json_text, int keypoint_count) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        fail_format(std::string("pose JSON parse error: ") + e.what());
    }
    if (!doc.is_array()) fail_format("pose JSON must be an array of objects");

    std::vector<Pose> poses;
    poses.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& item = doc[i];
        if (!item.is_object()) fail_format("pose entry " + std::to_string(i) + " is not an object");
        for (const auto& [key, value] : item.items()) {
            (void)value;
            if (key != "keypoints" && key != "box")
                fail_validation("unknown pose key: " + key);
        }
        if (!item.contains("keypoints") || !item["keypoints"].is_array())
            fail_format("pose entry " + std::to_string(i) + " lacks a keypoints array");
        const auto& kps = item["keypoints"];
        if (kps.size() != static_cast<std::size_t>(3 * keypoint_count))
            fail_validation("pose entry " + std::to_string(i) + " must have " +
                            std::to_string(3 * keypoint_count) + " keypoint values");

        Pose pose;
        pose.keypoints.resize(keypoint_count);
        pose.visibility.resize(keypoint_count);
        for (int kp = 0; kp < keypoint_count; ++kp) {
            pose.keypoints[kp].x = kps[3 * kp].get<double>();
            pose.keypoints[kp].y = kps[3 * kp + 1].get<double>();
            const int v = kps[3 * kp + 2].get<int>();
            if (v < 0 || v > 2)
                fail_validation("pose entry " + std::to_string(i) + " has visibility outside {0,1,2}");
            pose.visibility[kp] = v;
        }

        if (item.contains("box")) {
            const auto& box = item["box"];
            if (!box.is_array() || box.size() != 2)
                fail_format("pose entry " + std::to_string(i) + " box must be [h, w]");
            pose.box_h = box[0].get<double>();
            pose.box_w = box[1].get<double>();
            if (pose.box_h <= 0 || pose.box_w <= 0)
                fail_validation("pose entry " + std::to_string(i) + " box must be positive");
        } else {
            // Tight box of the labeled keypoints, floored at one pixel.
            double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
            double min_y = std::numeric_limits<double>::infinity(), max_y = -min_y;
            bool any = false;
            for (int kp = 0; kp < keypoint_count; ++kp) {
                if (pose.visibility[kp] == 0) continue;
                any = true;
                min_x = std::min(min_x, pose.keypoints[kp].x);
                max_x = std::max(max_x, pose.keypoints[kp].x);
                min_y = std::min(min_y, pose.keypoints[kp].y);
                max_y = std::max(max_y, pose.keypoints[kp].y);
            }
            if (any) {
                pose.box_h = std::max(1.0, max_y - min_y);
                pose.box_w = std::max(1.0, max_x - min_x);
            }
        }
        poses.push_back(std::move(pose));
    }
    return poses;
}

std::vector<Pose> load_poses(const std::filesystem::path& path, int keypoint_count) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open pose file: " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_poses(text.str(), keypoint_count);
}

std::string poses_to_json(const std::vector<Pose>& poses) {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& pose : poses) {
        nlohmann::json kps = nlohmann::json::array();
        for (std::size_t kp = 0; kp < pose.keypoints.size(); ++kp) {
            kps.push_back(pose.keypoints[kp].x);
            kps.push_back(pose.keypoints[kp].y);
            kps.push_back(pose.visibility[kp]);
        }
        doc.push_back({{"keypoints", std::move(kps)}, {"box", {pose.box_h, pose.box_w}}});
    }
    return doc.dump(2) + "\n";
}

}  // namespace posedec

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "posedec/tensor.hpp"

namespace posedec {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

// One annotated person. Keypoints are in map pixels; visibility follows the
// COCO convention: 0 = unlabeled, 1 = labeled but invisible, 2 = labeled and
// visible. The instance box (box_h, box_w) is in map pixels.
struct Pose {
    std::vector<Point> keypoints;
    std::vector<int> visibility;
    double box_h = 0.0;
    double box_w = 0.0;

    bool labeled(std::size_t k) const { return visibility[k] > 0; }
};

enum class RadiusMetric { chebyshev, euclidean };

struct SkeletonConfig {
    int keypoint_count = 17;
    std::vector<std::pair<int, int>> sticks;  // skeleton edges, index pairs
    std::vector<double> oks_k;                // per-keypoint falloff constants
    double sigma = 2.0;                       // Gaussian target stddev, map pixels
    int center_radius = 4;                    // center-region radius, map pixels
    double mask_bg_weight = 0.1;              // loss weight off the keypoint regions
    RadiusMetric center_metric = RadiusMetric::chebyshev;

    // Deposits and mask regions extend this far from a keypoint.
    double truncation_radius() const { return 3.0 * sigma; }

    static SkeletonConfig coco();
};

// Groundtruth maps for one image.
struct TargetSet {
    Tensor kp_heatmaps;     // K x H x W
    Tensor center_heatmap;  // 1 x H x W
    Tensor offset_maps;     // 2K x H x W, (dx, dy) interleaved per keypoint
    Tensor loss_mask;       // K x H x W, values in {mask_bg_weight, 1}
    Tensor offset_valid;    // 1 x H x W, 1 where some pose owns the pixel
    Tensor instance_size;   // 1 x H x W, sqrt(box_h^2 + box_w^2) of the owner
};

// Mean of the labeled keypoints. Throws if no keypoint is labeled.
Point pose_center(const Pose& pose);

// Rounded pixel of a continuous position: floor(v + 0.5) per coordinate.
Point rounded_center(const Point& p);

// Gaussian keypoint heatmaps and the tradeoff-loss mask. Deposits from
// keypoints of the same type combine by per-pixel maximum.
std::pair<Tensor, Tensor> build_keypoint_heatmaps(const std::vector<Pose>& poses,
                                                  const SkeletonConfig& cfg, int height, int width);

struct CenterTargets {
    Tensor center_heatmap;
    Tensor offset_maps;
    Tensor offset_valid;
    Tensor instance_size;
};

// Center heatmap, per-pixel keypoint offsets over each pose's center region,
// and the valid/size maps. A pixel claimed by several regions belongs to the
// pose whose (continuous) center is nearest; ties go to the lower pose index.
CenterTargets build_center_targets(const std::vector<Pose>& poses, const SkeletonConfig& cfg,
                                   int height, int width);

TargetSet build_targets(const std::vector<Pose>& poses, const SkeletonConfig& cfg, int height,
                        int width);

// Pose annotation JSON: [{"keypoints": [x1,y1,v1,...,xK,yK,vK], "box": [h, w]?}, ...].
// A missing box defaults to the tight box of the labeled keypoints (at least
// one pixel per side).
std::vector<Pose> parse_poses(const std::string& json_text, int keypoint_count);
std::vector<Pose> load_poses(const std::filesystem::path& path, int keypoint_count);
std::string poses_to_json(const std::vector<Pose>& poses);

}  // namespace posedec

#pragma once

#include <cstdint>
#include <vector>

#include "posedec/decoder.hpp"
#include "posedec/scoring.hpp"
#include "posedec/targets.hpp"

namespace posedec {

// Parameters of one synthetic multi-person scene. Every person is the
// template skeleton under a random similarity transform; the maps are the
// groundtruth targets with optional additive noise, standing in for network
// predictions.
struct SceneSpec {
    int map_h = 128;
    int map_w = 128;
    int n_persons_min = 1;
    int n_persons_max = 4;
    double scale_min = 0.75;
    double scale_max = 1.5;
    double rot_min_deg = -30.0;
    double rot_max_deg = 30.0;
    double trans_min = -40.0;
    double trans_max = 40.0;
    double noise_sigma = 0.0;         // additive Gaussian noise on heat maps
    double offset_noise_sigma = 0.0;  // additive noise on offsets at valid pixels
    double min_center_dist = 0.0;     // minimum pairwise center separation
    std::uint64_t seed = 0;
};

struct Scene {
    std::vector<Pose> poses;
    TargetSet maps;
};

// The canonical upright 17-keypoint person, centered at its keypoint mean.
const std::vector<Point>& template_keypoints();

// Draws persons, builds their targets, and perturbs the maps. Deterministic
// in (spec, cfg); persons that cannot be placed inside the map after repeated
// tries are skipped, and a scene with no placeable person is an error.
Scene sample_scene(const SceneSpec& spec, const SkeletonConfig& cfg);
Scene sample_scene(const SceneSpec& spec, const SkeletonConfig& cfg,
                   const std::vector<Point>& template_kps);

// Decodes n_scenes noisy scenes and pairs each decoded pose's shape features
// with its greedily matched true OKS (zero when unmatched).
std::vector<ScoreExample> make_score_dataset(const SceneSpec& spec, const SkeletonConfig& cfg,
                                             const DecodeConfig& decode_cfg, int n_scenes);

}  // namespace posedec

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "posedec/decoder.hpp"
#include "posedec/targets.hpp"

namespace posedec {

// Object keypoint similarity between predicted keypoints and a groundtruth
// pose: mean Gaussian falloff over the visible groundtruth keypoints, with
// s^2 the groundtruth box area and per-keypoint constants from the skeleton.
double oks(const std::vector<Point>& pred, const Pose& gt, const SkeletonConfig& cfg);

// Mean keypoint heatvalue times the center heatvalue.
double naive_score(const DecodedPose& pose);

// Normalization scale for shape features: the diagonal of the pose's tight
// keypoint box, floored at one pixel.
double pose_norm_scale(const DecodedPose& pose);

// Feature layout: K heatvalues, then one length per stick, then the stick
// offsets (dx, dy) interleaved in stick order. Lengths and offsets are
// divided by norm_scale. K + 3|E| entries; 74 for the COCO skeleton.
std::vector<double> shape_features(const DecodedPose& pose, const SkeletonConfig& cfg,
                                   double norm_scale);

// Fully-connected scorer: two hidden layers with rectifier activations and a
// linear output. Weights are row-major [out][in].
struct ScoreNet {
    struct Layer {
        std::vector<double> w;
        std::vector<double> b;
    };
    std::vector<int> sizes;  // e.g. [74, 64, 64, 1]
    std::vector<Layer> layers;

    static ScoreNet init(const std::vector<int>& sizes, std::uint64_t seed);
    static ScoreNet load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;
};

// Forward pass; the output is clamped to [0, 1] at inference (clamp = true)
// and left free during training.
double scorenet_forward(const ScoreNet& net, std::span<const double> features, bool clamp = true);

struct ScoreExample {
    std::vector<double> features;
    double target = 0.0;  // real OKS of the decoded pose
};

// Mean squared error over the batch and its parameter gradients.
double scorenet_loss_grad(const ScoreNet& net, std::span<const ScoreExample> batch,
                          std::vector<ScoreNet::Layer>& grads);

struct TrainHyper {
    double learning_rate = 0.05;
    int epochs = 400;
    int batch_size = 32;
    std::uint64_t seed = 1;
};

struct TrainResult {
    ScoreNet net;
    double final_loss = 0.0;
    std::vector<double> epoch_losses;  // mean MSE per epoch, in order
};

// Mini-batch gradient descent on the MSE; deterministic given the seed.
TrainResult scorenet_train(const std::vector<ScoreExample>& examples,
                           const std::vector<int>& hidden_sizes, const TrainHyper& hyper);

// Fill in scores (learned when a net is given, naive otherwise) and sort by
// score descending; stable on ties.
std::vector<DecodedPose> rank_poses(std::vector<DecodedPose> poses, const SkeletonConfig& cfg,
                                    const ScoreNet* net);

// Greedy one-to-one OKS matching of decoded poses against groundtruth;
// unmatched groundtruth contributes zero to the mean.
struct OksMatch {
    int pred_index = -1;
    int gt_index = -1;
    double oks = 0.0;
};
struct OksEvaluation {
    std::vector<OksMatch> matches;
    std::vector<double> per_gt;  // one entry per groundtruth pose
    double mean_oks = 0.0;
};
OksEvaluation evaluate_poses(const std::vector<std::vector<Point>>& preds,
                             const std::vector<Pose>& gts, const SkeletonConfig& cfg);

}  // namespace posedec

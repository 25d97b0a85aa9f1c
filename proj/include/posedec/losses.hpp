#pragma once

#include <utility>

#include "posedec/targets.hpp"
#include "posedec/tensor.hpp"

namespace posedec {

struct LossConfig {
    double lambda = 0.01;         // regression-loss weight in the total loss
    double smooth_l1_beta = 1.0;  // quadratic-to-linear transition point
    bool normalize = false;       // divide terms by pixel / region counts
};

// Tradeoff heatmap loss: sum of (mask * (pred - target))^2 with the gradient
// with respect to the predicted heatmaps.
struct HeatmapLossResult {
    double loss = 0.0;
    Tensor grad;  // K x H x W
};
HeatmapLossResult heatmap_loss(const Tensor& pred, const TargetSet& target,
                               const LossConfig& cfg = {});

// Huber-style smooth-L1 kernel: 0.5 x^2 / beta inside |x| < beta, |x| - beta/2
// outside. Returns (value, derivative).
std::pair<double, double> smooth_l1(double x, double beta);

// Pixel-wise keypoint regression loss: size-normalized smooth-L1 over the
// offset maps at valid center-region pixels, plus the unmasked squared error
// of the center heatmap.
struct RegressionLossResult {
    double loss = 0.0;
    Tensor grad_center;   // 1 x H x W
    Tensor grad_offsets;  // 2K x H x W, zero at invalid pixels
};
RegressionLossResult regression_loss(const Tensor& pred_center, const Tensor& pred_offsets,
                                     const TargetSet& target, const LossConfig& cfg = {});

// Combined loss: heatmap term plus lambda times the regression term.
struct TotalLossResult {
    double loss = 0.0;
    double heatmap_term = 0.0;
    double regression_term = 0.0;
    Tensor grad_heatmaps;
    Tensor grad_center;
    Tensor grad_offsets;
};
TotalLossResult total_loss(const Tensor& pred_heatmaps, const Tensor& pred_center,
                           const Tensor& pred_offsets, const TargetSet& target,
                           const LossConfig& cfg = {});

}  // namespace posedec

#include "posedec/losses.hpp"

#include <cmath>

#include "posedec/error.hpp"

namespace posedec {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) fail_validation(std::string("shape mismatch: ") + what);
}

}  // namespace

HeatmapLossResult heatmap_loss(const Tensor& pred, const TargetSet& target, const LossConfig& cfg) {
    require_same_shape(pred, target.kp_heatmaps, "predicted vs groundtruth keypoint heatmaps");
    require_same_shape(pred, target.loss_mask, "predicted heatmaps vs loss mask");

    HeatmapLossResult out;
    out.grad = Tensor(pred.shape(), 0.0);
    const double scale = cfg.normalize ? 1.0 / static_cast<double>(pred.size()) : 1.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double m = target.loss_mask[i];
        const double diff = pred[i] - target.kp_heatmaps[i];
        const double weighted = m * diff;
        out.loss += scale * weighted * weighted;
        out.grad[i] = scale * 2.0 * m * m * diff;
    }
    return out;
}

std::pair<double, double> smooth_l1(double x, double beta) {
    if (beta <= 0.0) fail_validation("smooth_l1 beta must be positive");
    const double ax = std::fabs(x);
    if (ax < beta) return {0.5 * x * x / beta, x / beta};
    return {ax - 0.5 * beta, x > 0.0 ? 1.0 : -1.0};
}

RegressionLossResult regression_loss(const Tensor& pred_center, const Tensor& pred_offsets,
                                     const TargetSet& target, const LossConfig& cfg) {
    require_same_shape(pred_center, target.center_heatmap, "predicted vs groundtruth center heatmap");
    require_same_shape(pred_offsets, target.offset_maps, "predicted vs groundtruth offset maps");
    require_same_shape(pred_center, target.offset_valid, "center heatmap vs offset-valid mask");

    RegressionLossResult out;
    out.grad_center = Tensor(pred_center.shape(), 0.0);
    out.grad_offsets = Tensor(pred_offsets.shape(), 0.0);

    const std::size_t plane = pred_center.height() * pred_center.width();
    const std::size_t coords = pred_offsets.channels();

    std::size_t valid_count = 0;
    for (std::size_t p = 0; p < plane; ++p)
        if (target.offset_valid[p] > 0.0) ++valid_count;

    const double offset_scale =
        cfg.normalize ? 1.0 / static_cast<double>(std::max<std::size_t>(1, valid_count)) : 1.0;
    const double center_scale = cfg.normalize ? 1.0 / static_cast<double>(plane) : 1.0;

    for (std::size_t p = 0; p < plane; ++p) {
        if (target.offset_valid[p] <= 0.0) continue;
        const double z = target.instance_size[p];
        if (z <= 0.0) fail_validation("degenerate instance: zero size at a valid pixel");
        const double w = offset_scale / z;
        for (std::size_t c = 0; c < coords; ++c) {
            const std::size_t idx = c * plane + p;
            const auto [value, slope] = smooth_l1(pred_offsets[idx] - target.offset_maps[idx],
                                                  cfg.smooth_l1_beta);
            out.loss += w * value;
            out.grad_offsets[idx] = w * slope;
        }
    }

    for (std::size_t p = 0; p < plane; ++p) {
        const double diff = pred_center[p] - target.center_heatmap[p];
        out.loss += center_scale * diff * diff;
        out.grad_center[p] = center_scale * 2.0 * diff;
    }
    return out;
}

TotalLossResult total_loss(const Tensor& pred_heatmaps, const Tensor& pred_center,
                           const Tensor& pred_offsets, const TargetSet& target,
                           const LossConfig& cfg) {
    if (cfg.lambda <= 0.0) fail_validation("loss lambda must be positive");
    auto h = heatmap_loss(pred_heatmaps, target, cfg);
    auto p = regression_loss(pred_center, pred_offsets, target, cfg);

    TotalLossResult out;
    out.heatmap_term = h.loss;
    out.regression_term = p.loss;
    out.loss = h.loss + cfg.lambda * p.loss;
    out.grad_heatmaps = std::move(h.grad);
    out.grad_center = std::move(p.grad_center);
    out.grad_offsets = std::move(p.grad_offsets);
    for (std::size_t i = 0; i < out.grad_center.size(); ++i) out.grad_center[i] *= cfg.lambda;
    for (std::size_t i = 0; i < out.grad_offsets.size(); ++i) out.grad_offsets[i] *= cfg.lambda;
    return out;
}

}  // namespace posedec

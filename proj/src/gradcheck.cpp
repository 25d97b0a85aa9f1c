#include "posedec/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "posedec/art.hpp"
#include "posedec/losses.hpp"
#include "posedec/rng.hpp"
#include "posedec/scoring.hpp"
#include "posedec/targets.hpp"

namespace posedec::gradcheck {

namespace {

constexpr double kStep = 1e-6;
constexpr double kTolerance = 1e-4;

double rel_err(double analytic, double numeric) {
    const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    return std::fabs(analytic - numeric) / scale;
}

SkeletonConfig small_skeleton(int k) {
    SkeletonConfig cfg;
    cfg.keypoint_count = k;
    cfg.sticks.clear();
    cfg.oks_k.assign(k, 0.1);
    return cfg;
}

TargetSet random_targets(Rng& rng, const SkeletonConfig& cfg, int h, int w) {
    std::vector<Pose> poses;
    const int persons = 1 + rng.uniform_index(2);
    for (int i = 0; i < persons; ++i) {
        Pose pose;
        for (int k = 0; k < cfg.keypoint_count; ++k) {
            pose.keypoints.push_back({rng.uniform(2.0, w - 3.0), rng.uniform(2.0, h - 3.0)});
            pose.visibility.push_back(2);
        }
        pose.box_h = pose.box_w = 5.0;
        poses.push_back(std::move(pose));
    }
    return build_targets(poses, cfg, h, w);
}

// Keeps perturbed offsets away from the smooth-L1 kink where the finite
// difference straddles a derivative jump.
double kink_free(Rng& rng, double beta) {
    for (;;) {
        const double v = rng.uniform(-2.0, 2.0);
        if (std::fabs(std::fabs(v) - beta) > 1e-2) return v;
    }
}

template <typename F>
double central_diff(F&& f, Tensor& t, std::size_t i) {
    const double orig = t[i];
    t[i] = orig + kStep;
    const double fp = f();
    t[i] = orig - kStep;
    const double fm = f();
    t[i] = orig;
    return (fp - fm) / (2.0 * kStep);
}

SuiteResult run_losses(std::uint64_t seed) {
    SuiteResult suite{"losses", 0.0, false};
    Rng rng(seed);
    const auto cfg = small_skeleton(2);
    const LossConfig loss_cfg;

    for (int instance = 0; instance < 100; ++instance) {
        const auto target = random_targets(rng, cfg, 6, 6);
        Tensor pred_h = target.kp_heatmaps;
        Tensor pred_c = target.center_heatmap;
        Tensor pred_o = target.offset_maps;
        for (std::size_t i = 0; i < pred_h.size(); ++i) pred_h[i] += rng.uniform(-0.5, 0.5);
        for (std::size_t i = 0; i < pred_c.size(); ++i) pred_c[i] += rng.uniform(-0.5, 0.5);
        for (std::size_t i = 0; i < pred_o.size(); ++i)
            pred_o[i] += kink_free(rng, loss_cfg.smooth_l1_beta);

        const auto hm = heatmap_loss(pred_h, target, loss_cfg);
        for (std::size_t i = 0; i < pred_h.size(); i += 5) {
            const double fd =
                central_diff([&] { return heatmap_loss(pred_h, target, loss_cfg).loss; }, pred_h, i);
            suite.max_rel_err = std::max(suite.max_rel_err, rel_err(hm.grad[i], fd));
        }

        const auto reg = regression_loss(pred_c, pred_o, target, loss_cfg);
        const auto reg_eval = [&] { return regression_loss(pred_c, pred_o, target, loss_cfg).loss; };
        for (std::size_t i = 0; i < pred_c.size(); i += 5)
            suite.max_rel_err =
                std::max(suite.max_rel_err, rel_err(reg.grad_center[i], central_diff(reg_eval, pred_c, i)));
        for (std::size_t i = 0; i < pred_o.size(); i += 7)
            suite.max_rel_err = std::max(suite.max_rel_err,
                                         rel_err(reg.grad_offsets[i], central_diff(reg_eval, pred_o, i)));

        const auto total = total_loss(pred_h, pred_c, pred_o, target, loss_cfg);
        const auto total_eval = [&] {
            return total_loss(pred_h, pred_c, pred_o, target, loss_cfg).loss;
        };
        suite.max_rel_err = std::max(
            suite.max_rel_err, rel_err(total.grad_heatmaps[3], central_diff(total_eval, pred_h, 3)));
        suite.max_rel_err = std::max(
            suite.max_rel_err, rel_err(total.grad_center[3], central_diff(total_eval, pred_c, 3)));
        suite.max_rel_err = std::max(
            suite.max_rel_err, rel_err(total.grad_offsets[3], central_diff(total_eval, pred_o, 3)));
    }
    suite.pass = suite.max_rel_err < kTolerance;
    return suite;
}

SuiteResult run_scorenet(std::uint64_t seed) {
    SuiteResult suite{"scorenet", 0.0, false};
    Rng rng(seed);

    for (int instance = 0; instance < 100; ++instance) {
        const int in_dim = 4 + rng.uniform_index(6);
        ScoreNet net = ScoreNet::init({in_dim, 8, 8, 1}, rng.next_u64());
        std::vector<ScoreExample> batch(2 + rng.uniform_index(3));
        for (auto& example : batch) {
            example.features.resize(in_dim);
            for (auto& f : example.features) f = rng.uniform(-1.0, 1.0);
            example.target = rng.uniform(0.0, 1.0);
        }

        std::vector<ScoreNet::Layer> grads;
        scorenet_loss_grad(net, batch, grads);

        const auto eval = [&] {
            std::vector<ScoreNet::Layer> scratch;
            return scorenet_loss_grad(net, batch, scratch);
        };
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            auto& layer = net.layers[l];
            for (std::size_t i = 0; i < layer.w.size(); i += 13) {
                const double orig = layer.w[i];
                layer.w[i] = orig + kStep;
                const double fp = eval();
                layer.w[i] = orig - kStep;
                const double fm = eval();
                layer.w[i] = orig;
                suite.max_rel_err = std::max(suite.max_rel_err,
                                             rel_err(grads[l].w[i], (fp - fm) / (2.0 * kStep)));
            }
            for (std::size_t i = 0; i < layer.b.size(); i += 3) {
                const double orig = layer.b[i];
                layer.b[i] = orig + kStep;
                const double fp = eval();
                layer.b[i] = orig - kStep;
                const double fm = eval();
                layer.b[i] = orig;
                suite.max_rel_err = std::max(suite.max_rel_err,
                                             rel_err(grads[l].b[i], (fp - fm) / (2.0 * kStep)));
            }
        }
    }
    suite.pass = suite.max_rel_err < kTolerance;
    return suite;
}

SuiteResult run_adaptive_conv(std::uint64_t seed) {
    SuiteResult suite{"adaptive-conv", 0.0, false};
    Rng rng(seed);

    for (int instance = 0; instance < 20; ++instance) {
        const std::size_t c_in = 1 + rng.uniform_int(2);
        const std::size_t c_out = 1 + rng.uniform_int(2);
        const std::size_t h = 3 + rng.uniform_int(3);
        const std::size_t w = 3 + rng.uniform_int(3);

        Tensor x({c_in, h, w});
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
        ConvKernel kernel{Tensor({c_out, c_in, 9}), std::vector<double>(c_out)};
        for (std::size_t i = 0; i < kernel.weights.size(); ++i)
            kernel.weights[i] = rng.uniform(-1.0, 1.0);
        for (auto& b : kernel.bias) b = rng.uniform(-0.5, 0.5);
        AffineField field{Tensor({4, h, w})};
        for (std::size_t i = 0; i < field.t.size(); ++i) field.t[i] = rng.uniform(-1.2, 1.2);

        Tensor grad_out({c_out, h, w});
        for (std::size_t i = 0; i < grad_out.size(); ++i) grad_out[i] = rng.uniform(-1.0, 1.0);
        const Tensor grad_in = adaptive_conv_input_grad(grad_out, kernel, field);

        for (std::size_t i = 0; i < x.size(); i += 2) {
            const double orig = x[i];
            x[i] = orig + kStep;
            const Tensor yp = adaptive_conv(x, kernel, field);
            x[i] = orig - kStep;
            const Tensor ym = adaptive_conv(x, kernel, field);
            x[i] = orig;
            double dot = 0.0;
            for (std::size_t j = 0; j < yp.size(); ++j)
                dot += grad_out[j] * (yp[j] - ym[j]) / (2.0 * kStep);
            suite.max_rel_err = std::max(suite.max_rel_err, rel_err(grad_in[i], dot));
        }
    }
    suite.pass = suite.max_rel_err < kTolerance;
    return suite;
}

}  // namespace

std::vector<SuiteResult> run_all(std::uint64_t seed) {
    return {run_losses(derive_seed(seed, 0)), run_scorenet(derive_seed(seed, 1)),
            run_adaptive_conv(derive_seed(seed, 2))};
}

}  // namespace posedec::gradcheck

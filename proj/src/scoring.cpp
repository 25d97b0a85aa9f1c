#include "posedec/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "posedec/error.hpp"
#include "posedec/rng.hpp"

namespace posedec {

double oks(const std::vector<Point>& pred, const Pose& gt, const SkeletonConfig& cfg) {
    const auto k = static_cast<std::size_t>(cfg.keypoint_count);
    if (pred.size() != k || gt.keypoints.size() != k)
        fail_validation("oks: keypoint count mismatch");
    if (cfg.oks_k.size() != k) fail_validation("oks: skeleton lacks per-keypoint constants");

    const double s2 = gt.box_h * gt.box_w;  // object scale squared
    if (s2 <= 0.0) fail_validation("oks: groundtruth box must be positive");

    double sum = 0.0;
    int visible = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (gt.visibility[i] <= 0) continue;
        const double dx = pred[i].x - gt.keypoints[i].x;
        const double dy = pred[i].y - gt.keypoints[i].y;
        const double d2 = dx * dx + dy * dy;
        const double ki = cfg.oks_k[i];
        sum += std::exp(-d2 / (2.0 * s2 * ki * ki));
        ++visible;
    }
    if (visible == 0) fail_validation("oks undefined: no visible groundtruth keypoints");
    return sum / visible;
}

double naive_score(const DecodedPose& pose) {
    if (pose.kp_heatvalues.empty()) return 0.0;
    const double mean = std::accumulate(pose.kp_heatvalues.begin(), pose.kp_heatvalues.end(), 0.0) /
                        static_cast<double>(pose.kp_heatvalues.size());
    return mean * pose.center_heatvalue;
}

double pose_norm_scale(const DecodedPose& pose) {
    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = max_x;
    for (const auto& p : pose.keypoints) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    if (pose.keypoints.empty()) return 1.0;
    return std::max(1.0, std::hypot(max_x - min_x, max_y - min_y));
}

std::vector<double> shape_features(const DecodedPose& pose, const SkeletonConfig& cfg,
                                   double norm_scale) {
    const auto k = static_cast<std::size_t>(cfg.keypoint_count);
    if (pose.keypoints.size() != k || pose.kp_heatvalues.size() != k)
        fail_validation("shape_features: pose keypoint count mismatch");
    if (norm_scale <= 0.0) fail_validation("shape_features: norm_scale must be positive");

    std::vector<double> feat;
    feat.reserve(k + 3 * cfg.sticks.size());
    for (std::size_t i = 0; i < k; ++i) feat.push_back(pose.kp_heatvalues[i]);
    for (const auto& [i, j] : cfg.sticks) {
        const double dx = pose.keypoints[i].x - pose.keypoints[j].x;
        const double dy = pose.keypoints[i].y - pose.keypoints[j].y;
        feat.push_back(std::hypot(dx, dy) / norm_scale);
    }
    for (const auto& [i, j] : cfg.sticks) {
        const double dx = pose.keypoints[i].x - pose.keypoints[j].x;
        const double dy = pose.keypoints[i].y - pose.keypoints[j].y;
        feat.push_back(dx / norm_scale);
        feat.push_back(dy / norm_scale);
    }
    return feat;
}

ScoreNet ScoreNet::init(const std::vector<int>& sizes, std::uint64_t seed) {
    if (sizes.size() < 2) fail_validation("score net needs at least input and output sizes");
    for (int s : sizes)
        if (s <= 0) fail_validation("score net layer sizes must be positive");

    Rng rng(seed);
    ScoreNet net;
    net.sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int fan_in = sizes[l];
        const int fan_out = sizes[l + 1];
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        ScoreNet::Layer layer;
        layer.w.resize(static_cast<std::size_t>(fan_in) * fan_out);
        layer.b.assign(fan_out, 0.0);
        for (auto& w : layer.w) w = rng.uniform(-bound, bound);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

namespace {

void validate_net(const ScoreNet& net) {
    if (net.sizes.size() < 2 || net.layers.size() != net.sizes.size() - 1)
        fail_validation("score net structure is inconsistent");
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto rows = static_cast<std::size_t>(net.sizes[l + 1]);
        const auto cols = static_cast<std::size_t>(net.sizes[l]);
        if (net.layers[l].w.size() != rows * cols || net.layers[l].b.size() != rows)
            fail_validation("score net layer " + std::to_string(l) + " has wrong parameter counts");
    }
}

// Forward pass keeping the post-activation of every layer; activations[0] is
// the input.
double forward_keep(const ScoreNet& net, std::span<const double> input,
                    std::vector<std::vector<double>>& activations) {
    activations.clear();
    activations.emplace_back(input.begin(), input.end());
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const auto& prev = activations.back();
        const auto rows = static_cast<std::size_t>(net.sizes[l + 1]);
        const auto cols = static_cast<std::size_t>(net.sizes[l]);
        std::vector<double> next(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = net.layers[l].b[r];
            const double* w = net.layers[l].w.data() + r * cols;
            for (std::size_t c = 0; c < cols; ++c) acc += w[c] * prev[c];
            // Hidden layers are rectified; the last layer is linear.
            next[r] = (l + 1 < net.layers.size()) ? std::max(0.0, acc) : acc;
        }
        activations.push_back(std::move(next));
    }
    return activations.back()[0];
}

}  // namespace

double scorenet_forward(const ScoreNet& net, std::span<const double> features, bool clamp) {
    validate_net(net);
    if (features.size() != static_cast<std::size_t>(net.sizes.front()))
        fail_validation("score net input dimension mismatch");
    if (net.sizes.back() != 1) fail_validation("score net must end in a single output");

    std::vector<std::vector<double>> activations;
    const double out = forward_keep(net, features, activations);
    return clamp ? std::clamp(out, 0.0, 1.0) : out;
}

double scorenet_loss_grad(const ScoreNet& net, std::span<const ScoreExample> batch,
                          std::vector<ScoreNet::Layer>& grads) {
    validate_net(net);
    if (batch.empty()) fail_validation("score net batch must be nonempty");

    grads.clear();
    for (std::size_t l = 0; l < net.layers.size(); ++l)
        grads.push_back({std::vector<double>(net.layers[l].w.size(), 0.0),
                         std::vector<double>(net.layers[l].b.size(), 0.0)});

    double loss = 0.0;
    std::vector<std::vector<double>> activations;
    for (const auto& example : batch) {
        if (example.features.size() != static_cast<std::size_t>(net.sizes.front()))
            fail_validation("score net input dimension mismatch");
        const double out = forward_keep(net, example.features, activations);
        const double err = out - example.target;
        loss += err * err / static_cast<double>(batch.size());

        // Backprop: d(loss)/d(out) averaged over the batch.
        std::vector<double> delta{2.0 * err / static_cast<double>(batch.size())};
        for (std::size_t l = net.layers.size(); l-- > 0;) {
            const auto rows = static_cast<std::size_t>(net.sizes[l + 1]);
            const auto cols = static_cast<std::size_t>(net.sizes[l]);
            const auto& below = activations[l];
            for (std::size_t r = 0; r < rows; ++r) {
                grads[l].b[r] += delta[r];
                double* gw = grads[l].w.data() + r * cols;
                for (std::size_t c = 0; c < cols; ++c) gw[c] += delta[r] * below[c];
            }
            if (l == 0) break;
            std::vector<double> next(cols, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                const double* w = net.layers[l].w.data() + r * cols;
                for (std::size_t c = 0; c < cols; ++c) next[c] += delta[r] * w[c];
            }
            // The layer below is rectified: kill gradient where it clipped.
            for (std::size_t c = 0; c < cols; ++c)
                if (activations[l][c] <= 0.0) next[c] = 0.0;
            delta = std::move(next);
        }
    }
    return loss;
}

TrainResult scorenet_train(const std::vector<ScoreExample>& examples,
                           const std::vector<int>& hidden_sizes, const TrainHyper& hyper) {
    if (examples.empty()) fail_validation("score net training set is empty");
    if (hyper.learning_rate <= 0.0 || hyper.epochs <= 0 || hyper.batch_size <= 0)
        fail_validation("score net hyperparameters must be positive");
    const auto in_dim = examples[0].features.size();
    for (const auto& example : examples) {
        if (example.features.size() != in_dim)
            fail_validation("score net training features have inconsistent dimensions");
        if (example.target < 0.0 || example.target > 1.0)
            fail_validation("score net targets must lie in [0, 1]");
    }

    std::vector<int> sizes{static_cast<int>(in_dim)};
    sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
    sizes.push_back(1);

    TrainResult result;
    result.net = ScoreNet::init(sizes, hyper.seed);
    Rng shuffler(derive_seed(hyper.seed, 1));  // separate stream from the init draw

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<ScoreNet::Layer> grads;
    std::vector<ScoreExample> batch;

    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        shuffler.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(hyper.batch_size)) {
            batch.clear();
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(hyper.batch_size));
            for (std::size_t i = start; i < stop; ++i) batch.push_back(examples[order[i]]);

            const double loss = scorenet_loss_grad(result.net, batch, grads);
            if (!std::isfinite(loss))
                fail_validation("score net training diverged; reduce the learning rate");
            epoch_loss += loss * static_cast<double>(batch.size());
            seen += batch.size();

            for (std::size_t l = 0; l < grads.size(); ++l) {
                auto& layer = result.net.layers[l];
                for (std::size_t i = 0; i < layer.w.size(); ++i)
                    layer.w[i] -= hyper.learning_rate * grads[l].w[i];
                for (std::size_t i = 0; i < layer.b.size(); ++i)
                    layer.b[i] -= hyper.learning_rate * grads[l].b[i];
            }
        }
        result.final_loss = epoch_loss / static_cast<double>(seen);
        result.epoch_losses.push_back(result.final_loss);
    }
    return result;
}

ScoreNet ScoreNet::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail_io("cannot open score net file: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail_format(std::string("score net JSON parse error: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("sizes") || !doc.contains("layers"))
        fail_format("score net JSON must contain sizes and layers");

    ScoreNet net;
    for (const auto& s : doc["sizes"]) net.sizes.push_back(s.get<int>());
    for (const auto& layer : doc["layers"]) {
        ScoreNet::Layer l;
        for (const auto& w : layer.at("w")) l.w.push_back(w.get<double>());
        for (const auto& b : layer.at("b")) l.b.push_back(b.get<double>());
        net.layers.push_back(std::move(l));
    }
    validate_net(net);
    for (const auto& layer : net.layers) {
        for (double w : layer.w)
            if (!std::isfinite(w)) fail_format("score net has non-finite weights");
        for (double b : layer.b)
            if (!std::isfinite(b)) fail_format("score net has non-finite biases");
    }
    return net;
}

void ScoreNet::save(const std::filesystem::path& path) const {
    validate_net(*this);
    nlohmann::json doc;
    doc["sizes"] = sizes;
    doc["layers"] = nlohmann::json::array();
    for (const auto& layer : layers)
        doc["layers"].push_back({{"w", layer.w}, {"b", layer.b}});
    std::ofstream out(path);
    if (!out) fail_io("cannot open score net file for writing: " + path.string());
    out << doc.dump(2) << "\n";
    if (!out) fail_io("failed to write score net file: " + path.string());
}

std::vector<DecodedPose> rank_poses(std::vector<DecodedPose> poses, const SkeletonConfig& cfg,
                                    const ScoreNet* net) {
    for (auto& pose : poses) {
        if (net != nullptr) {
            const auto feat = shape_features(pose, cfg, pose_norm_scale(pose));
            pose.score = scorenet_forward(*net, feat, true);
        } else {
            pose.score = naive_score(pose);
        }
    }
    std::stable_sort(poses.begin(), poses.end(),
                     [](const DecodedPose& a, const DecodedPose& b) { return a.score > b.score; });
    return poses;
}

OksEvaluation evaluate_poses(const std::vector<std::vector<Point>>& preds,
                             const std::vector<Pose>& gts, const SkeletonConfig& cfg) {
    OksEvaluation eval;
    eval.per_gt.assign(gts.size(), 0.0);

    struct Pair {
        double oks;
        std::size_t pred;
        std::size_t gt;
    };
    std::vector<Pair> pairs;
    for (std::size_t p = 0; p < preds.size(); ++p)
        for (std::size_t g = 0; g < gts.size(); ++g) {
            bool visible = false;
            for (int v : gts[g].visibility) visible |= v > 0;
            if (!visible) continue;
            pairs.push_back({oks(preds[p], gts[g], cfg), p, g});
        }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.oks != b.oks) return a.oks > b.oks;
        if (a.pred != b.pred) return a.pred < b.pred;
        return a.gt < b.gt;
    });

    std::vector<bool> pred_used(preds.size(), false), gt_used(gts.size(), false);
    for (const auto& pair : pairs) {
        if (pred_used[pair.pred] || gt_used[pair.gt]) continue;
        pred_used[pair.pred] = true;
        gt_used[pair.gt] = true;
        eval.matches.push_back({static_cast<int>(pair.pred), static_cast<int>(pair.gt), pair.oks});
        eval.per_gt[pair.gt] = pair.oks;
    }

    if (!gts.empty()) {
        double sum = 0.0;
        for (double v : eval.per_gt) sum += v;
        eval.mean_oks = sum / static_cast<double>(gts.size());
    }
    return eval;
}

}  // namespace posedec

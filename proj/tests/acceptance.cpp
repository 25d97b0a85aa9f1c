// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Oracles are implemented locally so each check stays independent of
// the library code path it verifies.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "posedec/art.hpp"
#include "posedec/cli.hpp"
#include "posedec/decoder.hpp"
#include "posedec/gradcheck.hpp"
#include "posedec/losses.hpp"
#include "posedec/rng.hpp"
#include "posedec/scoring.hpp"
#include "posedec/synth.hpp"
#include "posedec/targets.hpp"

using namespace posedec;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string name;
    bool pass;
    std::string detail;
    double seconds;
};

std::vector<Criterion> g_results;

template <typename F>
void run_criterion(int id, const std::string& name, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    bool pass = false;
    std::string detail;
    try {
        detail = body();
        pass = true;
    } catch (const std::exception& e) {
        detail = e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    g_results.push_back({id, name, pass, detail, seconds});
}

[[noreturn]] void reject(const std::string& why) { throw std::runtime_error(why); }

void require(bool ok, const std::string& why) {
    if (!ok) reject(why);
}

std::string fmt(const char* format, double a, double b = 0.0) {
    char buf[128];
    std::snprintf(buf, sizeof buf, format, a, b);
    return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic gradients vs central finite differences.

std::string check_gradients() {
    const auto suites = gradcheck::run_all(20260809);
    double worst = 0.0;
    for (const auto& suite : suites) {
        require(suite.pass, suite.name + " gradient suite exceeded 1e-4 (" +
                                fmt("%.3e", suite.max_rel_err) + ")");
        worst = std::max(worst, suite.max_rel_err);
    }
    return fmt("max_rel_err %.3e", worst);
}

// ---------------------------------------------------------------------------
// Criterion 2: adaptive conv vs a reference 3x3 convolution.

Tensor reference_conv(const Tensor& x, const ConvKernel& kernel) {
    const auto h = static_cast<long long>(x.height());
    const auto w = static_cast<long long>(x.width());
    Tensor y({kernel.out_channels(), x.height(), x.width()}, 0.0);
    for (std::size_t co = 0; co < kernel.out_channels(); ++co)
        for (long long qy = 0; qy < h; ++qy)
            for (long long qx = 0; qx < w; ++qx) {
                double acc = kernel.bias[co];
                for (int ky = -1; ky <= 1; ++ky)
                    for (int kx = -1; kx <= 1; ++kx) {
                        const long long sy = qy + ky;
                        const long long sx = qx + kx;
                        if (sx < 0 || sy < 0 || sx >= w || sy >= h) continue;
                        for (std::size_t c = 0; c < x.channels(); ++c)
                            acc += kernel.weights.at(co, c, (ky + 1) * 3 + (kx + 1)) *
                                   x.at(c, sy, sx);
                    }
                y.at(co, qy, qx) = acc;
            }
    return y;
}

std::string check_art_identity() {
    Rng rng(816);
    double worst = 0.0;
    for (int iter = 0; iter < 50; ++iter) {
        const std::size_t c_in = 1 + rng.uniform_int(3);
        const std::size_t c_out = 1 + rng.uniform_int(3);
        const std::size_t h = 5 + rng.uniform_int(6);
        const std::size_t w = 5 + rng.uniform_int(6);
        Tensor x({c_in, h, w});
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-2.0, 2.0);
        ConvKernel kernel{Tensor({c_out, c_in, 9}), std::vector<double>(c_out)};
        for (std::size_t i = 0; i < kernel.weights.size(); ++i)
            kernel.weights[i] = rng.uniform(-1.0, 1.0);
        for (auto& b : kernel.bias) b = rng.uniform(-0.5, 0.5);

        const Tensor adaptive = adaptive_conv(x, kernel, AffineField::identity(h, w));
        const Tensor reference = reference_conv(x, kernel);
        for (std::size_t i = 0; i < adaptive.size(); ++i)
            worst = std::max(worst, std::fabs(adaptive[i] - reference[i]));
        require(worst < 1e-12, "identity reduction diff " + fmt("%.3e", worst));

        // Collapsed grid: every tap reads x(q); same accumulation order makes
        // the comparison exact.
        AffineField zero{Tensor({4, h, w}, 0.0)};
        const Tensor collapsed = adaptive_conv(x, kernel, zero);
        for (std::size_t co = 0; co < c_out; ++co)
            for (std::size_t qy = 0; qy < h; ++qy)
                for (std::size_t qx = 0; qx < w; ++qx) {
                    double acc = kernel.bias[co];
                    for (std::size_t c = 0; c < c_in; ++c)
                        for (int tap = 0; tap < 9; ++tap)
                            acc += kernel.weights.at(co, c, tap) * x.at(c, qy, qx);
                    require(collapsed.at(co, qy, qx) == acc, "collapsed-grid case not exact");
                }
    }
    return fmt("max_abs_diff %.3e", worst);
}

// ---------------------------------------------------------------------------
// Criterion 3: zero-noise decoder round trip.

std::string check_decoder_round_trip() {
    const auto cfg = SkeletonConfig::coco();
    const DecodeConfig dcfg;  // absorb radius 18.75 map px
    double oks_sum = 0.0;
    std::size_t gt_count = 0;
    double worst_err = 0.0;
    for (int s = 0; s < 50; ++s) {
        SceneSpec spec;
        spec.map_h = spec.map_w = 256;
        spec.n_persons_min = 1;
        spec.n_persons_max = 8;
        spec.min_center_dist = 48.0;  // > 2 x absorb radius (37.5)
        spec.seed = derive_seed(90210, static_cast<std::uint64_t>(s));
        const Scene scene = sample_scene(spec, cfg);

        const auto decoded = decode(scene.maps.kp_heatmaps, scene.maps.center_heatmap,
                                    scene.maps.offset_maps, dcfg);
        require(decoded.size() == scene.poses.size(),
                "scene " + std::to_string(s) + ": decoded " + std::to_string(decoded.size()) +
                    " of " + std::to_string(scene.poses.size()) + " persons");

        std::vector<std::vector<Point>> preds;
        for (const auto& pose : decoded) preds.push_back(pose.keypoints);
        const auto eval = evaluate_poses(preds, scene.poses, cfg);
        require(eval.matches.size() == scene.poses.size(), "unmatched pose in round trip");
        for (const auto& match : eval.matches) {
            const auto& pred = preds[match.pred_index];
            const auto& gt = scene.poses[match.gt_index];
            for (int k = 0; k < cfg.keypoint_count; ++k) {
                const double err = std::hypot(pred[k].x - gt.keypoints[k].x,
                                              pred[k].y - gt.keypoints[k].y);
                worst_err = std::max(worst_err, err);
                require(err <= 0.75, "scene " + std::to_string(s) + ": keypoint error " +
                                         fmt("%.3f", err) + " above 0.75 px");
            }
        }
        for (double v : eval.per_gt) oks_sum += v;
        gt_count += eval.per_gt.size();
    }
    const double mean_oks = oks_sum / static_cast<double>(gt_count);
    require(mean_oks >= 0.99, "mean OKS " + fmt("%.4f", mean_oks) + " below 0.99");
    return fmt("mean_oks %.4f, worst keypoint err %.3f px", mean_oks, worst_err);
}

// ---------------------------------------------------------------------------
// Criterion 4: grouping vs the brute-force all-pairs oracle at the 75-px rule.

std::string check_grouping_oracle() {
    Rng rng(75757);
    DecodeConfig cfg;
    cfg.absorb_radius = 75.0;

    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t k = 1 + rng.uniform_int(5);
        Tensor heat({k, 32, 32});
        for (std::size_t i = 0; i < heat.size(); ++i) heat[i] = rng.uniform(0.0, 1.0);

        std::vector<std::vector<KeypointCandidate>> candidates(k);
        for (std::size_t kp = 0; kp < k; ++kp) {
            const int n = rng.uniform_index(7);
            for (int i = 0; i < n; ++i)
                candidates[kp].push_back({static_cast<int>(kp),
                                          {rng.uniform(0.0, 300.0), rng.uniform(0.0, 300.0)},
                                          rng.uniform(0.01, 1.0)});
        }
        std::vector<GroupingCue> cues(1 + rng.uniform_int(5));
        for (auto& cue : cues) {
            cue.center = {rng.uniform(0.0, 300.0), rng.uniform(0.0, 300.0)};
            cue.center_heatvalue = rng.uniform(0.01, 1.0);
            for (std::size_t kp = 0; kp < k; ++kp)
                cue.keypoints.push_back({rng.uniform(0.0, 300.0), rng.uniform(0.0, 300.0)});
        }

        const auto got = group(cues, candidates, heat, cfg);
        require(got.size() == cues.size(), "group output count != cue count");
        for (std::size_t m = 0; m < cues.size(); ++m) {
            for (std::size_t kp = 0; kp < k; ++kp) {
                // Oracle: scan every candidate of the type, smallest distance
                // wins, first index on ties, 75-px gate.
                int pick = -1;
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < candidates[kp].size(); ++i) {
                    const double d = std::hypot(candidates[kp][i].position.x - cues[m].keypoints[kp].x,
                                                candidates[kp][i].position.y - cues[m].keypoints[kp].y);
                    if (d < best) {
                        best = d;
                        pick = static_cast<int>(i);
                    }
                }
                const bool absorb = pick >= 0 && best <= 75.0;
                require(got[m].absorbed[kp] == absorb, "absorption decision mismatch");
                const Point expect = absorb ? candidates[kp][pick].position : cues[m].keypoints[kp];
                require(got[m].keypoints[kp].x == expect.x && got[m].keypoints[kp].y == expect.y,
                        "grouped keypoint mismatch");
                if (absorb)
                    require(got[m].kp_heatvalues[kp] == candidates[kp][pick].heatvalue,
                            "absorbed heatvalue mismatch");
            }
        }
    }
    return "1000 instances identical to oracle";
}

// ---------------------------------------------------------------------------
// Criterion 5: target reconstruction and footnote tie-breaking.

std::string check_target_reconstruction() {
    Rng rng(5150);
    SkeletonConfig cfg;
    cfg.keypoint_count = 3;
    cfg.sticks.clear();
    cfg.oks_k.assign(3, 0.1);

    for (int iter = 0; iter < 200; ++iter) {
        // Clustered poses so the center regions genuinely overlap.
        const int n = 2 + rng.uniform_index(3);
        const double cx = rng.uniform(12.0, 28.0);
        const double cy = rng.uniform(12.0, 28.0);
        std::vector<Pose> poses;
        for (int i = 0; i < n; ++i) {
            Pose pose;
            const double px = cx + rng.uniform(-4.0, 4.0);
            const double py = cy + rng.uniform(-4.0, 4.0);
            for (int k = 0; k < 3; ++k) {
                pose.keypoints.push_back({px + rng.uniform(-3.0, 3.0), py + rng.uniform(-3.0, 3.0)});
                pose.visibility.push_back(2);
            }
            pose.box_h = pose.box_w = 6.0;
            poses.push_back(std::move(pose));
        }
        const auto targets = build_center_targets(poses, cfg, 40, 40);

        // Oracle: per-pixel nearest-center assignment over all poses.
        std::vector<Point> centers(poses.size()), rounded(poses.size());
        for (std::size_t i = 0; i < poses.size(); ++i) {
            centers[i] = pose_center(poses[i]);
            rounded[i] = rounded_center(centers[i]);
        }
        for (int y = 0; y < 40; ++y) {
            for (int x = 0; x < 40; ++x) {
                int owner = -1;
                double best = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < poses.size(); ++i) {
                    if (std::max(std::fabs(x - rounded[i].x), std::fabs(y - rounded[i].y)) >
                        cfg.center_radius)
                        continue;
                    const double d2 =
                        (x - centers[i].x) * (x - centers[i].x) + (y - centers[i].y) * (y - centers[i].y);
                    if (d2 < best) {
                        best = d2;
                        owner = static_cast<int>(i);
                    }
                }
                const bool valid = targets.offset_valid.at(0, y, x) > 0.0;
                require(valid == (owner >= 0), "ownership mismatch with brute force");
                if (owner < 0) continue;
                for (int k = 0; k < 3; ++k) {
                    const double rx = x + targets.offset_maps.at(2 * k, y, x);
                    const double ry = y + targets.offset_maps.at(2 * k + 1, y, x);
                    require(rx == poses[owner].keypoints[k].x && ry == poses[owner].keypoints[k].y,
                            "offsets do not reconstruct the owner exactly");
                }
                require(targets.instance_size.at(0, y, x) ==
                            std::hypot(poses[owner].box_h, poses[owner].box_w),
                        "instance size does not match the owner");
            }
        }
    }
    return "200 overlapping-pose cases reconstruct exactly";
}

// ---------------------------------------------------------------------------
// Criterion 6: OKS against the direct formula.

std::string check_oks_oracle() {
    Rng rng(4141);
    SkeletonConfig cfg;
    cfg.keypoint_count = 6;
    cfg.sticks.clear();
    cfg.oks_k.resize(6);

    double worst = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
        for (auto& k : cfg.oks_k) k = rng.uniform(0.04, 0.3);
        Pose gt;
        std::vector<Point> pred;
        bool any = false;
        for (int k = 0; k < 6; ++k) {
            gt.keypoints.push_back({rng.uniform(0.0, 80.0), rng.uniform(0.0, 80.0)});
            const int v = rng.uniform() < 0.25 ? 0 : (rng.uniform() < 0.5 ? 1 : 2);
            gt.visibility.push_back(v);
            any |= v > 0;
            pred.push_back({rng.uniform(0.0, 80.0), rng.uniform(0.0, 80.0)});
        }
        if (!any) gt.visibility[0] = 2;
        gt.box_h = rng.uniform(4.0, 40.0);
        gt.box_w = rng.uniform(4.0, 40.0);

        // Direct transcription of the similarity formula.
        const double s2 = gt.box_h * gt.box_w;
        double num = 0.0, den = 0.0;
        for (int k = 0; k < 6; ++k) {
            if (gt.visibility[k] <= 0) continue;
            const double d2 = (pred[k].x - gt.keypoints[k].x) * (pred[k].x - gt.keypoints[k].x) +
                              (pred[k].y - gt.keypoints[k].y) * (pred[k].y - gt.keypoints[k].y);
            num += std::exp(-d2 / (2.0 * s2 * cfg.oks_k[k] * cfg.oks_k[k]));
            den += 1.0;
        }
        worst = std::max(worst, std::fabs(oks(pred, gt, cfg) - num / den));
        require(worst <= 1e-12, "oks deviates from the direct formula by " + fmt("%.3e", worst));
    }

    // Single visible keypoint displaced by s*k*sqrt(2) must give exp(-1).
    SkeletonConfig single;
    single.keypoint_count = 1;
    single.sticks.clear();
    single.oks_k = {0.17};
    Pose gt{{{50.0, 50.0}}, {2}, 9.0, 4.0};  // s = 6
    const double d = 6.0 * 0.17 * std::sqrt(2.0);
    const double got = oks({{50.0 + d / std::sqrt(2.0), 50.0 + d / std::sqrt(2.0)}}, gt, single);
    require(std::fabs(got - std::exp(-1.0)) <= 1e-12,
            "exp(-1) case off by " + fmt("%.3e", std::fabs(got - std::exp(-1.0))));
    return fmt("max formula deviation %.3e", worst);
}

// ---------------------------------------------------------------------------
// Criterion 7: learned scorer ranks at least as well as the naive score.

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ranks = [](const std::vector<double>& v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> rank(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = shared;
            i = j + 1;
        }
        return rank;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

std::string check_scoring_efficacy() {
    const auto cfg = SkeletonConfig::coco();
    const DecodeConfig dcfg;

    struct Sample {
        std::vector<double> features;
        double naive;
        double oks;
    };
    std::vector<Sample> samples;
    std::uint64_t scene_index = 0;
    while (samples.size() < 700) {
        SceneSpec spec;
        spec.map_h = spec.map_w = 256;
        spec.n_persons_min = 2;
        spec.n_persons_max = 6;
        spec.min_center_dist = 48.0;
        spec.noise_sigma = 0.05;
        spec.offset_noise_sigma = 2.0;
        spec.seed = derive_seed(777001, scene_index++);
        const Scene scene = sample_scene(spec, cfg);

        const auto decoded = decode(scene.maps.kp_heatmaps, scene.maps.center_heatmap,
                                    scene.maps.offset_maps, dcfg);
        std::vector<std::vector<Point>> preds;
        for (const auto& pose : decoded) preds.push_back(pose.keypoints);
        const auto eval = evaluate_poses(preds, scene.poses, cfg);
        std::vector<double> target(decoded.size(), 0.0);
        for (const auto& match : eval.matches) target[match.pred_index] = match.oks;
        for (std::size_t p = 0; p < decoded.size(); ++p)
            samples.push_back({shape_features(decoded[p], cfg, pose_norm_scale(decoded[p])),
                               naive_score(decoded[p]), target[p]});
    }

    std::vector<ScoreExample> train;
    for (std::size_t i = 0; i < 500; ++i) train.push_back({samples[i].features, samples[i].oks});
    TrainHyper hyper;
    hyper.epochs = 300;
    hyper.learning_rate = 0.02;
    hyper.batch_size = 32;
    hyper.seed = 31337;
    const TrainResult trained = scorenet_train(train, {64, 64}, hyper);

    std::vector<double> net_scores, naive_scores, true_oks;
    for (std::size_t i = 500; i < 700; ++i) {
        net_scores.push_back(scorenet_forward(trained.net, samples[i].features));
        naive_scores.push_back(samples[i].naive);
        true_oks.push_back(samples[i].oks);
    }
    const double rho_net = spearman(net_scores, true_oks);
    const double rho_naive = spearman(naive_scores, true_oks);
    require(rho_net >= rho_naive, "net rho " + fmt("%.4f", rho_net) + " below naive rho " +
                                      fmt("%.4f", rho_naive));
    return fmt("spearman net %.4f vs naive %.4f", rho_net, rho_naive);
}

// ---------------------------------------------------------------------------
// Criterion 8: background gradient mass scales with the squared mask weight.

std::string check_tradeoff_balance() {
    Rng rng(808);
    SkeletonConfig light;
    light.keypoint_count = 2;
    light.sticks.clear();
    light.oks_k.assign(2, 0.1);
    light.mask_bg_weight = 0.1;
    SkeletonConfig heavy = light;
    heavy.mask_bg_weight = 1.0;

    double worst = 0.0;
    for (int iter = 0; iter < 20; ++iter) {
        std::vector<Pose> poses;
        Pose pose;
        for (int k = 0; k < 2; ++k) {
            pose.keypoints.push_back({rng.uniform(6.0, 26.0), rng.uniform(6.0, 26.0)});
            pose.visibility.push_back(2);
        }
        pose.box_h = pose.box_w = 8.0;
        poses.push_back(pose);

        const auto t_light = build_targets(poses, light, 32, 32);
        const auto t_heavy = build_targets(poses, heavy, 32, 32);

        Tensor pred = t_light.kp_heatmaps;  // identical residuals in both runs
        for (std::size_t i = 0; i < pred.size(); ++i) pred[i] += rng.uniform(-0.5, 0.5);

        const auto g_light = heatmap_loss(pred, t_light);
        const auto g_heavy = heatmap_loss(pred, t_heavy);

        double sum_light = 0.0, sum_heavy = 0.0;
        for (std::size_t i = 0; i < pred.size(); ++i) {
            if (t_light.loss_mask[i] != 0.1) continue;  // keypoint region: same in both
            sum_light += std::fabs(g_light.grad[i]);
            sum_heavy += std::fabs(g_heavy.grad[i]);
        }
        const double ratio = sum_light / sum_heavy;
        worst = std::max(worst, std::fabs(ratio - 0.01) / 0.01);
        require(worst <= 1e-12,
                "background gradient ratio off by rel " + fmt("%.3e", worst));
    }
    return fmt("ratio rel err %.3e", worst);
}

// ---------------------------------------------------------------------------
// Criterion 9: byte-identical CLI output across reruns and jobs counts.

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "missing output file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

void run_pipeline(const fs::path& dir, int jobs) {
    fs::create_directories(dir);
    const auto config_path = dir / "config.json";
    std::ofstream(config_path)
        << R"({"synth": {"map_h": 160, "map_w": 160, "n_persons": [1, 3],
                          "noise_sigma": 0.03, "offset_noise_sigma": 0.5,
                          "min_center_dist": 48, "seed": 6021}})";
    const std::string cfg = config_path.string();
    const std::string jobs_str = std::to_string(jobs);

    require(cli::run({"--config", cfg, "--jobs", jobs_str, "synth", "--scenes", "6", "--out",
                      (dir / "scenes").string()}) == 0,
            "synth failed");
    require(cli::run({"--config", cfg, "gen-targets", "--poses",
                      (dir / "scenes/scene_0000/poses.json").string(), "--height", "160",
                      "--width", "160", "--out", (dir / "targets").string()}) == 0,
            "gen-targets failed");
    require(cli::run({"--config", cfg, "decode", "--heatmaps",
                      (dir / "scenes/scene_0000/heatmaps.pdt").string(), "--center",
                      (dir / "scenes/scene_0000/center.pdt").string(), "--offsets",
                      (dir / "scenes/scene_0000/offsets.pdt").string(), "--out",
                      (dir / "results.json").string()}) == 0,
            "decode failed");
    require(cli::run({"--config", cfg, "score", "--train-scenes", "4", "--epochs", "40",
                      "--save-net", (dir / "net.json").string()}) == 0,
            "score training failed");
    require(cli::run({"--config", cfg, "score", "--in", (dir / "results.json").string(), "--net",
                      (dir / "net.json").string(), "--out", (dir / "ranked.json").string()}) == 0,
            "score rescoring failed");
    require(cli::run({"--config", cfg, "eval-oks", "--results", (dir / "results.json").string(),
                      "--gt", (dir / "scenes/scene_0000/poses.json").string(), "--out",
                      (dir / "eval.json").string()}) == 0,
            "eval-oks failed");
    require(cli::run({"--config", cfg, "config", "--dump", "--out",
                      (dir / "dump.json").string()}) == 0,
            "config dump failed");
}

void compare_trees(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> rel;
    for (const auto& entry : fs::recursive_directory_iterator(a))
        if (entry.is_regular_file() && entry.path().filename() != "config.json")
            rel.push_back(fs::relative(entry.path(), a));
    std::sort(rel.begin(), rel.end());
    require(!rel.empty(), "no output files produced");
    for (const auto& r : rel)
        require(slurp(a / r) == slurp(b / r), "output differs: " + r.string());
}

std::string check_determinism() {
    const fs::path base = fs::temp_directory_path() / "posedec_acceptance_determinism";
    fs::remove_all(base);
    run_pipeline(base / "jobs1_a", 1);
    run_pipeline(base / "jobs1_b", 1);
    run_pipeline(base / "jobs4", 4);
    compare_trees(base / "jobs1_a", base / "jobs1_b");
    compare_trees(base / "jobs1_a", base / "jobs4");

    // gradcheck report: capture stdout of two runs and compare.
    const auto capture_gradcheck = [] {
        std::ostringstream captured;
        auto* old = std::cout.rdbuf(captured.rdbuf());
        const int rc = cli::run({"--seed", "99", "gradcheck"});
        std::cout.rdbuf(old);
        require(rc == 0, "gradcheck subcommand failed");
        return captured.str();
    };
    require(capture_gradcheck() == capture_gradcheck(), "gradcheck report not reproducible");

    fs::remove_all(base);
    return "pipeline outputs byte-identical across reruns and jobs 1/4";
}

}  // namespace

int main() {
    run_criterion(1, "gradient-suite", check_gradients);
    run_criterion(2, "art-identity-reduction", check_art_identity);
    run_criterion(3, "decoder-round-trip", check_decoder_round_trip);
    run_criterion(4, "grouping-oracle", check_grouping_oracle);
    run_criterion(5, "target-reconstruction", check_target_reconstruction);
    run_criterion(6, "oks-oracle", check_oks_oracle);
    run_criterion(7, "scoring-efficacy", check_scoring_efficacy);
    run_criterion(8, "tradeoff-loss-balance", check_tradeoff_balance);
    run_criterion(9, "cli-determinism", check_determinism);

    int failures = 0;
    for (const auto& result : g_results) {
        std::printf("[%s] %d. %-24s %s (%.1f s)\n", result.pass ? "PASS" : "FAIL", result.id,
                    result.name.c_str(), result.detail.c_str(), result.seconds);
        failures += result.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(g_results.size()) - failures,
                g_results.size());
    return failures == 0 ? 0 : 1;
}

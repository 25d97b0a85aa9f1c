#include "posedec/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "posedec/error.hpp"

namespace posedec {

namespace {

void validate_window(int window) {
    if (window < 3 || window % 2 == 0) fail_validation("nms window must be odd and at least 3");
}

std::vector<Peak> nms_channel(const Tensor& maps, std::size_t channel, int window, int top_n,
                              double threshold) {
    const auto h = static_cast<int>(maps.height());
    const auto w = static_cast<int>(maps.width());
    const int r = window / 2;

    std::vector<Peak> peaks;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = maps.at(channel, y, x);
            if (v < threshold) continue;
            bool keep = true;
            for (int wy = std::max(0, y - r); keep && wy <= std::min(h - 1, y + r); ++wy) {
                for (int wx = std::max(0, x - r); wx <= std::min(w - 1, x + r); ++wx) {
                    if (wy == y && wx == x) continue;
                    const double nv = maps.at(channel, wy, wx);
                    // Equal neighbors earlier in raster order win the tie.
                    if (nv > v || (nv == v && (wy < y || (wy == y && wx < x)))) {
                        keep = false;
                        break;
                    }
                }
            }
            if (keep) peaks.push_back({x, y, v});
        }
    }

    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
        return a.value > b.value;  // stable keeps raster order among equals
    });
    if (top_n >= 0 && peaks.size() > static_cast<std::size_t>(top_n))
        peaks.resize(static_cast<std::size_t>(top_n));
    return peaks;
}

Point refine_peak(const Tensor& maps, std::size_t channel, const Peak& peak) {
    const auto h = static_cast<int>(maps.height());
    const auto w = static_cast<int>(maps.width());
    Point p{static_cast<double>(peak.x), static_cast<double>(peak.y)};
    if (peak.x > 0 && peak.x < w - 1) {
        const double right = maps.at(channel, peak.y, peak.x + 1);
        const double left = maps.at(channel, peak.y, peak.x - 1);
        if (right > left)
            p.x += 0.25;
        else if (left > right)
            p.x -= 0.25;
    }
    if (peak.y > 0 && peak.y < h - 1) {
        const double down = maps.at(channel, peak.y + 1, peak.x);
        const double up = maps.at(channel, peak.y - 1, peak.x);
        if (down > up)
            p.y += 0.25;
        else if (up > down)
            p.y -= 0.25;
    }
    return p;
}

}  // namespace

std::vector<Peak> nms_peaks(const Tensor& map, int window, int top_n, double threshold) {
    if (map.ndim() != 3 || map.channels() != 1) fail_validation("nms_peaks expects a 1 x H x W map");
    validate_window(window);
    return nms_channel(map, 0, window, top_n, threshold);
}

std::vector<std::vector<KeypointCandidate>> extract_candidates(const Tensor& heatmaps,
                                                               const DecodeConfig& cfg) {
    if (heatmaps.ndim() != 3) fail_validation("keypoint heatmaps must be K x H x W");
    validate_window(cfg.nms_window);

    std::vector<std::vector<KeypointCandidate>> out(heatmaps.channels());
    for (std::size_t k = 0; k < heatmaps.channels(); ++k) {
        const auto peaks = nms_channel(heatmaps, k, cfg.nms_window, cfg.max_candidates,
                                       cfg.heat_threshold);
        out[k].reserve(peaks.size());
        for (const auto& peak : peaks) {
            const Point pos = cfg.refine ? refine_peak(heatmaps, k, peak)
                                         : Point{static_cast<double>(peak.x),
                                                 static_cast<double>(peak.y)};
            out[k].push_back({static_cast<int>(k), pos, peak.value});
        }
    }
    return out;
}

std::vector<GroupingCue> extract_cues(const Tensor& center, const Tensor& offsets,
                                      const DecodeConfig& cfg) {
    if (center.ndim() != 3 || center.channels() != 1)
        fail_validation("center heatmap must be 1 x H x W");
    if (offsets.ndim() != 3 || offsets.channels() % 2 != 0 ||
        offsets.height() != center.height() || offsets.width() != center.width())
        fail_validation("offset maps must be 2K x H x W and match the center heatmap");

    const std::size_t k = offsets.channels() / 2;
    const auto peaks = nms_channel(center, 0, cfg.nms_window, cfg.max_cues, cfg.heat_threshold);

    std::vector<GroupingCue> cues;
    cues.reserve(peaks.size());
    for (const auto& peak : peaks) {
        GroupingCue cue;
        cue.center = {static_cast<double>(peak.x), static_cast<double>(peak.y)};
        cue.center_heatvalue = peak.value;
        cue.keypoints.resize(k);
        for (std::size_t kp = 0; kp < k; ++kp) {
            cue.keypoints[kp].x = peak.x + offsets.at(2 * kp, peak.y, peak.x);
            cue.keypoints[kp].y = peak.y + offsets.at(2 * kp + 1, peak.y, peak.x);
        }
        cues.push_back(std::move(cue));
    }
    return cues;
}

std::vector<DecodedPose> group(const std::vector<GroupingCue>& cues,
                               const std::vector<std::vector<KeypointCandidate>>& candidates,
                               const Tensor& heatmaps, const DecodeConfig& cfg) {
    const std::size_t k = candidates.size();
    if (heatmaps.ndim() != 3 || heatmaps.channels() != k)
        fail_validation("heatmap channel count must match the candidate sets");

    std::vector<DecodedPose> poses;
    poses.reserve(cues.size());
    for (const auto& cue : cues) {
        if (cue.keypoints.size() != k)
            fail_validation("grouping cue keypoint count does not match the candidate sets");
        DecodedPose pose;
        pose.center_heatvalue = cue.center_heatvalue;
        pose.keypoints.resize(k);
        pose.kp_heatvalues.resize(k);
        pose.absorbed.assign(k, false);

        for (std::size_t kp = 0; kp < k; ++kp) {
            const Point regressed = cue.keypoints[kp];
            int best = -1;
            double best_d2 = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < candidates[kp].size(); ++i) {
                const Point c = candidates[kp][i].position;
                const double dx = c.x - regressed.x;
                const double dy = c.y - regressed.y;
                const double d2 = dx * dx + dy * dy;
                if (d2 < best_d2) {  // ties keep the earlier (stronger) candidate
                    best_d2 = d2;
                    best = static_cast<int>(i);
                }
            }
            if (best >= 0 && std::sqrt(best_d2) <= cfg.absorb_radius) {
                pose.keypoints[kp] = candidates[kp][best].position;
                pose.kp_heatvalues[kp] = candidates[kp][best].heatvalue;
                pose.absorbed[kp] = true;
            } else {
                pose.keypoints[kp] = regressed;
                pose.kp_heatvalues[kp] = bilinear_sample_channel(heatmaps, kp, regressed.x,
                                                                 regressed.y);
            }
        }
        poses.push_back(std::move(pose));
    }
    return poses;
}

std::vector<DecodedPose> decode(const Tensor& heatmaps, const Tensor& center,
                                const Tensor& offsets, const DecodeConfig& cfg) {
    const auto candidates = extract_candidates(heatmaps, cfg);
    const auto cues = extract_cues(center, offsets, cfg);
    return group(cues, candidates, heatmaps, cfg);
}

}  // namespace posedec

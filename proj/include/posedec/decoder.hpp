#pragma once

#include <vector>

#include "posedec/targets.hpp"
#include "posedec/tensor.hpp"

namespace posedec {

struct KeypointCandidate {
    int kp_type = 0;
    Point position;
    double heatvalue = 0.0;
};

// One regressed pose read off the center heatmap, prior to absorption.
struct GroupingCue {
    Point center;
    double center_heatvalue = 0.0;
    std::vector<Point> keypoints;  // center + stored offsets, one per type
};

struct DecodedPose {
    std::vector<Point> keypoints;
    std::vector<double> kp_heatvalues;
    double center_heatvalue = 0.0;
    std::vector<bool> absorbed;  // candidate absorbed vs regressed fallback
    double score = 0.0;
};

struct DecodeConfig {
    int max_candidates = 30;      // NMS keypoint candidates kept per type
    double heat_threshold = 0.01; // candidates and cues below this are dropped
    int max_cues = 30;            // grouping cues kept from the center heatmap
    double output_stride = 4.0;   // input-image pixels per map pixel
    double absorb_radius = 75.0 / 4.0;  // map pixels; 75 input pixels / stride
    int nms_window = 3;           // odd window side length
    bool refine = true;           // quarter-pixel peak refinement
};

struct Peak {
    int x = 0;
    int y = 0;
    double value = 0.0;
};

// Window maxima of a 1 x H x W map, value ties broken by raster order, sorted
// by value descending (raster order on equal values) and cut to top_n.
std::vector<Peak> nms_peaks(const Tensor& map, int window, int top_n, double threshold);

// Per-type candidate sets from the K x H x W keypoint heatmaps.
std::vector<std::vector<KeypointCandidate>> extract_candidates(const Tensor& heatmaps,
                                                               const DecodeConfig& cfg);

// Grouping cues: NMS centers plus the offset-regressed keypoints stored at
// each surviving center pixel.
std::vector<GroupingCue> extract_cues(const Tensor& center, const Tensor& offsets,
                                      const DecodeConfig& cfg);

// Absorb the nearest same-type candidate within the radius, independently per
// cue and keypoint; otherwise keep the regressed point with its heatvalue
// sampled from the keypoint heatmap. Candidates stay available to later cues.
std::vector<DecodedPose> group(const std::vector<GroupingCue>& cues,
                               const std::vector<std::vector<KeypointCandidate>>& candidates,
                               const Tensor& heatmaps, const DecodeConfig& cfg);

// Full pipeline: candidates, cues, then grouping.
std::vector<DecodedPose> decode(const Tensor& heatmaps, const Tensor& center,
                                const Tensor& offsets, const DecodeConfig& cfg);

}  // namespace posedec

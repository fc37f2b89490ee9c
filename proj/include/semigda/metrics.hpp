#pragma once

#include <string>
#include <vector>

#include "semigda/tensor.hpp"

namespace semigda {

// Segmentation metrics over binary (H,W) masks with values {0,1}.
// Conventions, fixed so results are bit-reproducible:
//  - dice/iou are percentages; both masks empty -> 100.
//  - hd95: 95th percentile (linear interpolation) of the pooled directed
//    boundary distances, Euclidean metric, boundary = 4-connectivity erosion
//    difference (borders count as background). Exactly one empty mask ->
//    image diagonal sqrt(H^2+W^2); both empty -> 0.
double dice_score(const Tensor& pred, const Tensor& gt);
double iou_score(const Tensor& pred, const Tensor& gt);
double hd95(const Tensor& pred, const Tensor& gt);

// Boundary map (H,W) in {0,1}: foreground pixels with at least one
// 4-neighbour outside the mask.
Tensor boundary_map(const Tensor& mask);

// Percentile with linear interpolation over a sorted-in-place copy; q in [0,100].
double percentile(std::vector<double> values, double q);

struct SampleMetrics {
    std::string id;
    double dice = 0.0;
    double iou = 0.0;
    double hd95 = 0.0;
};

struct MetricsReport {
    double dice_pct = 0.0;  // per-sample means
    double iou_pct = 0.0;
    double hd95 = 0.0;
    std::vector<SampleMetrics> per_sample;
};

MetricsReport aggregate_metrics(std::vector<SampleMetrics> per_sample);
void write_metrics_csv(const std::string& path, const MetricsReport& report);
void write_metrics_json(const std::string& path, const MetricsReport& report);

}  // namespace semigda

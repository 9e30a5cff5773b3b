#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plgan/tensor.hpp"

namespace plgan {

struct ConfusionCounts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp; fp += o.fp; fn += o.fn; tn += o.tn;
        return *this;
    }
};

/// Counts for the tolerance-relaxed metrics: how many predicted-positive
/// pixels lie within `tolerance_px` of some GT-positive pixel, and vice versa.
struct RelaxedCounts {
    std::int64_t matched_pred = 0, total_pred = 0;
    std::int64_t matched_gt = 0, total_gt = 0;
    double tolerance_px = 2.0;

    RelaxedCounts& operator+=(const RelaxedCounts& o) {
        matched_pred += o.matched_pred; total_pred += o.total_pred;
        matched_gt += o.matched_gt;     total_gt += o.total_gt;
        return *this;
    }
};

struct PixelMetrics {
    double precision = 0, recall = 0, iou = 0, f1 = 0, f_beta = 0;
    ConfusionCounts counts;
};

struct RelaxedMetrics {
    double correctness = 0, completeness = 0, quality = 0;
    RelaxedCounts counts;
};

enum class Aggregation { micro, macro };
enum class PixelDistance { euclidean, chebyshev };

std::string to_string(Aggregation a);
std::string to_string(PixelDistance d);
Aggregation aggregation_from_string(const std::string& name);
PixelDistance pixel_distance_from_string(const std::string& name);

struct EvalConfig {
    double tolerance_px = 2.0;
    double beta = 0.3;
    Aggregation aggregation = Aggregation::micro;
    PixelDistance distance = PixelDistance::euclidean;
};

struct ImageMetrics {
    std::string id;
    double precision = 0, recall = 0, iou = 0, f1 = 0, f_beta = 0;
    double correctness = 0, completeness = 0, quality = 0;
    ConfusionCounts counts;
    RelaxedCounts relaxed;
};

struct MetricsReport {
    double precision = 0, recall = 0, iou = 0, f1 = 0, f_beta = 0;
    double correctness = 0, completeness = 0, quality = 0;
    ConfusionCounts counts;
    RelaxedCounts relaxed;
    EvalConfig config;
    std::vector<ImageMetrics> per_image;
};

/// Squared Euclidean distance from every pixel to the nearest nonzero pixel
/// of `mask` (exact, Felzenszwalb-Huttenlocher). Empty mask gives huge values.
Tensor squared_euclidean_dt(const Tensor& mask);

/// Chebyshev (max-norm) distance to the nearest nonzero pixel, exact via
/// two chamfer passes over the 8-neighborhood.
Tensor chebyshev_dt(const Tensor& mask);

/// Precision / recall / IoU / F1 / F_beta over exact pixel overlap.
/// Inputs must be binary {0,1}; denominator-zero metrics are 0, except both
/// masks empty, where every metric is 1.
PixelMetrics pixel_metrics(const Tensor& pred, const Tensor& gt, double beta);

/// Correctness (relaxed precision), completeness (relaxed recall), and
/// quality = comp*corr / (comp - comp*corr + corr) under a pixel tolerance d.
RelaxedMetrics relaxed_metrics(const Tensor& pred, const Tensor& gt, double d,
                               PixelDistance distance = PixelDistance::euclidean);

/// Evaluate paired prediction/GT masks. micro: pool counts over all images,
/// then compute metrics once. macro: compute per image and average.
MetricsReport evaluate_dataset(const std::vector<Tensor>& preds, const std::vector<Tensor>& gts,
                               const EvalConfig& cfg, const std::vector<std::string>& ids = {});

std::string metrics_report_json(const MetricsReport& report);
/// Fixed-order CSV: header line plus one aggregate row.
std::string metrics_report_csv(const MetricsReport& report);

} // namespace plgan

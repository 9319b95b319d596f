#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace emu::metrics {

// Streaming first/second moments that merge exactly like concatenation.
struct MomentPool {
    std::size_t n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double v) {
        ++n;
        sum += v;
        sum_sq += v * v;
    }
    void merge(const MomentPool& o) {
        n += o.n;
        sum += o.sum;
        sum_sq += o.sum_sq;
    }
    std::optional<double> mean() const;
    std::optional<double> variance() const;  // population
    std::optional<double> stddev() const;
    std::optional<double> cv_percent() const;  // 100 * stddev / mean
    std::optional<double> rms() const;         // sqrt(sum_sq / n)
};

// Pearson correlation; undefined when either series is constant.
// Throws ShapeError on length mismatch or empty input.
std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b);

// Moran's I under rook adjacency on an h x w grid at unit weights. Cells with
// mask == 0 are excluded from the mean, the denominator, and the weights; a
// link only exists between two included cells. Undefined when fewer than two
// cells are included, no links survive, or the included field is constant.
// For each cell the four neighbor products are accumulated in ascending
// linear index order (up, left, right, down), so a brute-force pair scan
// reproduces the value bit for bit.
std::optional<double> morans_i(const std::vector<double>& z, const std::vector<std::uint8_t>& mask,
                               std::size_t h, std::size_t w);
// Convenience overload with every cell included.
std::optional<double> morans_i(const std::vector<double>& z, std::size_t h, std::size_t w);

// Binary cloud/clear confusion; "clear" is the positive class.
struct Confusion {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::size_t total() const { return tp + tn + fp + fn; }
    std::optional<double> accuracy() const;
    std::optional<double> sensitivity() const;  // TP / (TP + FN)
    std::optional<double> specificity() const;  // TN / (TN + FP)
    std::optional<double> precision() const;    // TP / (TP + FP)
};

// Applies the decision rule clear iff score > threshold. truth_clear must be
// 0/1. Throws ConfigError for thresholds outside [0, 1].
Confusion confusion_at(const std::vector<double>& score, const std::vector<double>& truth_clear,
                       double threshold);

struct RocPoint {
    double score;  // pixels with score >= this value are called clear
    double fpr;
    double tpr;
};

struct RocCurve {
    std::vector<RocPoint> points;  // starts at (0,0), ends at (1,1)
    std::optional<double> auc;     // trapezoid; undefined without both classes
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

// Threshold-free ROC over the distinct score values (descending sweep).
RocCurve roc_curve(const std::vector<double>& score, const std::vector<double>& truth_clear);

struct OperatingPoint {
    double threshold = 0.5;
    Confusion cm;
};

// The realizable threshold in [0, 1] maximizing accuracy; thresholds are
// midpoints between consecutive distinct scores. Ties keep the first (highest
// threshold) maximizer.
OperatingPoint best_accuracy_threshold(const std::vector<double>& score,
                                       const std::vector<double>& truth_clear);

double normal_cdf(double x);
// Inverse standard normal CDF (rational approximation plus one Halley step).
// Throws DomainError unless p is strictly inside (0, 1).
double normal_quantile(double p);

// Observed coverage of central predictive intervals: for each nominal level q
// the fraction of truth values within mean +- z * sqrt(var), z the standard
// normal (1+q)/2 quantile. Undefined entries when the input is empty.
std::vector<std::optional<double>> coverage_curve(const std::vector<double>& truth,
                                                  const std::vector<double>& mean,
                                                  const std::vector<double>& variance,
                                                  const std::vector<double>& levels);

}  // namespace emu::metrics

#include "emu/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "emu/core/error.hpp"

namespace emu::metrics {

std::optional<double> MomentPool::mean() const {
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::optional<double> MomentPool::variance() const {
    if (n == 0) return std::nullopt;
    const double m = sum / static_cast<double>(n);
    return std::max(0.0, sum_sq / static_cast<double>(n) - m * m);
}

std::optional<double> MomentPool::stddev() const {
    const auto v = variance();
    if (!v) return std::nullopt;
    return std::sqrt(*v);
}

std::optional<double> MomentPool::cv_percent() const {
    const auto m = mean();
    if (!m || *m == 0.0) return std::nullopt;
    return 100.0 * *stddev() / *m;
}

std::optional<double> MomentPool::rms() const {
    if (n == 0) return std::nullopt;
    return std::sqrt(sum_sq / static_cast<double>(n));
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw ShapeError("pearson: series lengths differ (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
    }
    if (a.empty()) throw ShapeError("pearson: empty series");
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

std::optional<double> morans_i(const std::vector<double>& z, const std::vector<std::uint8_t>& mask,
                               std::size_t h, std::size_t w) {
    if (h == 0 || w == 0 || z.size() != h * w) {
        throw ShapeError("morans_i: field size does not match the " + std::to_string(h) + "x" +
                         std::to_string(w) + " grid");
    }
    if (mask.size() != h * w) {
        throw ShapeError("morans_i: mask size does not match the " + std::to_string(h) + "x" +
                         std::to_string(w) + " grid");
    }
    if (h * w < 2) throw ShapeError("morans_i: grid needs at least two cells");
    std::size_t n = 0;
    double mean = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!mask[i]) continue;
        ++n;
        mean += z[i];
    }
    if (n < 2) return std::nullopt;
    mean /= static_cast<double>(n);
    std::vector<double> d(z.size(), 0.0);
    double den = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!mask[i]) continue;
        d[i] = z[i] - mean;
        den += d[i] * d[i];
    }
    if (den == 0.0) return std::nullopt;
    double num = 0.0;
    std::size_t links = 0;
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t i = y * w + x;
            if (!mask[i]) continue;
            if (y > 0 && mask[i - w]) {
                num += d[i] * d[i - w];
                ++links;
            }
            if (x > 0 && mask[i - 1]) {
                num += d[i] * d[i - 1];
                ++links;
            }
            if (x + 1 < w && mask[i + 1]) {
                num += d[i] * d[i + 1];
                ++links;
            }
            if (y + 1 < h && mask[i + w]) {
                num += d[i] * d[i + w];
                ++links;
            }
        }
    }
    if (links == 0) return std::nullopt;
    return (static_cast<double>(n) / static_cast<double>(links)) * (num / den);
}

std::optional<double> morans_i(const std::vector<double>& z, std::size_t h, std::size_t w) {
    return morans_i(z, std::vector<std::uint8_t>(z.size(), 1), h, w);
}

namespace {
double ratio(std::size_t a, std::size_t b) {
    return static_cast<double>(a) / static_cast<double>(b);
}

void check_binary_truth(const std::vector<double>& truth) {
    for (double v : truth) {
        if (v != 0.0 && v != 1.0) throw DataError("truth mask must be 0/1");
    }
}
}  // namespace

std::optional<double> Confusion::accuracy() const {
    if (total() == 0) return std::nullopt;
    return ratio(tp + tn, total());
}
std::optional<double> Confusion::sensitivity() const {
    if (tp + fn == 0) return std::nullopt;
    return ratio(tp, tp + fn);
}
std::optional<double> Confusion::specificity() const {
    if (tn + fp == 0) return std::nullopt;
    return ratio(tn, tn + fp);
}
std::optional<double> Confusion::precision() const {
    if (tp + fp == 0) return std::nullopt;
    return ratio(tp, tp + fp);
}

Confusion confusion_at(const std::vector<double>& score, const std::vector<double>& truth_clear,
                       double threshold) {
    if (score.size() != truth_clear.size()) {
        throw ShapeError("confusion_at: score/truth lengths differ");
    }
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ConfigError("cloud threshold must lie in [0, 1]");
    }
    check_binary_truth(truth_clear);
    Confusion c;
    for (std::size_t i = 0; i < score.size(); ++i) {
        const bool pred_clear = score[i] > threshold;
        const bool is_clear = truth_clear[i] == 1.0;
        if (pred_clear && is_clear) ++c.tp;
        else if (pred_clear && !is_clear) ++c.fp;
        else if (!pred_clear && is_clear) ++c.fn;
        else ++c.tn;
    }
    return c;
}

RocCurve roc_curve(const std::vector<double>& score, const std::vector<double>& truth_clear) {
    if (score.size() != truth_clear.size()) {
        throw ShapeError("roc_curve: score/truth lengths differ");
    }
    if (score.empty()) throw ShapeError("roc_curve: empty input");
    check_binary_truth(truth_clear);

    RocCurve out;
    for (double v : truth_clear) {
        if (v == 1.0) ++out.positives;
        else ++out.negatives;
    }
    std::vector<std::size_t> order(score.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return a < b;  // stable under duplicate scores
    });

    out.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    if (out.positives == 0 || out.negatives == 0) return out;  // auc stays undefined

    std::size_t tp = 0, fp = 0;
    double auc = 0.0;
    std::size_t k = 0;
    while (k < order.size()) {
        const double s = score[order[k]];
        while (k < order.size() && score[order[k]] == s) {
            if (truth_clear[order[k]] == 1.0) ++tp;
            else ++fp;
            ++k;
        }
        const RocPoint prev = out.points.back();
        const RocPoint cur{s, ratio(fp, out.negatives), ratio(tp, out.positives)};
        auc += (cur.fpr - prev.fpr) * (cur.tpr + prev.tpr) * 0.5;
        out.points.push_back(cur);
    }
    out.auc = auc;
    return out;
}

OperatingPoint best_accuracy_threshold(const std::vector<double>& score,
                                       const std::vector<double>& truth_clear) {
    if (score.size() != truth_clear.size()) {
        throw ShapeError("best_accuracy_threshold: score/truth lengths differ");
    }
    if (score.empty()) throw ShapeError("best_accuracy_threshold: empty input");
    check_binary_truth(truth_clear);
    for (double s : score) {
        if (!(s >= 0.0 && s <= 1.0)) throw DataError("scores must lie in [0, 1]");
    }

    std::vector<double> distinct = score;
    std::sort(distinct.begin(), distinct.end(), std::greater<>());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    // Candidate thresholds realize every achievable decision set of the rule
    // "clear iff score > t": above all scores, between neighbors, below all.
    std::vector<double> candidates;
    candidates.push_back(std::min(1.0, 0.5 * (1.0 + distinct.front())));
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        candidates.push_back(0.5 * (distinct[i] + distinct[i + 1]));
    }
    candidates.push_back(0.5 * distinct.back());

    OperatingPoint best;
    double best_acc = -1.0;
    for (double t : candidates) {
        const Confusion c = confusion_at(score, truth_clear, t);
        const double acc = *c.accuracy();
        if (acc > best_acc) {
            best_acc = acc;
            best = {t, c};
        }
    }
    return best;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("normal_quantile requires a probability strictly inside (0, 1)");
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley step against the erf-based CDF tightens the approximation to
    // full double precision.
    const double err = normal_cdf(x) - p;
    const double u = err * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

std::vector<std::optional<double>> coverage_curve(const std::vector<double>& truth,
                                                  const std::vector<double>& mean,
                                                  const std::vector<double>& variance,
                                                  const std::vector<double>& levels) {
    if (truth.size() != mean.size() || truth.size() != variance.size()) {
        throw ShapeError("coverage_curve: truth/mean/variance lengths differ");
    }
    std::vector<std::optional<double>> out(levels.size());
    for (std::size_t li = 0; li < levels.size(); ++li) {
        const double q = levels[li];
        if (!(q > 0.0 && q < 1.0)) {
            throw DomainError("coverage level must lie strictly inside (0, 1)");
        }
        if (truth.empty()) continue;
        const double zq = normal_quantile(0.5 * (1.0 + q));
        std::size_t hits = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (variance[i] < 0.0) throw DomainError("coverage_curve: negative variance");
            const double half = zq * std::sqrt(variance[i]);
            if (std::fabs(truth[i] - mean[i]) <= half) ++hits;
        }
        out[li] = ratio(hits, truth.size());
    }
    return out;
}

}  // namespace emu::metrics

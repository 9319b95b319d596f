#include "emu/metrics/report.hpp"

#include <cmath>

#include "emu/core/error.hpp"
#include "emu/core/text.hpp"
#include "emu/io/atomic_file.hpp"

namespace emu::metrics {

namespace {
constexpr const char* kUndefined = "undefined";
}

void EvalReport::put(const std::string& key, double v) { kv_[key] = format_double(v); }

void EvalReport::put(const std::string& key, const std::optional<double>& v) {
    kv_[key] = v ? format_double(*v) : kUndefined;
}

void EvalReport::put_count(const std::string& key, std::size_t v) {
    kv_[key] = std::to_string(v);
}

void EvalReport::put_text(const std::string& key, const std::string& v) { kv_[key] = v; }

const std::string& EvalReport::text(const std::string& key) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw DataError("report has no entry '" + key + "'");
    return it->second;
}

double EvalReport::number(const std::string& key) const {
    const auto v = maybe_number(key);
    if (!v) throw DataError("report entry '" + key + "' is undefined");
    return *v;
}

std::optional<double> EvalReport::maybe_number(const std::string& key) const {
    const std::string& s = text(key);
    if (s == kUndefined) return std::nullopt;
    return parse_double(s, "report entry '" + key + "'");
}

std::string EvalReport::to_text() const { return write_kv_block(kv_); }

void EvalReport::save(const std::filesystem::path& path) const {
    io::atomic_write_file(path, to_text());
}

EvalReport EvalReport::load(const std::filesystem::path& path) {
    EvalReport r;
    r.kv_ = parse_kv_block(io::read_file(path), "report " + path.string());
    return r;
}

void TilePrediction::validate(std::size_t bands) const {
    const std::size_t n = height * width;
    if (n == 0) throw ShapeError("tile prediction has an empty grid");
    if (truth_sr.size() != bands || pred_sr.size() != bands) {
        throw ShapeError("tile prediction must carry " + std::to_string(bands) +
                         " truth and predicted bands");
    }
    if (!pred_var.empty() && pred_var.size() != bands) {
        throw ShapeError("predicted variance must be absent or per-band");
    }
    auto check_len = [n](const std::vector<double>& v, const char* what) {
        if (v.size() != n) {
            throw ShapeError(std::string(what) + " length does not match the grid");
        }
    };
    for (std::size_t b = 0; b < bands; ++b) {
        check_len(truth_sr[b], "truth band");
        check_len(pred_sr[b], "predicted band");
        if (!pred_var.empty()) check_len(pred_var[b], "variance band");
    }
    check_len(truth_clear, "truth mask");
    check_len(p_clear, "clear probability");
    if (!class_map.empty()) check_len(class_map, "class map");
    for (double v : truth_clear) {
        if (v != 0.0 && v != 1.0) throw DataError("truth mask must be 0/1");
    }
}

void EvalAccumulator::CorrPool::add(double a, double b) {
    ++n;
    sa += a;
    sb += b;
    saa += a * a;
    sbb += b * b;
    sab += a * b;
}

std::optional<double> EvalAccumulator::CorrPool::r() const {
    if (n == 0) return std::nullopt;
    const double dn = static_cast<double>(n);
    const double cov = sab - sa * sb / dn;
    const double va = saa - sa * sa / dn;
    const double vb = sbb - sb * sb / dn;
    if (va <= 0.0 || vb <= 0.0) return std::nullopt;
    return cov / std::sqrt(va * vb);
}

EvalAccumulator::EvalAccumulator(EvalConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.bands == 0) throw ConfigError("evaluation needs at least one band");
    if (!(cfg_.cloud_threshold >= 0.0 && cfg_.cloud_threshold <= 1.0)) {
        throw ConfigError("cloud threshold must lie in [0, 1]");
    }
    sq_err_.resize(cfg_.bands);
    truth_stats_.resize(cfg_.bands);
    pred_stats_.resize(cfg_.bands);
    var_stats_.resize(cfg_.bands);
    corr_.resize(cfg_.bands);
    moran_truth_.resize(cfg_.bands);
    moran_pred_.resize(cfg_.bands);
    cal_hits_.assign(cfg_.calibration_levels.size(), 0);
}

void EvalAccumulator::add_tile(const TilePrediction& t) {
    t.validate(cfg_.bands);
    const std::size_t n = t.height * t.width;
    ++tiles_;
    pixels_total_ += n;
    if (t.pred_var.empty()) have_variance_ = false;

    scores_.insert(scores_.end(), t.p_clear.begin(), t.p_clear.end());
    truth_labels_.insert(truth_labels_.end(), t.truth_clear.begin(), t.truth_clear.end());

    std::vector<double> zq(cfg_.calibration_levels.size());
    for (std::size_t li = 0; li < zq.size(); ++li) {
        zq[li] = normal_quantile(0.5 * (1.0 + cfg_.calibration_levels[li]));
    }

    for (std::size_t i = 0; i < n; ++i) {
        const bool truth_clear = t.truth_clear[i] == 1.0;
        const bool pred_clear = t.p_clear[i] > cfg_.cloud_threshold;
        if (truth_clear) ++pixels_truth_clear_;
        if (!(truth_clear && pred_clear)) continue;
        ++pixels_evaluated_;

        const long long cls =
            t.class_map.empty() ? -1 : static_cast<long long>(std::llround(t.class_map[i]));
        auto* stratum = t.class_map.empty() ? nullptr : &strata_[cls];
        if (stratum && stratum->second.empty()) stratum->second.resize(cfg_.bands);
        if (stratum) ++stratum->first;

        for (std::size_t b = 0; b < cfg_.bands; ++b) {
            const double truth = t.truth_sr[b][i];
            const double pred = t.pred_sr[b][i];
            const double err = pred - truth;
            sq_err_[b].add(err);
            sq_err_all_.add(err);
            truth_stats_[b].add(truth);
            pred_stats_[b].add(pred);
            corr_[b].add(truth, pred);
            if (!t.pred_var.empty()) var_stats_[b].add(t.pred_var[b][i]);
            if (stratum) stratum->second[b].add(err);
        }
        // Marginal coverage pooled over (pixel, band) pairs.
        if (!t.pred_var.empty()) {
            cal_n_ += cfg_.bands;
            for (std::size_t b = 0; b < cfg_.bands; ++b) {
                const double gap = std::fabs(t.truth_sr[b][i] - t.pred_sr[b][i]);
                const double sd = std::sqrt(std::max(0.0, t.pred_var[b][i]));
                for (std::size_t li = 0; li < zq.size(); ++li) {
                    if (gap <= zq[li] * sd) ++cal_hits_[li];
                }
            }
        }
    }

    // Spatial autocorrelation is compared where the teacher is valid, so both
    // fields use the truth clear mask.
    std::vector<std::uint8_t> clear_mask(n);
    for (std::size_t i = 0; i < n; ++i) clear_mask[i] = t.truth_clear[i] == 1.0 ? 1 : 0;
    for (std::size_t b = 0; b < cfg_.bands; ++b) {
        if (const auto mi = morans_i(t.truth_sr[b], clear_mask, t.height, t.width)) {
            moran_truth_[b].add(*mi);
        }
        if (const auto mi = morans_i(t.pred_sr[b], clear_mask, t.height, t.width)) {
            moran_pred_[b].add(*mi);
        }
    }
}

EvalReport EvalAccumulator::report() const {
    if (tiles_ == 0) throw DataError("no tiles were evaluated");
    EvalReport r;
    r.put_count("tiles", tiles_);
    r.put_count("pixels.total", pixels_total_);
    r.put_count("pixels.truth_clear", pixels_truth_clear_);
    r.put_count("pixels.evaluated", pixels_evaluated_);
    r.put("cloud.threshold", cfg_.cloud_threshold);

    const Confusion cm = confusion_at(scores_, truth_labels_, cfg_.cloud_threshold);
    r.put_count("cloud.tp", cm.tp);
    r.put_count("cloud.tn", cm.tn);
    r.put_count("cloud.fp", cm.fp);
    r.put_count("cloud.fn", cm.fn);
    r.put("cloud.accuracy", cm.accuracy());
    r.put("cloud.sensitivity", cm.sensitivity());
    r.put("cloud.specificity", cm.specificity());
    r.put("cloud.precision", cm.precision());
    r.put("cloud.auc", roc_curve(scores_, truth_labels_).auc);

    const OperatingPoint best = best_accuracy_threshold(scores_, truth_labels_);
    r.put("cloud.best.threshold", best.threshold);
    r.put("cloud.best.accuracy", best.cm.accuracy());

    r.put("sr.rmse.all", sq_err_all_.rms());
    for (std::size_t b = 0; b < cfg_.bands; ++b) {
        const std::string sb = std::to_string(b);
        r.put("sr.rmse.b" + sb, sq_err_[b].rms());
        r.put("sr.bias.b" + sb, sq_err_[b].mean());
        r.put("sr.pearson.b" + sb, corr_[b].r());
        r.put("sr.mean.truth.b" + sb, truth_stats_[b].mean());
        r.put("sr.mean.pred.b" + sb, pred_stats_[b].mean());
        r.put("sr.cv.truth.b" + sb, truth_stats_[b].cv_percent());
        r.put("sr.cv.pred.b" + sb, pred_stats_[b].cv_percent());
        r.put("spatial.moran.truth.b" + sb, moran_truth_[b].mean());
        r.put("spatial.moran.pred.b" + sb, moran_pred_[b].mean());
        r.put("uncertainty.mean_var.b" + sb,
              have_variance_ ? var_stats_[b].mean() : std::nullopt);
    }

    for (std::size_t li = 0; li < cfg_.calibration_levels.size(); ++li) {
        const int pct = static_cast<int>(std::llround(100.0 * cfg_.calibration_levels[li]));
        const std::string key = "calibration.q" + std::to_string(pct);
        if (have_variance_ && cal_n_ > 0) {
            r.put(key, static_cast<double>(cal_hits_[li]) / static_cast<double>(cal_n_));
        } else {
            r.put(key, std::nullopt);
        }
    }

    for (const auto& [cls, data] : strata_) {
        const std::string prefix = "strata.c" + std::to_string(cls) + ".";
        r.put_count(prefix + "count", data.first);
        r.put_count(prefix + "low_support", data.first < cfg_.strata_min_pixels ? 1 : 0);
        for (std::size_t b = 0; b < cfg_.bands; ++b) {
            r.put(prefix + "rmse.b" + std::to_string(b), data.second[b].rms());
        }
    }
    return r;
}

}  // namespace emu::metrics

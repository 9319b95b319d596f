#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "emu/metrics/metrics.hpp"

namespace emu::metrics {

// Canonical flat key/value report. Serialization is key-sorted with full
// double round-trip precision and contains no paths or timestamps, so equal
// evaluations produce byte-identical files.
class EvalReport {
public:
    void put(const std::string& key, double v);
    void put(const std::string& key, const std::optional<double>& v);  // "undefined"
    void put_count(const std::string& key, std::size_t v);
    void put_text(const std::string& key, const std::string& v);

    bool has(const std::string& key) const { return kv_.count(key) != 0; }
    const std::string& text(const std::string& key) const;        // throws DataError
    double number(const std::string& key) const;                  // throws DataError
    std::optional<double> maybe_number(const std::string& key) const;
    const std::map<std::string, std::string>& values() const { return kv_; }

    std::string to_text() const;
    void save(const std::filesystem::path& path) const;
    static EvalReport load(const std::filesystem::path& path);

private:
    std::map<std::string, std::string> kv_;
};

struct EvalConfig {
    std::size_t bands = 6;
    double cloud_threshold = 0.5;
    std::vector<double> calibration_levels = {0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
    std::size_t strata_min_pixels = 100;
};

// One evaluated tile: truth channels plus the emulator prediction, all
// row-major over the same grid. pred_var may be empty for point predictions.
struct TilePrediction {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::vector<double>> truth_sr;   // [band][pixel]
    std::vector<double> truth_clear;             // 0/1
    std::vector<double> class_map;               // landcover ids; may be empty
    std::vector<std::vector<double>> pred_sr;    // predictive mean, [band][pixel]
    std::vector<std::vector<double>> pred_var;   // predictive variance or empty
    std::vector<double> p_clear;                 // clear probability

    void validate(std::size_t bands) const;  // throws ShapeError / DataError
};

// Pools tiles into one deterministic report. Reflectance metrics condition on
// pixels that are truth-clear AND called clear at the configured threshold;
// spatial statistics use the full grids; classification metrics pool every
// pixel.
class EvalAccumulator {
public:
    explicit EvalAccumulator(EvalConfig cfg);

    void add_tile(const TilePrediction& t);
    EvalReport report() const;  // throws DataError when no tiles were added

private:
    struct CorrPool {
        std::size_t n = 0;
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        void add(double a, double b);
        std::optional<double> r() const;
    };

    EvalConfig cfg_;
    std::size_t tiles_ = 0;
    std::size_t pixels_total_ = 0;
    std::size_t pixels_truth_clear_ = 0;
    std::size_t pixels_evaluated_ = 0;
    bool have_variance_ = true;

    std::vector<double> scores_, truth_labels_;      // pooled classification inputs
    std::vector<MomentPool> sq_err_;                 // per band, evaluated pixels
    MomentPool sq_err_all_;
    std::vector<MomentPool> truth_stats_, pred_stats_, var_stats_;
    std::vector<CorrPool> corr_;
    std::vector<MomentPool> moran_truth_, moran_pred_;  // per band, one sample per tile
    std::vector<std::size_t> cal_hits_;
    std::size_t cal_n_ = 0;
    std::map<long long, std::pair<std::size_t, std::vector<MomentPool>>> strata_;
};

}  // namespace emu::metrics

#pragma once

#include <cstdint>
#include <vector>

#include "emu/ad/tensor.hpp"
#include "emu/model/dc_model.hpp"

namespace emu::model {

// Per-pixel predictive moments for one input stack.
struct PredictiveDistribution {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t bands = 0;
    ad::Tensor mean;        // [H, W, bands]
    ad::Tensor variance;    // [H, W, bands], total predictive variance
    ad::Tensor clear_prob;  // [H, W]
    std::size_t samples = 0;
};

// Streaming estimator of E[y] and Var[y] from pass-wise means and variances:
//   E[y]   = avg_t yhat_t
//   Var[y] = avg_t (yhat_t^2 + var_t) - E[y]^2   (clamped at zero)
class MomentAccumulator {
public:
    explicit MomentAccumulator(std::size_t n);
    void add_pass(const double* yhat, const double* var);
    std::size_t passes() const { return passes_; }
    void finalize(double* mean, double* variance) const;

private:
    std::size_t n_;
    std::size_t passes_ = 0;
    std::vector<double> sum_y_;
    std::vector<double> sum_y2v_;
};

// T stochastic passes with per-pass seeded gate noise. x is [1, H, W, C].
PredictiveDistribution mc_predict(DcModel& m, const ad::Tensor& x, std::size_t samples,
                                  std::uint64_t seed);

// Single expectation-mode pass; variance is the aleatoric head output alone.
PredictiveDistribution static_predict(DcModel& m, const ad::Tensor& x);

// 1 = clear where clear_prob exceeds the threshold (ties count as cloud).
ad::Tensor classify_cloud(const ad::Tensor& clear_prob, double threshold);

}  // namespace emu::model

#include "emu/model/predict.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "emu/ad/graph.hpp"
#include "emu/core/error.hpp"
#include "emu/core/parallel.hpp"

namespace emu::model {

using ad::Graph;
using ad::Tensor;

MomentAccumulator::MomentAccumulator(std::size_t n)
    : n_(n), sum_y_(n, 0.0), sum_y2v_(n, 0.0) {}

void MomentAccumulator::add_pass(const double* yhat, const double* var) {
    for (std::size_t i = 0; i < n_; ++i) {
        sum_y_[i] += yhat[i];
        sum_y2v_[i] += yhat[i] * yhat[i] + var[i];
    }
    ++passes_;
}

void MomentAccumulator::finalize(double* mean, double* variance) const {
    if (passes_ == 0) throw DomainError("moment accumulator finalized with no passes");
    const double inv = 1.0 / static_cast<double>(passes_);
    for (std::size_t i = 0; i < n_; ++i) {
        const double m = sum_y_[i] * inv;
        mean[i] = m;
        variance[i] = std::max(0.0, sum_y2v_[i] * inv - m * m);
    }
}

namespace {

constexpr std::size_t kPixelChunk = 2048;

double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// One stochastic (or expectation, when noise is null) pass over the full
// input. Outputs are flattened pixel-major: yhat/var get n*bands values,
// clear_prob gets n. Pixelwise architectures run in bounded-memory chunks;
// convolutional ones need the whole raster at once.
void forward_region(DcModel& m, const Tensor& x, const GateNoise* noise,
                    double* yhat, double* var, double* clear_prob) {
    const std::size_t bands = m.config().bands;
    const std::size_t c = m.config().input_channels;
    const std::size_t n = x.dim(0) * x.dim(1) * x.dim(2);

    auto emit = [&](const Head& head, std::size_t row0, std::size_t rows) {
        const Tensor& y = head.yhat.value();
        const Tensor& s = head.log_var.value();
        const Tensor& phi = head.phi.value();
        std::memcpy(yhat + row0 * bands, y.data(), rows * bands * sizeof(double));
        for (std::size_t i = 0; i < rows * bands; ++i) {
            var[row0 * bands + i] = std::exp(s[i]);
        }
        for (std::size_t i = 0; i < rows; ++i) {
            clear_prob[row0 + i] = sigmoid_d(phi[i]);
        }
    };

    if (m.config().arch == Arch::dcfc) {
        const std::size_t chunks = (n + kPixelChunk - 1) / kPixelChunk;
        parallel_for(chunks, [&](std::size_t ci) {
            const std::size_t row0 = ci * kPixelChunk;
            const std::size_t rows = std::min(kPixelChunk, n - row0);
            Tensor slab({1, 1, rows, c});
            std::memcpy(slab.data(), x.data() + row0 * c, rows * c * sizeof(double));
            Graph g(false);
            Head head = m.forward(g, slab, noise);
            emit(head, row0, rows);
        });
    } else {
        Graph g(false);
        Head head = m.forward(g, x, noise);
        emit(head, 0, n);
    }
}

void require_tile_input(const Tensor& x) {
    if (x.rank() != 4 || x.dim(0) != 1) {
        throw ShapeError("predict expects a [1, H, W, C] input, got " + x.shape_str());
    }
}

PredictiveDistribution make_result(const Tensor& x, std::size_t bands) {
    PredictiveDistribution d;
    d.height = x.dim(1);
    d.width = x.dim(2);
    d.bands = bands;
    d.mean = Tensor({d.height, d.width, bands});
    d.variance = Tensor({d.height, d.width, bands});
    d.clear_prob = Tensor({d.height, d.width});
    return d;
}

}  // namespace

PredictiveDistribution mc_predict(DcModel& m, const Tensor& x, std::size_t samples,
                                  std::uint64_t seed) {
    require_tile_input(x);
    if (samples == 0) throw ConfigError("mc_predict: sample count must be at least 1");
    const std::size_t bands = m.config().bands;
    const std::size_t n = x.dim(1) * x.dim(2);

    PredictiveDistribution d = make_result(x, bands);
    MomentAccumulator acc(n * bands);
    std::vector<double> p_sum(n, 0.0);
    std::vector<double> yhat(n * bands), var(n * bands), p(n);
    for (std::size_t t = 0; t < samples; ++t) {
        Rng rng(split_seed(seed, t));
        GateNoise noise = m.sample_noise(rng);
        forward_region(m, x, &noise, yhat.data(), var.data(), p.data());
        acc.add_pass(yhat.data(), var.data());
        for (std::size_t i = 0; i < n; ++i) p_sum[i] += p[i];
    }
    acc.finalize(d.mean.data(), d.variance.data());
    const double inv = 1.0 / static_cast<double>(samples);
    for (std::size_t i = 0; i < n; ++i) d.clear_prob[i] = p_sum[i] * inv;
    d.samples = samples;
    return d;
}

PredictiveDistribution static_predict(DcModel& m, const Tensor& x) {
    require_tile_input(x);
    const std::size_t bands = m.config().bands;
    const std::size_t n = x.dim(1) * x.dim(2);
    PredictiveDistribution d = make_result(x, bands);
    std::vector<double> yhat(n * bands), var(n * bands), p(n);
    forward_region(m, x, nullptr, yhat.data(), var.data(), p.data());
    std::memcpy(d.mean.data(), yhat.data(), n * bands * sizeof(double));
    std::memcpy(d.variance.data(), var.data(), n * bands * sizeof(double));
    std::memcpy(d.clear_prob.data(), p.data(), n * sizeof(double));
    d.samples = 0;
    return d;
}

Tensor classify_cloud(const Tensor& clear_prob, double threshold) {
    if (threshold < 0.0 || threshold > 1.0) {
        throw ConfigError("cloud threshold must lie in [0, 1]");
    }
    Tensor out(clear_prob.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = clear_prob[i] > threshold ? 1.0 : 0.0;
    }
    return out;
}

}  // namespace emu::model

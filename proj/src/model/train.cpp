#include "emu/model/train.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <string>

#include "emu/core/error.hpp"
#include "emu/core/text.hpp"

namespace emu::model {

using ad::Graph;
using ad::Tensor;
using ad::Var;

namespace {

// Portable Fisher-Yates so shuffles do not depend on the standard library's
// std::shuffle implementation.
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

Batch assemble(const std::vector<Batch>& patches, const std::vector<std::size_t>& idx,
               std::size_t first, std::size_t count) {
    const Batch& p0 = patches[idx[first]];
    const std::size_t h = p0.x.dim(1), w = p0.x.dim(2);
    const std::size_t c = p0.x.dim(3), bands = p0.target.dim(3);
    Batch out;
    out.x = Tensor({count, h, w, c});
    out.target = Tensor({count, h, w, bands});
    out.clear = Tensor({count, h, w});
    for (std::size_t k = 0; k < count; ++k) {
        const Batch& p = patches[idx[first + k]];
        std::memcpy(out.x.data() + k * h * w * c, p.x.data(), h * w * c * sizeof(double));
        std::memcpy(out.target.data() + k * h * w * bands, p.target.data(),
                    h * w * bands * sizeof(double));
        std::memcpy(out.clear.data() + k * h * w, p.clear.data(), h * w * sizeof(double));
    }
    return out;
}

}  // namespace

TrainResult train(DcModel& model, const std::vector<Batch>& patches, const TrainConfig& cfg,
                  const Validator& validator) {
    if (cfg.epochs == 0) throw ConfigError("train: epochs must be at least 1");
    if (cfg.batch_size == 0) throw ConfigError("train: batch_size must be at least 1");
    if (patches.empty()) throw DataError("train: no training patches");

    const ModelConfig& mc = model.config();
    std::size_t n_pixels = 0;
    const std::size_t h0 = patches[0].x.dim(1), w0 = patches[0].x.dim(2);
    for (const Batch& p : patches) {
        p.validate(mc.input_channels, mc.bands);
        if (p.x.dim(0) != 1 || p.x.dim(1) != h0 || p.x.dim(2) != w0) {
            throw DataError("train: patches must share a single [1, h, w] geometry");
        }
        n_pixels += p.pixels();
    }

    std::vector<ad::Parameter*> params = model.parameters();
    ad::AdamConfig acfg;
    acfg.lr = cfg.learning_rate;
    ad::Adam opt(acfg);

    std::vector<std::size_t> order(patches.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        Rng shuffle_rng(split_seed(cfg.seed, epoch));
        Rng noise_rng(split_seed(cfg.seed, 0x100000ULL + epoch));
        shuffle_indices(order, shuffle_rng);

        double sum_total = 0.0, sum_bce = 0.0, sum_reg = 0.0, sum_kl = 0.0;
        std::size_t steps_this_epoch = 0;
        for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - first);
            Batch batch = assemble(patches, order, first, count);

            Graph g;
            GateNoise noise = model.sample_noise(noise_rng);
            Head head = model.forward(g, batch.x, &noise);
            LossTerms lt = dc_loss(g, head, batch, mc.bands);
            double kl_value = 0.0;
            Var total = lt.total;
            if (cfg.use_regularizer) {
                Var kl = model.kl_regularizer(g, n_pixels);
                kl_value = kl.value().item();
                total = ad::add(total, kl);
            }
            const double total_value = total.value().item();
            if (!std::isfinite(total_value)) {
                throw TrainingError(
                    "non-finite loss",
                    "epoch " + std::to_string(epoch) + " step " +
                        std::to_string(steps_this_epoch) + ": bce=" +
                        format_double(lt.bce.value().item()) + " regression=" +
                        format_double(lt.regression.value().item()) + " regularizer=" +
                        format_double(kl_value));
            }
            g.backward(total);
            opt.step(params);

            sum_total += total_value;
            sum_bce += lt.bce.value().item();
            sum_reg += lt.regression.value().item();
            sum_kl += kl_value;
            ++steps_this_epoch;
            ++result.steps;
        }

        EpochLog log;
        log.epoch = epoch;
        const double inv = 1.0 / static_cast<double>(steps_this_epoch);
        log.total = sum_total * inv;
        log.bce = sum_bce * inv;
        log.regression = sum_reg * inv;
        log.regularizer = sum_kl * inv;
        log.dropout_rates = model.dropout_rates();
        if (validator) log.val_metric = validator(model);
        result.epochs.push_back(std::move(log));
    }
    return result;
}

}  // namespace emu::model

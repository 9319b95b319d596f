#include "emu/model/loss.hpp"

#include <string>

#include "emu/core/error.hpp"

namespace emu::model {

using ad::Tensor;
using ad::Var;

void Batch::validate(std::size_t input_channels, std::size_t bands) const {
    if (x.rank() != 4) throw ShapeError("batch input must be rank 4, got " + x.shape_str());
    if (x.dim(3) != input_channels) {
        throw ShapeError("batch input has " + std::to_string(x.dim(3)) +
                         " channels, model expects " + std::to_string(input_channels));
    }
    if (target.rank() != 4 || target.dim(3) != bands) {
        throw ShapeError("batch target must be [B,H,W," + std::to_string(bands) + "], got " +
                         target.shape_str());
    }
    if (clear.rank() != 3) throw ShapeError("batch mask must be rank 3, got " + clear.shape_str());
    for (int d = 0; d < 3; ++d) {
        const std::size_t dd = static_cast<std::size_t>(d);
        if (target.dim(dd) != x.dim(dd) || clear.dim(dd) != x.dim(dd)) {
            throw ShapeError("batch input/target/mask leading dims disagree");
        }
    }
    if (pixels() == 0) throw DataError("batch contains no pixels");
    for (std::size_t i = 0; i < clear.size(); ++i) {
        if (clear[i] != 0.0 && clear[i] != 1.0) {
            throw DataError("batch mask values must be 0 or 1");
        }
    }
}

LossTerms dc_loss(ad::Graph& g, const Head& head, const Batch& batch, std::size_t bands) {
    const std::size_t n = batch.pixels();
    if (n == 0) throw DataError("dc_loss: batch contains no pixels");

    // Cloud/clear cross-entropy over every pixel; target 1 = clear.
    Tensor clear_col({n, 1}, std::vector<double>(batch.clear.values()));
    LossTerms out;
    out.bce = ad::bce_with_logits_mean(head.phi, clear_col);

    // Heteroscedastic regression on clear pixels only.
    std::size_t clear_count = 0;
    Tensor mask({n, bands});
    for (std::size_t i = 0; i < n; ++i) {
        const double m = batch.clear[i];
        if (m == 1.0) ++clear_count;
        for (std::size_t b = 0; b < bands; ++b) mask.at(i, b) = m;
    }
    out.clear_count = clear_count;

    Tensor target({n, bands}, std::vector<double>(batch.target.values()));
    Var resid = ad::sub(head.yhat, g.constant(std::move(target)));
    Var sq = ad::mul(resid, resid);
    Var precision = ad::exp(ad::scale(head.log_var, -1.0));
    Var per_elem = ad::add(ad::scale(ad::mul(precision, sq), 0.5), ad::scale(head.log_var, 0.5));
    Var masked = ad::mul(per_elem, g.constant(std::move(mask)));
    out.regression = ad::scale(ad::reduce_sum(masked), 1.0 / static_cast<double>(n));

    out.total = ad::add(out.bce, out.regression);
    return out;
}

}  // namespace emu::model

#pragma once

#include <cstddef>

#include "emu/ad/graph.hpp"
#include "emu/model/dc_model.hpp"

namespace emu::model {

// One training example or assembled minibatch.
struct Batch {
    ad::Tensor x;       // [B, H, W, C]
    ad::Tensor target;  // [B, H, W, bands] reference surface reflectance
    ad::Tensor clear;   // [B, H, W], 1 = clear, 0 = cloud

    void validate(std::size_t input_channels, std::size_t bands) const;
    std::size_t pixels() const { return clear.size(); }
};

struct LossTerms {
    ad::Var total;         // bce + regression (regularizer added by the caller)
    ad::Var bce;           // mean cloud/clear cross-entropy over all pixels
    ad::Var regression;    // masked heteroscedastic term, normalized by pixels
    std::size_t clear_count = 0;
};

// Two-part objective over one batch. The classification part averages over
// every pixel; the regression part sums 0.5*exp(-s)*(y-yhat)^2 + 0.5*s over
// clear pixels and bands, divided by the total pixel count. Cloudy-only
// batches therefore degrade to pure classification.
LossTerms dc_loss(ad::Graph& g, const Head& head, const Batch& batch, std::size_t bands);

}  // namespace emu::model

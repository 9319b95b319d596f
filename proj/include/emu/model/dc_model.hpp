#pragma once

#include <cstdint>
#include <vector>

#include "emu/ad/graph.hpp"
#include "emu/core/rng.hpp"
#include "emu/model/config.hpp"

namespace emu::model {

// Flattened pixel-major head outputs for one forward pass over [B,H,W,C]
// input: N = B*H*W rows.
struct Head {
    ad::Var yhat;     // [N, bands]
    ad::Var log_var;  // [N, bands], clamped to [-10, 10]
    ad::Var phi;      // [N, 1] cloud/clear logit
};

// One uniform draw per dropout layer, shared across batch and spatial dims.
struct GateNoise {
    std::vector<ad::Tensor> u;
};

class DcModel {
public:
    // Seeded He/near-zero initialization.
    DcModel(ModelConfig cfg, std::uint64_t seed);
    // Shapes allocated, values unset; used by the checkpoint loader.
    explicit DcModel(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }

    // Declaration order is the serialization order.
    std::vector<ad::Parameter*> parameters();
    std::vector<const ad::Parameter*> parameters() const;
    std::size_t parameter_count() const;

    std::size_t dropout_layer_count() const { return thetas_.size(); }
    std::vector<double> dropout_rates() const;

    GateNoise sample_noise(Rng& rng) const;

    // noise == nullptr runs in expectation mode (the unit-mean gates reduce
    // to the identity); otherwise the provided per-layer draws are applied.
    Head forward(ad::Graph& g, const ad::Tensor& x, const GateNoise* noise);

    // Sum of the per-layer dropout regularizers; n_train_pixels sets the
    // data-size scaling of both the weight and the entropy term.
    ad::Var kl_regularizer(ad::Graph& g, std::size_t n_train_pixels);

private:
    struct Layer {
        ad::Parameter theta;  // scalar dropout logit (absent on the head unless enabled)
        ad::Parameter w;
        ad::Parameter b;
        bool has_theta = false;
        std::size_t fan_in = 0;  // gate width / regularizer feature count
    };

    void build_shapes();
    void init_values(std::uint64_t seed);
    ad::Var apply_gate(ad::Graph& g, ad::Var h, std::size_t layer, const GateNoise* noise);

    ModelConfig cfg_;
    std::vector<Layer> layers_;             // hidden layers then head
    std::vector<std::size_t> theta_index_;  // layer index per dropout gate
    std::vector<ad::Parameter*> thetas_;    // convenience view
};

}  // namespace emu::model

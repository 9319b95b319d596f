#pragma once

#include <cstddef>
#include <unordered_map>
#include <utility>
#include <vector>

#include "emu/ad/graph.hpp"

namespace emu::ad {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-7;
};

// Bias-corrected Adam. Consumes parameter gradients and zeroes them after
// each step. Non-finite gradients or updates abort with a numeric error
// naming the offending parameter and its role.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(const std::vector<Parameter*>& params);
    std::size_t steps() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    struct Slot {
        Tensor m;
        Tensor v;
    };
    AdamConfig cfg_;
    std::size_t t_ = 0;
    std::unordered_map<Parameter*, Slot> state_;
};

}  // namespace emu::ad

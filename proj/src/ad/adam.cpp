#include "emu/ad/adam.hpp"

#include <cmath>
#include <string>

#include "emu/core/error.hpp"

namespace emu::ad {

void Adam::step(const std::vector<Parameter*>& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Parameter* p : params) {
        if (!p->grad.all_finite()) {
            throw TrainingError("non-finite gradient",
                                "parameter '" + p->name + "' (role " +
                                    param_role_name(p->role) + ") at step " +
                                    std::to_string(t_));
        }
        auto it = state_.find(p);
        if (it == state_.end()) {
            it = state_.emplace(p, Slot{Tensor(p->value.shape()), Tensor(p->value.shape())}).first;
        }
        Slot& s = it->second;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad[i];
            s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g;
            s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mhat = s.m[i] / bc1;
            const double vhat = s.v[i] / bc2;
            p->value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        if (!p->value.all_finite()) {
            throw TrainingError("non-finite parameter after update",
                                "parameter '" + p->name + "' (role " +
                                    param_role_name(p->role) + ") at step " +
                                    std::to_string(t_));
        }
        p->zero_grad();
    }
}

}  // namespace emu::ad

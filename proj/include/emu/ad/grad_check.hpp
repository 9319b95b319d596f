#pragma once

#include <functional>
#include <string>
#include <vector>

#include "emu/ad/graph.hpp"

namespace emu::ad {

struct GradCheckReport {
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
};

// Compares tape gradients of a scalar-valued build against central finite
// differences over every element of every listed parameter. `build` must
// construct the expression from the parameters' current values so repeated
// calls see the perturbed state. Relative error uses
// |ad - fd| / max(denom_floor, |ad|, |fd|).
GradCheckReport grad_check(const std::function<Var(Graph&)>& build,
                           const std::vector<Parameter*>& params,
                           double eps = 1e-5,
                           double denom_floor = 1e-6);

}  // namespace emu::ad

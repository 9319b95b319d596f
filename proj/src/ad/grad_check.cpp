#include "emu/ad/grad_check.hpp"

#include <cmath>

namespace emu::ad {

namespace {
double eval_scalar(const std::function<Var(Graph&)>& build) {
    Graph g;
    return build(g).value().item();
}
}  // namespace

GradCheckReport grad_check(const std::function<Var(Graph&)>& build,
                           const std::vector<Parameter*>& params,
                           double eps, double denom_floor) {
    for (Parameter* p : params) p->zero_grad();
    {
        Graph g;
        Var loss = build(g);
        g.backward(loss);
    }
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (Parameter* p : params) analytic.push_back(p->grad);

    GradCheckReport rep;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Parameter& p = *params[pi];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double saved = p.value[i];
            p.value[i] = saved + eps;
            const double fp = eval_scalar(build);
            p.value[i] = saved - eps;
            const double fm = eval_scalar(build);
            p.value[i] = saved;
            const double fd = (fp - fm) / (2.0 * eps);
            const double a = analytic[pi][i];
            const double abs_err = std::fabs(a - fd);
            const double denom = std::max({denom_floor, std::fabs(a), std::fabs(fd)});
            const double rel = abs_err / denom;
            if (rel > rep.max_rel_error) {
                rep.max_rel_error = rel;
                rep.worst_param = p.name;
                rep.worst_index = i;
            }
            if (abs_err > rep.max_abs_error) rep.max_abs_error = abs_err;
        }
    }
    for (Parameter* p : params) p->zero_grad();
    return rep;
}

}  // namespace emu::ad

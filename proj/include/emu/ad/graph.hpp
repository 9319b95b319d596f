#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "emu/ad/tensor.hpp"

namespace emu::ad {

enum class ParamRole { weight, bias, dropout_logit };

const char* param_role_name(ParamRole r);

// Trainable value owned outside the graph. Gradients accumulate into `grad`
// across backward() calls until the optimizer consumes and clears them.
struct Parameter {
    std::string name;
    ParamRole role = ParamRole::weight;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, ParamRole r, Tensor v)
        : name(std::move(n)), role(r), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() { grad.fill(0.0); }
};

class Graph;

// Handle into a graph's tape. Cheap to copy; valid for the graph's lifetime.
struct Var {
    Graph* g = nullptr;
    std::size_t idx = 0;

    bool valid() const { return g != nullptr; }
    const Tensor& value() const;
    const std::vector<std::size_t>& shape() const;
};

// Append-only tape. Nodes are created in topological order, so the reverse
// sweep in backward() visits every node after all of its consumers.
class Graph {
public:
    // grad_enabled = false builds a forward-only tape: parameters enter as
    // constants and no backward closures or gradient buffers are kept.
    explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    Var constant(Tensor value);
    Var param(Parameter& p);

    const Tensor& value(std::size_t idx) const { return nodes_[idx].value; }
    Tensor& grad(std::size_t idx) { return nodes_[idx].grad; }
    bool needs_grad(std::size_t idx) const { return nodes_[idx].needs_grad; }
    std::size_t node_count() const { return nodes_.size(); }

    // Seeds d(loss)/d(loss) = 1 and propagates to every parameter leaf.
    void backward(Var loss);

    // Internal factory used by the op free functions.
    Var make(Tensor value, bool needs_grad,
             std::function<void(Graph&, std::size_t)> backward_fn);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool needs_grad = false;
        std::function<void(Graph&, std::size_t)> backward_fn;
    };
    bool grad_enabled_ = true;
    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return g->value(idx); }
inline const std::vector<std::size_t>& Var::shape() const { return g->value(idx).shape(); }

// Elementwise; operands must share a shape exactly (no implicit broadcast).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var relu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
// Pass-through gradient inside [lo, hi], zero outside.
Var clamp(Var a, double lo, double hi);

// x: [N, K], w: [K, M], b: [M] -> [N, M]
Var dense(Var x, Var w, Var b);
// x: [B, H, W, Cin], w: [kh, kw, Cin, Cout] (kh, kw odd), b: [Cout]
// -> [B, H, W, Cout] with zero padding ("same" output size).
Var conv2d_same(Var x, Var w, Var b);

// Multiplies the last axis of x by gate (shape [C] == x's last dim),
// broadcasting over all leading axes.
Var channel_mul(Var x, Var gate);

// Relaxed Bernoulli keep-gate, scaled to unit mean.
// theta: dropout logits [K], drop rate p = sigmoid(theta).
// u: frozen uniform noise in (0, 1), shape [K].
// Output: sigmoid((logit(1 - p) + logit(u)) / temperature) / (1 - p).
Var concrete_gate(Var theta, const Tensor& u, double temperature);

// Dropout regularizer for one layer:
//   w_scale * sum(w^2) / (1 - p) - d_scale * k_count * H(p)
// with H the Bernoulli entropy in nats and p = sigmoid(theta) (theta scalar
// per layer here; for per-feature logits the terms sum over features with
// the weight norm split evenly).
Var concrete_kl(Var w, Var theta, double w_scale, double d_scale, double k_count);

// Keeps columns [from, to) of the last axis.
Var slice_last(Var a, std::size_t from, std::size_t to);
// Repeats a size-1 last axis m times. Backward sums over the copies.
Var broadcast_last(Var a, std::size_t m);
Var reshape(Var a, std::vector<std::size_t> shape);
Var reduce_sum(Var a);
Var reduce_mean(Var a);

// Numerically stable mean of max(x,0) - x*y + log1p(exp(-|x|)) over all
// elements; targets y are constants in {0, 1}.
Var bce_with_logits_mean(Var logits, const Tensor& targets);

}  // namespace emu::ad

#include "emu/model/dc_model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "emu/core/error.hpp"

namespace emu::model {

using ad::Graph;
using ad::Parameter;
using ad::ParamRole;
using ad::Tensor;
using ad::Var;

DcModel::DcModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    build_shapes();
    init_values(seed);
}

DcModel::DcModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    build_shapes();
}

void DcModel::build_shapes() {
    const bool conv = cfg_.arch != Arch::dcfc;
    const std::size_t L = cfg_.hidden_layers;
    layers_.resize(L + 1);
    for (std::size_t l = 0; l <= L; ++l) {
        Layer& lay = layers_[l];
        const bool is_head = l == L;
        const std::size_t in = l == 0 ? cfg_.input_channels : cfg_.hidden_units;
        const std::size_t out = is_head ? cfg_.output_channels() : cfg_.hidden_units;
        const std::string tag = is_head ? std::string("head") : "h" + std::to_string(l);
        lay.fan_in = in;
        lay.has_theta = !is_head || cfg_.dropout_on_head;
        if (lay.has_theta) {
            lay.theta = Parameter(tag + ".p", ParamRole::dropout_logit, Tensor({1}));
        }
        if (conv) {
            lay.w = Parameter(tag + ".w", ParamRole::weight, Tensor({3, 3, in, out}));
        } else {
            lay.w = Parameter(tag + ".w", ParamRole::weight, Tensor({in, out}));
        }
        lay.b = Parameter(tag + ".b", ParamRole::bias, Tensor({out}));
    }
    theta_index_.clear();
    thetas_.clear();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].has_theta) {
            theta_index_.push_back(l);
            thetas_.push_back(&layers_[l].theta);
        }
    }
}

void DcModel::init_values(std::uint64_t seed) {
    Rng rng(split_seed(seed, 0x6d6f64656cULL));
    const double theta0 = std::log(cfg_.initial_dropout_rate / (1.0 - cfg_.initial_dropout_rate));
    const bool conv = cfg_.arch != Arch::dcfc;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Layer& lay = layers_[l];
        const bool is_head = l + 1 == layers_.size();
        if (lay.has_theta) lay.theta.value[0] = theta0;
        if (is_head) {
            std::uniform_real_distribution<double> dist(-0.01, 0.01);
            for (std::size_t i = 0; i < lay.w.value.size(); ++i) lay.w.value[i] = dist(rng);
        } else {
            const double fan = conv ? 9.0 * static_cast<double>(lay.fan_in)
                                    : static_cast<double>(lay.fan_in);
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan));
            for (std::size_t i = 0; i < lay.w.value.size(); ++i) lay.w.value[i] = dist(rng);
        }
        lay.b.value.fill(0.0);
    }
}

std::vector<Parameter*> DcModel::parameters() {
    std::vector<Parameter*> ps;
    for (Layer& lay : layers_) {
        if (lay.has_theta) ps.push_back(&lay.theta);
        ps.push_back(&lay.w);
        ps.push_back(&lay.b);
    }
    return ps;
}

std::vector<const Parameter*> DcModel::parameters() const {
    std::vector<const Parameter*> ps;
    for (const Layer& lay : layers_) {
        if (lay.has_theta) ps.push_back(&lay.theta);
        ps.push_back(&lay.w);
        ps.push_back(&lay.b);
    }
    return ps;
}

std::size_t DcModel::parameter_count() const {
    std::size_t n = 0;
    for (const Parameter* p : parameters()) n += p->value.size();
    return n;
}

std::vector<double> DcModel::dropout_rates() const {
    std::vector<double> rates;
    rates.reserve(thetas_.size());
    for (const Parameter* t : thetas_) {
        rates.push_back(1.0 / (1.0 + std::exp(-t->value[0])));
    }
    return rates;
}

GateNoise DcModel::sample_noise(Rng& rng) const {
    GateNoise noise;
    noise.u.reserve(theta_index_.size());
    for (std::size_t l : theta_index_) {
        Tensor u({layers_[l].fan_in});
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = uniform_open(rng);
        noise.u.push_back(std::move(u));
    }
    return noise;
}

Var DcModel::apply_gate(Graph& g, Var h, std::size_t layer, const GateNoise* noise) {
    const Layer& lay = layers_[layer];
    if (!lay.has_theta || noise == nullptr) return h;
    std::size_t gate = 0;
    while (theta_index_[gate] != layer) ++gate;
    if (noise->u[gate].size() != lay.fan_in) {
        throw ShapeError("gate noise width " + std::to_string(noise->u[gate].size()) +
                         " does not match layer fan-in " + std::to_string(lay.fan_in));
    }
    Var theta = ad::broadcast_last(g.param(layers_[layer].theta), lay.fan_in);
    Var z = ad::concrete_gate(theta, noise->u[gate], cfg_.dropout_temperature);
    return ad::channel_mul(h, z);
}

Head DcModel::forward(Graph& g, const Tensor& x, const GateNoise* noise) {
    if (x.rank() != 4) {
        throw ShapeError("model input must be [batch, height, width, channels], got " +
                         x.shape_str());
    }
    if (x.dim(3) != cfg_.input_channels) {
        throw ShapeError("model expects " + std::to_string(cfg_.input_channels) +
                         " input channels, got " + std::to_string(x.dim(3)));
    }
    const std::size_t n = x.dim(0) * x.dim(1) * x.dim(2);
    const std::size_t L = cfg_.hidden_layers;
    Var h{};
    if (cfg_.arch == Arch::dcfc) {
        h = g.constant(Tensor({n, cfg_.input_channels}, std::vector<double>(x.values())));
        for (std::size_t l = 0; l < L; ++l) {
            h = apply_gate(g, h, l, noise);
            h = ad::relu(ad::dense(h, g.param(layers_[l].w), g.param(layers_[l].b)));
        }
        h = apply_gate(g, h, L, noise);
        h = ad::dense(h, g.param(layers_[L].w), g.param(layers_[L].b));
    } else {
        h = g.constant(x);
        Var first{};
        for (std::size_t l = 0; l < L; ++l) {
            h = apply_gate(g, h, l, noise);
            h = ad::relu(ad::conv2d_same(h, g.param(layers_[l].w), g.param(layers_[l].b)));
            if (l == 0) first = h;
        }
        // Residual path from the first hidden activation to the last.
        if (cfg_.arch == Arch::dcvdsr && L >= 2) h = ad::add(h, first);
        h = apply_gate(g, h, L, noise);
        h = ad::conv2d_same(h, g.param(layers_[L].w), g.param(layers_[L].b));
        h = ad::reshape(h, {n, cfg_.output_channels()});
    }

    const std::size_t b = cfg_.bands;
    Head head;
    head.yhat = ad::slice_last(h, 0, b);
    if (cfg_.variance_mode == VarianceMode::per_band) {
        head.log_var = ad::clamp(ad::slice_last(h, b, 2 * b), -10.0, 10.0);
        head.phi = ad::slice_last(h, 2 * b, 2 * b + 1);
    } else {
        Var s = ad::clamp(ad::slice_last(h, b, b + 1), -10.0, 10.0);
        head.log_var = ad::broadcast_last(s, b);
        head.phi = ad::slice_last(h, b + 1, b + 2);
    }
    return head;
}

Var DcModel::kl_regularizer(Graph& g, std::size_t n_train_pixels) {
    if (n_train_pixels == 0) throw DomainError("kl_regularizer: training pixel count is zero");
    const double n = static_cast<double>(n_train_pixels);
    const double w_scale = cfg_.length_scale_sq / n;
    const double d_scale = 2.0 / (cfg_.model_precision * n);
    Var total{};
    for (std::size_t l : theta_index_) {
        Layer& lay = layers_[l];
        Var term = ad::concrete_kl(g.param(lay.w), g.param(lay.theta), w_scale, d_scale,
                                   static_cast<double>(lay.fan_in));
        total = total.valid() ? ad::add(total, term) : term;
    }
    return total;
}

}  // namespace emu::model

#include "emu/ad/graph.hpp"

#include <cmath>
#include <cstddef>
#include <utility>

#include "emu/core/error.hpp"

namespace emu::ad {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ShapeError(msg);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() +
                         " vs " + b.shape_str());
    }
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

const char* param_role_name(ParamRole r) {
    switch (r) {
        case ParamRole::weight: return "weight";
        case ParamRole::bias: return "bias";
        case ParamRole::dropout_logit: return "dropout_logit";
    }
    return "unknown";
}

Var Graph::make(Tensor value, bool needs_grad,
                std::function<void(Graph&, std::size_t)> backward_fn) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) {
        n.grad = Tensor(n.value.shape());
        n.backward_fn = std::move(backward_fn);
    }
    nodes_.push_back(std::move(n));
    return Var{this, nodes_.size() - 1};
}

Var Graph::constant(Tensor value) { return make(std::move(value), false, nullptr); }

Var Graph::param(Parameter& p) {
    if (!grad_enabled_) return constant(p.value);
    Parameter* pp = &p;
    return make(p.value, true, [pp](Graph& g, std::size_t self) {
        const Tensor& go = g.grad(self);
        for (std::size_t i = 0; i < go.size(); ++i) pp->grad[i] += go[i];
    });
}

void Graph::backward(Var loss) {
    require(loss.g == this, "backward: var belongs to another graph");
    Node& top = nodes_[loss.idx];
    require(top.value.size() == 1, "backward: loss must be scalar, got " + top.value.shape_str());
    require(top.needs_grad, "backward: loss does not depend on any parameter");
    top.grad[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        Node& n = nodes_[i];
        if (n.needs_grad && n.backward_fn) n.backward_fn(*this, i);
    }
}

// ---- elementwise ----

Var add(Var a, Var b) {
    Graph& g = *a.g;
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_same_shape(av, bv, "add");
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
    bool ng = g.needs_grad(a.idx) || g.needs_grad(b.idx);
    std::size_t ai = a.idx, bi = b.idx;
    return g.make(std::move(out), ng, [ai, bi](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad(self);
        if (gr.needs_grad(ai)) {
            Tensor& ga = gr.grad(ai);
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
        }
        if (gr.needs_grad(bi)) {
            Tensor& gb = gr.grad(bi);
            for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
        }
    });
}

Var sub(Var a, Var b) {
    Graph& g = *a.g;
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_same_shape(av, bv, "sub");
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
    bool ng = g.needs_grad(a.idx) || g.needs_grad(b.idx);
    std::size_t ai = a.idx, bi = b.idx;
    return g.make(std::move(out), ng, [ai, bi](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad(self);
        if (gr.needs_grad(ai)) {
            Tensor& ga = gr.grad(ai);
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
        }
        if (gr.needs_grad(bi)) {
            Tensor& gb = gr.grad(bi);
            for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
        }
    });
}

Var mul(Var a, Var b) {
    Graph& g = *a.g;
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_same_shape(av, bv, "mul");
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
    bool ng = g.needs_grad(a.idx) || g.needs_grad(b.idx);
    std::size_t ai = a.idx, bi = b.idx;
    return g.make(std::move(out), ng, [ai, bi](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad(self);
        if (gr.needs_grad(ai)) {
            Tensor& ga = gr.grad(ai);
            const Tensor& bv2 = gr.value(bi);
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv2[i];
        }
        if (gr.needs_grad(bi)) {
            Tensor& gb = gr.grad(bi);
            const Tensor& av2 = gr.value(ai);
            for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av2[i];
        }
    });
}

Var scale(Var a, double c) {
    Graph& g = *a.g;
    const Tensor& av = a.value();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
    std::size_t ai = a.idx;
    return g.make(std::move(out), g.needs_grad(ai), [ai, c](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad(self);
        Tensor& ga = gr.grad(ai);
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * c;
    });
}

Var relu(Var a) {
    Graph& g = *a.g;
    const Tensor& av = a.value();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
    std::size_t ai = a.idx;
    return g.make(std::move(out), g.needs_grad(ai), [ai](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad(self);
        const Tensor& av2 = gr.value(ai);
        Tensor& ga = gr.grad(ai);
        for (std::size_t i = 0; i < go.size(); ++i) {
            if (av2[i] > 0.0) ga[i] += go[i];
        }
    });
}

Var sigmoid(Var a) {
    Graph& g = *a.g;
    const Tensor& av = a.value();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(av[i]);
    std::size_t ai = a.idx;
    return g.make(std::move(out), g.needs_grad(ai), [ai](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad(self);
        const Tensor& y = gr.value(self);
        Tensor& ga = gr.grad(ai);
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i] * (1.0 - y[i]);
    });
}

Var exp(Var a) {
    Graph& g = *a.g;
    const Tensor& av = a.value();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(av[i]);
    std::size_t ai = a.idx;
    return g.make(std::move(out), g.needs_grad(ai), [ai](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad(self);
        const Tensor& y = gr.value(self);
        Tensor& ga = gr.grad(ai);
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * y[i];
    });
}

Var clamp(Var a, double lo, double hi) {
    require(lo < hi, "clamp: lo must be below hi");
    Graph& g = *a.g;
    const Tensor& av = a.value();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = av[i];
        out[i] = v < lo ? lo : (v > hi ? hi : v);
    }
    std::size_t ai = a.idx;
    return g.make(std::move(out), g.needs_grad(ai), [ai, lo, hi](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad(self);
        const Tensor& av2 = gr.value(ai);
        Tensor& ga = gr.grad(ai);
        for (std::size_t i = 0; i < go.size(); ++i) {
            if (av2[i] >= lo && av2[i] <= hi) ga[i] += go[i];
        }
    });
}

// ---- linear layers ----

Var dense(Var x, Var w, Var b) {
    Graph& g = *x.g;
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    const Tensor& bv = b.value();
    require(xv.rank() == 2, "dense: x must be rank 2, got " + xv.shape_str());
    require(wv.rank() == 2, "dense: w must be rank 2, got " + wv.shape_str());
    require(bv.rank() == 1, "dense: b must be rank 1, got " + bv.shape_str());
    const std::size_t n = xv.dim(0), k = xv.dim(1);
    require(wv.dim(0) == k, "dense: x/w inner dims differ");
    const std::size_t m = wv.dim(1);
    require(bv.dim(0) == m, "dense: bias length differs from output width");

    Tensor out({n, m});
    const double* xd = xv.data();
    const double* wd = wv.data();
    const double* bd = bv.data();
    double* od = out.data();
    for (std::size_t i = 0; i < n; ++i) {
        double* oi = od + i * m;
        for (std::size_t j = 0; j < m; ++j) oi[j] = bd[j];
        const double* xi = xd + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double v = xi[kk];
            if (v == 0.0) continue;
            const double* wk = wd + kk * m;
            for (std::size_t j = 0; j < m; ++j) oi[j] += v * wk[j];
        }
    }

    bool ng = g.needs_grad(x.idx) || g.needs_grad(w.idx) || g.needs_grad(b.idx);
    std::size_t xi = x.idx, wi = w.idx, bi = b.idx;
    return g.make(std::move(out), ng, [xi, wi, bi, n, k, m](Graph& gr, std::size_t self) {
        const double* go = gr.grad(self).data();
        const double* xd2 = gr.value(xi).data();
        const double* wd2 = gr.value(wi).data();
        if (gr.needs_grad(xi)) {
            double* gx = gr.grad(xi).data();
            for (std::size_t i = 0; i < n; ++i) {
                const double* gi = go + i * m;
                double* gxi = gx + i * k;
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const double* wk = wd2 + kk * m;
                    double s = 0.0;
                    for (std::size_t j = 0; j < m; ++j) s += gi[j] * wk[j];
                    gxi[kk] += s;
                }
            }
        }
        if (gr.needs_grad(wi)) {
            double* gw = gr.grad(wi).data();
            for (std::size_t i = 0; i < n; ++i) {
                const double* gi = go + i * m;
                const double* xi2 = xd2 + i * k;
                for (std::size_t kk = 0; kk < k; ++kk) {
                    const double v = xi2[kk];
                    if (v == 0.0) continue;
                    double* gwk = gw + kk * m;
                    for (std::size_t j = 0; j < m; ++j) gwk[j] += v * gi[j];
                }
            }
        }
        if (gr.needs_grad(bi)) {
            double* gb = gr.grad(bi).data();
            for (std::size_t i = 0; i < n; ++i) {
                const double* gi = go + i * m;
                for (std::size_t j = 0; j < m; ++j) gb[j] += gi[j];
            }
        }
    });
}

Var conv2d_same(Var x, Var w, Var b) {
    Graph& g = *x.g;
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    const Tensor& bv = b.value();
    require(xv.rank() == 4, "conv2d_same: x must be rank 4, got " + xv.shape_str());
    require(wv.rank() == 4, "conv2d_same: w must be rank 4, got " + wv.shape_str());
    require(bv.rank() == 1, "conv2d_same: b must be rank 1");
    const std::size_t nb = xv.dim(0), h = xv.dim(1), wd = xv.dim(2), cin = xv.dim(3);
    const std::size_t kh = wv.dim(0), kw = wv.dim(1);
    require(kh % 2 == 1 && kw % 2 == 1, "conv2d_same: kernel dims must be odd");
    require(wv.dim(2) == cin, "conv2d_same: kernel input channels differ from x");
    const std::size_t cout = wv.dim(3);
    require(bv.dim(0) == cout, "conv2d_same: bias length differs from output channels");

    Tensor out({nb, h, wd, cout});
    const long ph = static_cast<long>(kh / 2), pw = static_cast<long>(kw / 2);
    for (std::size_t bb = 0; bb < nb; ++bb) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t xx = 0; xx < wd; ++xx) {
                double* oc = &out.at(bb, y, xx, 0);
                for (std::size_t co = 0; co < cout; ++co) oc[co] = bv[co];
                for (std::size_t dy = 0; dy < kh; ++dy) {
                    const long sy = static_cast<long>(y) + static_cast<long>(dy) - ph;
                    if (sy < 0 || sy >= static_cast<long>(h)) continue;
                    for (std::size_t dx = 0; dx < kw; ++dx) {
                        const long sx = static_cast<long>(xx) + static_cast<long>(dx) - pw;
                        if (sx < 0 || sx >= static_cast<long>(wd)) continue;
                        const double* px =
                            xv.data() +
                            ((bb * h + static_cast<std::size_t>(sy)) * wd +
                             static_cast<std::size_t>(sx)) * cin;
                        const double* wp = wv.data() + ((dy * kw + dx) * cin) * cout;
                        for (std::size_t ci = 0; ci < cin; ++ci) {
                            const double v = px[ci];
                            if (v == 0.0) continue;
                            const double* wc = wp + ci * cout;
                            for (std::size_t co = 0; co < cout; ++co) oc[co] += v * wc[co];
                        }
                    }
                }
            }
        }
    }

    bool ng = g.needs_grad(x.idx) || g.needs_grad(w.idx) || g.needs_grad(b.idx);
    std::size_t xi = x.idx, wi = w.idx, bi = b.idx;
    return g.make(std::move(out), ng,
                  [xi, wi, bi, nb, h, wd, cin, kh, kw, cout, ph, pw](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad(self);
        const Tensor& xv2 = gr.value(xi);
        const Tensor& wv2 = gr.value(wi);
        const bool want_x = gr.needs_grad(xi);
        const bool want_w = gr.needs_grad(wi);
        const bool want_b = gr.needs_grad(bi);
        Tensor* gx = want_x ? &gr.grad(xi) : nullptr;
        Tensor* gw = want_w ? &gr.grad(wi) : nullptr;
        Tensor* gb = want_b ? &gr.grad(bi) : nullptr;
        for (std::size_t bb = 0; bb < nb; ++bb) {
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t xx = 0; xx < wd; ++xx) {
                    const double* gc = go.data() + ((bb * h + y) * wd + xx) * cout;
                    if (want_b) {
                        for (std::size_t co = 0; co < cout; ++co) (*gb)[co] += gc[co];
                    }
                    for (std::size_t dy = 0; dy < kh; ++dy) {
                        const long sy = static_cast<long>(y) + static_cast<long>(dy) - ph;
                        if (sy < 0 || sy >= static_cast<long>(h)) continue;
                        for (std::size_t dx = 0; dx < kw; ++dx) {
                            const long sx = static_cast<long>(xx) + static_cast<long>(dx) - pw;
                            if (sx < 0 || sx >= static_cast<long>(wd)) continue;
                            const std::size_t usy = static_cast<std::size_t>(sy);
                            const std::size_t usx = static_cast<std::size_t>(sx);
                            const double* px = xv2.data() + ((bb * h + usy) * wd + usx) * cin;
                            const double* wp = wv2.data() + ((dy * kw + dx) * cin) * cout;
                            if (want_x) {
                                double* gpx = &gx->at(bb, usy, usx, 0);
                                for (std::size_t ci = 0; ci < cin; ++ci) {
                                    const double* wc = wp + ci * cout;
                                    double s = 0.0;
                                    for (std::size_t co = 0; co < cout; ++co) s += gc[co] * wc[co];
                                    gpx[ci] += s;
                                }
                            }
                            if (want_w) {
                                double* gwp = gw->data() + ((dy * kw + dx) * cin) * cout;
                                for (std::size_t ci = 0; ci < cin; ++ci) {
                                    const double v = px[ci];
                                    if (v == 0.0) continue;
                                    double* gwc = gwp + ci * cout;
                                    for (std::size_t co = 0; co < cout; ++co) gwc[co] += v * gc[co];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
}

Var channel_mul(Var x, Var gate) {
    Graph& g = *x.g;
    const Tensor& xv = x.value();
    const Tensor& gv = gate.value();
    require(gv.rank() == 1, "channel_mul: gate must be rank 1");
    require(xv.rank() >= 1 && xv.dim(xv.rank() - 1) == gv.dim(0),
            "channel_mul: gate length " + gv.shape_str() + " differs from last axis of " +
                xv.shape_str());
    const std::size_t c = gv.dim(0);
    const std::size_t rows = xv.size() / c;
    Tensor out(xv.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xv.data() + r * c;
        double* orow = out.data() + r * c;
        for (std::size_t j = 0; j < c; ++j) orow[j] = xr[j] * gv[j];
    }
    bool ng = g.needs_grad(x.idx) || g.needs_grad(gate.idx);
    std::size_t xi = x.idx, gi = gate.idx;
    return g.make(std::move(out), ng, [xi, gi, rows, c](Graph& gr, std::size_t self) {
        const double* go = gr.grad(self).data();
        if (gr.needs_grad(xi)) {
            const double* gv2 = gr.value(gi).data();
            double* gx = gr.grad(xi).data();
            for (std::size_t r = 0; r < rows; ++r) {
                const double* grow = go + r * c;
                double* gxr = gx + r * c;
                for (std::size_t j = 0; j < c; ++j) gxr[j] += grow[j] * gv2[j];
            }
        }
        if (gr.needs_grad(gi)) {
            const double* xv2 = gr.value(xi).data();
            double* gg = gr.grad(gi).data();
            for (std::size_t r = 0; r < rows; ++r) {
                const double* grow = go + r * c;
                const double* xr = xv2 + r * c;
                for (std::size_t j = 0; j < c; ++j) gg[j] += grow[j] * xr[j];
            }
        }
    });
}

// ---- dropout machinery ----

Var concrete_gate(Var theta, const Tensor& u, double temperature) {
    Graph& g = *theta.g;
    const Tensor& tv = theta.value();
    require(tv.rank() == 1, "concrete_gate: theta must be rank 1");
    require_same_shape(tv, u, "concrete_gate");
    require(temperature > 0.0, "concrete_gate: temperature must be positive");
    const std::size_t k = tv.dim(0);

    // z = sigmoid((-theta + logit(u)) / t); output z / (1 - p).
    std::vector<double> z(k), p(k);
    Tensor out({k});
    for (std::size_t i = 0; i < k; ++i) {
        const double ui = u[i];
        require(ui > 0.0 && ui < 1.0, "concrete_gate: noise must lie strictly in (0, 1)");
        p[i] = sigmoid_scalar(tv[i]);
        const double a = (-tv[i] + std::log(ui / (1.0 - ui))) / temperature;
        z[i] = sigmoid_scalar(a);
        out[i] = z[i] / (1.0 - p[i]);
    }

    std::size_t ti = theta.idx;
    const double t = temperature;
    return g.make(std::move(out), g.needs_grad(ti),
                  [ti, z = std::move(z), p = std::move(p), t](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad(self);
        const Tensor& yv = gr.value(self);
        Tensor& gt = gr.grad(ti);
        for (std::size_t i = 0; i < go.size(); ++i) {
            // d(z/(1-p))/dtheta = (z/(1-p)) * (p - (1-z)/t)
            gt[i] += go[i] * yv[i] * (p[i] - (1.0 - z[i]) / t);
        }
    });
}

Var concrete_kl(Var w, Var theta, double w_scale, double d_scale, double k_count) {
    Graph& g = *w.g;
    const Tensor& wv = w.value();
    const Tensor& tv = theta.value();
    require(tv.size() == 1, "concrete_kl: theta must be a single logit per layer");

    const double th = tv[0];
    const double p = sigmoid_scalar(th);
    const double r = 1.0 - p;
    if (r <= 0.0) throw DomainError("concrete_kl: drop rate reached 1, regularizer diverges");
    double sq = 0.0;
    for (std::size_t i = 0; i < wv.size(); ++i) sq += wv[i] * wv[i];
    // x log x -> 0 as x -> 0, so treat the p == 0 endpoint by its limit.
    auto ent = [](double x) { return x > 0.0 ? -x * std::log(x) : 0.0; };
    const double entropy = ent(p) + ent(r);
    const double kl = w_scale * sq / r - d_scale * k_count * entropy;

    bool ng = g.needs_grad(w.idx) || g.needs_grad(theta.idx);
    std::size_t wi = w.idx, ti = theta.idx;
    return g.make(Tensor::scalar(kl), ng,
                  [wi, ti, w_scale, d_scale, k_count, p, r, th, sq](Graph& gr, std::size_t self) {
        const double go = gr.grad(self)[0];
        if (gr.needs_grad(wi)) {
            const Tensor& wv2 = gr.value(wi);
            Tensor& gw = gr.grad(wi);
            const double c = go * w_scale * 2.0 / r;
            for (std::size_t i = 0; i < wv2.size(); ++i) gw[i] += c * wv2[i];
        }
        if (gr.needs_grad(ti)) {
            // dH/dtheta = -theta * p * (1 - p); d(1/(1-p))/dtheta = p / (1 - p).
            const double dkl = w_scale * sq * p / r + d_scale * k_count * th * p * r;
            gr.grad(ti)[0] += go * dkl;
        }
    });
}

// ---- shape ops ----

Var slice_last(Var a, std::size_t from, std::size_t to) {
    Graph& g = *a.g;
    const Tensor& av = a.value();
    require(av.rank() >= 1, "slice_last: rank must be at least 1");
    const std::size_t c = av.dim(av.rank() - 1);
    require(from < to && to <= c, "slice_last: bad range");
    const std::size_t width = to - from;
    const std::size_t rows = av.size() / c;
    std::vector<std::size_t> shape = av.shape();
    shape.back() = width;
    Tensor out(std::move(shape));
    for (std::size_t r = 0; r < rows; ++r) {
        const double* src = av.data() + r * c + from;
        double* dst = out.data() + r * width;
        for (std::size_t j = 0; j < width; ++j) dst[j] = src[j];
    }
    std::size_t ai = a.idx;
    return g.make(std::move(out), g.needs_grad(ai),
                  [ai, from, c, width, rows](Graph& gr, std::size_t self) {
        const double* go = gr.grad(self).data();
        double* ga = gr.grad(ai).data();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* src = go + r * width;
            double* dst = ga + r * c + from;
            for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
        }
    });
}

Var broadcast_last(Var a, std::size_t m) {
    Graph& g = *a.g;
    const Tensor& av = a.value();
    require(av.rank() >= 1 && av.dim(av.rank() - 1) == 1,
            "broadcast_last: last axis must have size 1");
    require(m >= 1, "broadcast_last: m must be at least 1");
    const std::size_t rows = av.size();
    std::vector<std::size_t> shape = av.shape();
    shape.back() = m;
    Tensor out(std::move(shape));
    for (std::size_t r = 0; r < rows; ++r) {
        double* dst = out.data() + r * m;
        for (std::size_t j = 0; j < m; ++j) dst[j] = av[r];
    }
    std::size_t ai = a.idx;
    return g.make(std::move(out), g.needs_grad(ai), [ai, m, rows](Graph& gr, std::size_t self) {
        const double* go = gr.grad(self).data();
        Tensor& ga = gr.grad(ai);
        for (std::size_t r = 0; r < rows; ++r) {
            const double* src = go + r * m;
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += src[j];
            ga[r] += s;
        }
    });
}

Var reshape(Var a, std::vector<std::size_t> shape) {
    Graph& g = *a.g;
    const Tensor& av = a.value();
    Tensor out(std::move(shape), std::vector<double>(av.values()));
    std::size_t ai = a.idx;
    return g.make(std::move(out), g.needs_grad(ai), [ai](Graph& gr, std::size_t self) {
        const Tensor& go = gr.grad(self);
        Tensor& ga = gr.grad(ai);
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    });
}

Var reduce_sum(Var a) {
    Graph& g = *a.g;
    const Tensor& av = a.value();
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i];
    std::size_t ai = a.idx;
    return g.make(Tensor::scalar(s), g.needs_grad(ai), [ai](Graph& gr, std::size_t self) {
        const double go = gr.grad(self)[0];
        Tensor& ga = gr.grad(ai);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go;
    });
}

Var reduce_mean(Var a) {
    Graph& g = *a.g;
    const Tensor& av = a.value();
    require(av.size() > 0, "reduce_mean: empty tensor");
    const double inv = 1.0 / static_cast<double>(av.size());
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i];
    std::size_t ai = a.idx;
    return g.make(Tensor::scalar(s * inv), g.needs_grad(ai), [ai, inv](Graph& gr, std::size_t self) {
        const double go = gr.grad(self)[0] * inv;
        Tensor& ga = gr.grad(ai);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go;
    });
}

Var bce_with_logits_mean(Var logits, const Tensor& targets) {
    Graph& g = *logits.g;
    const Tensor& xv = logits.value();
    require_same_shape(xv, targets, "bce_with_logits_mean");
    require(xv.size() > 0, "bce_with_logits_mean: empty tensor");
    const std::size_t n = xv.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = xv[i];
        const double y = targets[i];
        s += (x > 0.0 ? x : 0.0) - x * y + std::log1p(std::exp(-std::fabs(x)));
    }
    const double inv = 1.0 / static_cast<double>(n);
    std::size_t li = logits.idx;
    return g.make(Tensor::scalar(s * inv), g.needs_grad(li),
                  [li, targets, inv](Graph& gr, std::size_t self) {
        const double go = gr.grad(self)[0] * inv;
        const Tensor& xv2 = gr.value(li);
        Tensor& gl = gr.grad(li);
        for (std::size_t i = 0; i < xv2.size(); ++i) {
            gl[i] += go * (sigmoid_scalar(xv2[i]) - targets[i]);
        }
    });
}

}  // namespace emu::ad

#include "shed/nn.hpp"

#include <cassert>
#include <cmath>

namespace shed {

void Mlp::Grad::zero() {
    for (auto& l : layers) {
        std::fill(l.w.a.begin(), l.w.a.end(), 0.0);
        std::fill(l.b.begin(), l.b.end(), 0.0);
    }
}

void Mlp::Grad::scale(double s) {
    for (auto& l : layers) {
        for (auto& x : l.w.a) x *= s;
        for (auto& x : l.b) x *= s;
    }
}

void Mlp::Grad::add(const Grad& other, double s) {
    for (size_t i = 0; i < layers.size(); ++i) {
        for (size_t j = 0; j < layers[i].w.a.size(); ++j)
            layers[i].w.a[j] += s * other.layers[i].w.a[j];
        for (size_t j = 0; j < layers[i].b.size(); ++j)
            layers[i].b[j] += s * other.layers[i].b[j];
    }
}

Mlp Mlp::make(const std::vector<int>& sizes, Rng& rng, double init_scale) {
    assert(sizes.size() >= 2);
    Mlp net;
    for (size_t i = 0; i + 1 < sizes.size(); ++i) {
        Layer l;
        l.w = Mat(sizes[i + 1], sizes[i]);
        l.b.assign(sizes[i + 1], 0.0);
        // Xavier-style by default; explicit scale for tests.
        double scale = init_scale > 0.0 ? init_scale : std::sqrt(2.0 / (sizes[i] + sizes[i + 1]));
        for (auto& w : l.w.a) w = rng.normal(0.0, scale);
        net.layers_.push_back(std::move(l));
    }
    return net;
}

Vec Mlp::forward(const Vec& x) const {
    Vec h = x;
    for (size_t li = 0; li < layers_.size(); ++li) {
        const Layer& l = layers_[li];
        Vec out(l.w.rows);
        for (int r = 0; r < l.w.rows; ++r) {
            double acc = l.b[r];
            const double* wrow = &l.w.a[static_cast<size_t>(r) * l.w.cols];
            for (int c = 0; c < l.w.cols; ++c) acc += wrow[c] * h[c];
            out[r] = acc;
        }
        if (li + 1 < layers_.size())
            for (auto& v : out) v = std::tanh(v);
        h = std::move(out);
    }
    return h;
}

Vec Mlp::forward(const Vec& x, Cache& cache) const {
    cache.inputs.clear();
    Vec h = x;
    for (size_t li = 0; li < layers_.size(); ++li) {
        cache.inputs.push_back(h);
        const Layer& l = layers_[li];
        Vec out(l.w.rows);
        for (int r = 0; r < l.w.rows; ++r) {
            double acc = l.b[r];
            const double* wrow = &l.w.a[static_cast<size_t>(r) * l.w.cols];
            for (int c = 0; c < l.w.cols; ++c) acc += wrow[c] * h[c];
            out[r] = acc;
        }
        if (li + 1 < layers_.size())
            for (auto& v : out) v = std::tanh(v);
        h = std::move(out);
    }
    cache.output = h;
    return h;
}

void Mlp::backward(const Cache& cache, const Vec& doutput, Grad& grad, Vec* dinput) const {
    Vec delta = doutput;
    for (size_t li = layers_.size(); li-- > 0;) {
        const Layer& l = layers_[li];
        const Vec& in = cache.inputs[li];
        // Hidden layers have tanh applied to their *output*, which is the
        // next layer's cached input.
        if (li + 1 < layers_.size()) {
            const Vec& act = cache.inputs[li + 1];
            for (int r = 0; r < l.w.rows; ++r) delta[r] *= 1.0 - act[r] * act[r];
        }
        Layer& gl = grad.layers[li];
        Vec dprev(l.w.cols, 0.0);
        for (int r = 0; r < l.w.rows; ++r) {
            const double d = delta[r];
            gl.b[r] += d;
            double* gw = &gl.w.a[static_cast<size_t>(r) * l.w.cols];
            const double* wrow = &l.w.a[static_cast<size_t>(r) * l.w.cols];
            for (int c = 0; c < l.w.cols; ++c) {
                gw[c] += d * in[c];
                dprev[c] += d * wrow[c];
            }
        }
        delta = std::move(dprev);
    }
    if (dinput) *dinput = std::move(delta);
}

Mlp::Grad Mlp::zero_grad() const {
    Grad g;
    for (const auto& l : layers_) {
        Layer gl;
        gl.w = Mat(l.w.rows, l.w.cols);
        gl.b.assign(l.b.size(), 0.0);
        g.layers.push_back(std::move(gl));
    }
    return g;
}

size_t Mlp::param_count() const {
    size_t n = 0;
    for (const auto& l : layers_) n += l.w.a.size() + l.b.size();
    return n;
}

Vec Mlp::flatten() const {
    Vec flat;
    flat.reserve(param_count());
    for (const auto& l : layers_) {
        flat.insert(flat.end(), l.w.a.begin(), l.w.a.end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    return flat;
}

void Mlp::unflatten(const Vec& flat) {
    size_t k = 0;
    for (auto& l : layers_) {
        for (auto& w : l.w.a) w = flat[k++];
        for (auto& b : l.b) b = flat[k++];
    }
    assert(k == flat.size());
}

Vec Mlp::flatten_grad(const Grad& grad) {
    Vec flat;
    for (const auto& l : grad.layers) {
        flat.insert(flat.end(), l.w.a.begin(), l.w.a.end());
        flat.insert(flat.end(), l.b.begin(), l.b.end());
    }
    return flat;
}

void Mlp::apply_grad(const Grad& grad, double lr) {
    for (size_t i = 0; i < layers_.size(); ++i) {
        for (size_t j = 0; j < layers_[i].w.a.size(); ++j)
            layers_[i].w.a[j] -= lr * grad.layers[i].w.a[j];
        for (size_t j = 0; j < layers_[i].b.size(); ++j)
            layers_[i].b[j] -= lr * grad.layers[i].b[j];
    }
}

void Adam::step(Vec& params, const Vec& grads) {
    assert(params.size() == m_.size() && grads.size() == m_.size());
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
    for (size_t i = 0; i < target.layers().size(); ++i) {
        auto& tl = target.layers()[i];
        const auto& ol = online.layers()[i];
        for (size_t j = 0; j < tl.w.a.size(); ++j)
            tl.w.a[j] += tau * (ol.w.a[j] - tl.w.a[j]);
        for (size_t j = 0; j < tl.b.size(); ++j)
            tl.b[j] += tau * (ol.b[j] - tl.b[j]);
    }
}

double l2_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

bool all_finite(const Vec& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace shed

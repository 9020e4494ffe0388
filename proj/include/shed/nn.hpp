#pragma once

#include <cstddef>
#include <vector>

#include "shed/rng.hpp"

namespace shed {

using Vec = std::vector<double>;

struct Mat {
    int rows = 0;
    int cols = 0;
    Vec a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

// Dense feed-forward net: tanh on hidden layers, linear output.
// Backward pass is hand-rolled; the test suite pins it against central
// finite differences.
class Mlp {
public:
    struct Layer {
        Mat w; // [out x in]
        Vec b;
    };

    struct Grad {
        std::vector<Layer> layers;

        void zero();
        void scale(double s);
        void add(const Grad& other, double s = 1.0);
    };

    // Activations cached by the training forward pass.
    struct Cache {
        std::vector<Vec> inputs; // input to each layer (post-activation of previous)
        Vec output;
    };

    Mlp() = default;

    // sizes = {in, hidden..., out}
    static Mlp make(const std::vector<int>& sizes, Rng& rng, double init_scale = 0.0);

    Vec forward(const Vec& x) const;
    Vec forward(const Vec& x, Cache& cache) const;

    // Backpropagates dL/doutput; accumulates into grad, optionally returns dL/dinput.
    void backward(const Cache& cache, const Vec& doutput, Grad& grad, Vec* dinput = nullptr) const;

    Grad zero_grad() const;

    int input_dim() const { return layers_.empty() ? 0 : layers_.front().w.cols; }
    int output_dim() const { return layers_.empty() ? 0 : layers_.back().w.rows; }

    size_t param_count() const;
    Vec flatten() const;
    void unflatten(const Vec& flat);
    static Vec flatten_grad(const Grad& grad);

    void apply_grad(const Grad& grad, double lr); // plain SGD step (used in tests)

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

private:
    std::vector<Layer> layers_;
};

// Per-tensor Adam state over an Mlp's flattened parameters.
class Adam {
public:
    Adam() = default;
    explicit Adam(size_t n, double lr = 3e-4, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

    // params and grads are flat views of the same length as the state.
    void step(Vec& params, const Vec& grads);

    void step(Mlp& net, const Mlp::Grad& grad) {
        Vec p = net.flatten();
        Vec g = Mlp::flatten_grad(grad);
        step(p, g);
        net.unflatten(p);
    }

private:
    double lr_ = 3e-4;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    long t_ = 0;
    Vec m_, v_;
};

// Soft target-network update: target <- (1 - tau) * target + tau * online.
void soft_update(Mlp& target, const Mlp& online, double tau);

double l2_norm(const Vec& v);
bool all_finite(const Vec& v);

} // namespace shed

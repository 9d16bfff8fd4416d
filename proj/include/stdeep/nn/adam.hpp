#pragma once

#include <vector>

#include "stdeep/nn/layers.hpp"

namespace stdeep::nn {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Coupled L2 penalty: weight_decay * theta is added to the gradient.
    double weight_decay = 0.0;
};

/// Adam over the non-frozen parameters of a store.
class Adam {
public:
    Adam(ParameterStore& store, AdamOptions options);

    /// Applies one update from the accumulated gradients, then clears them.
    void step();

    void set_lr(double lr) { options_.lr = lr; }
    double lr() const { return options_.lr; }
    long steps() const { return t_; }

private:
    struct Slot {
        Parameter* param;
        Tensor m;
        Tensor v;
    };
    ParameterStore& store_;
    AdamOptions options_;
    std::vector<Slot> slots_;
    long t_ = 0;
};

}  // namespace stdeep::nn

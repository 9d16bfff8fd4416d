#include "stdeep/nn/adam.hpp"

#include <cmath>

namespace stdeep::nn {

Adam::Adam(ParameterStore& store, AdamOptions options) : store_(store), options_(options) {
    for (Parameter* p : store_.all()) {
        if (p->frozen) continue;
        slots_.push_back({p, Tensor(p->value().shape(), 0.0), Tensor(p->value().shape(), 0.0)});
    }
}

void Adam::step() {
    ++t_;
    const double b1 = options_.beta1;
    const double b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (auto& slot : slots_) {
        Node& node = *slot.param->var;
        if (slot.param->frozen) continue;
        const bool has_grad = node.grad.size() == node.value.size();
        for (std::size_t i = 0; i < node.value.size(); ++i) {
            const double g = (has_grad ? node.grad[i] : 0.0) + options_.weight_decay * node.value[i];
            slot.m[i] = b1 * slot.m[i] + (1.0 - b1) * g;
            slot.v[i] = b2 * slot.v[i] + (1.0 - b2) * g * g;
            const double mhat = slot.m[i] / c1;
            const double vhat = slot.v[i] / c2;
            node.value[i] -= options_.lr * mhat / (std::sqrt(vhat) + options_.eps);
        }
    }
    store_.zero_grad();
}

}  // namespace stdeep::nn

#include "stdeep/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "stdeep/error.hpp"

namespace stdeep::nn {

void Parameter::set_frozen(bool value) {
    frozen = value;
    var->requires_grad = !value;
}

Tensor Parameter::gradient() const {
    if (var->grad.size() == var->value.size()) return var->grad;
    return Tensor(var->value.shape(), 0.0);
}

Parameter& ParameterStore::add(std::string name, Tensor init) {
    if (find(name)) throw Error(ErrorKind::BadSpec, "duplicate parameter " + name);
    auto p = std::make_unique<Parameter>();
    p->name = std::move(name);
    p->var = leaf(std::move(init), true);
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter* ParameterStore::find(const std::string& name) {
    for (auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

const Parameter* ParameterStore::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p->name == name) return p.get();
    return nullptr;
}

std::vector<Parameter*> ParameterStore::all() {
    std::vector<Parameter*> out;
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
    std::vector<const Parameter*> out;
    for (const auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<Parameter*> ParameterStore::with_prefix(const std::string& prefix) {
    std::vector<Parameter*> out;
    for (auto& p : params_)
        if (p->name.rfind(prefix, 0) == 0) out.push_back(p.get());
    return out;
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->var->value.size();
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) p->var->grad = Tensor();
}

Tensor kaiming_normal(Shape shape, int fan_in, Rng& rng) {
    Tensor t(std::move(shape));
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (double& v : t.values()) v = dist(rng);
    return t;
}

Tensor uniform_tensor(Shape shape, double bound, Rng& rng) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : t.values()) v = dist(rng);
    return t;
}

Conv3d::Conv3d(ParameterStore& store, const std::string& name, int in_channels, int out_channels, Triple kernel,
               Triple stride, Triple pad, Rng& rng, bool with_bias)
    : stride_(stride), pad_(pad), out_channels_(out_channels) {
    const int fan_in = in_channels * kernel[0] * kernel[1] * kernel[2];
    weight_ = &store.add(name + ".weight",
                         kaiming_normal({out_channels, in_channels, kernel[0], kernel[1], kernel[2]}, fan_in, rng));
    if (with_bias) bias_ = &store.add(name + ".bias", Tensor({out_channels}, 0.0));
}

Var Conv3d::operator()(const Var& x) const {
    return conv3d(x, weight_->var, bias_ ? bias_->var : nullptr, stride_, pad_);
}

GroupNorm::GroupNorm(ParameterStore& store, const std::string& name, int channels, double gamma_init, bool per_frame,
                     int max_groups)
    : per_frame_(per_frame) {
    groups_ = std::max(1, std::min(channels, max_groups));
    while (channels % groups_ != 0) --groups_;
    gamma_ = &store.add(name + ".gamma", Tensor({channels}, gamma_init));
    beta_ = &store.add(name + ".beta", Tensor({channels}, 0.0));
}

Var GroupNorm::operator()(const Var& x) const { return group_norm(x, gamma_->var, beta_->var, groups_, per_frame_); }

Linear::Linear(ParameterStore& store, const std::string& name, int in_features, int out_features, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in_features));
    weight_ = &store.add(name + ".weight", uniform_tensor({out_features, in_features}, std::sqrt(3.0) * bound, rng));
    bias_ = &store.add(name + ".bias", uniform_tensor({out_features}, bound, rng));
}

Var Linear::operator()(const Var& x) const { return linear(x, weight_->var, bias_->var); }

Lstm::Lstm(ParameterStore& store, const std::string& name, int input_size, int hidden_size, Rng& rng)
    : hidden_(hidden_size) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    w_ih_ = &store.add(name + ".w_ih", uniform_tensor({4 * hidden_size, input_size}, bound, rng));
    w_hh_ = &store.add(name + ".w_hh", uniform_tensor({4 * hidden_size, hidden_size}, bound, rng));
    Tensor b = uniform_tensor({4 * hidden_size}, bound, rng);
    for (int i = hidden_size; i < 2 * hidden_size; ++i) b[i] += 1.0;  // forget-gate bias
    b_ = &store.add(name + ".bias", std::move(b));
}

std::vector<Var> Lstm::operator()(const std::vector<Var>& sequence) const {
    const int H = hidden_;
    Var h = constant(Tensor({H}, 0.0));
    Var c = constant(Tensor({H}, 0.0));
    std::vector<Var> outputs;
    outputs.reserve(sequence.size());
    for (const auto& x : sequence) {
        Var gates = add(linear(x, w_ih_->var, b_->var), linear(h, w_hh_->var, nullptr));
        Var i = sigmoid(slice(gates, 0, H));
        Var f = sigmoid(slice(gates, H, H));
        Var g = nn::tanh(slice(gates, 2 * H, H));
        Var o = sigmoid(slice(gates, 3 * H, H));
        c = add(mul(f, c), mul(i, g));
        h = mul(o, nn::tanh(c));
        outputs.push_back(h);
    }
    return outputs;
}

Gru::Gru(ParameterStore& store, const std::string& name, int input_size, int hidden_size, Rng& rng)
    : hidden_(hidden_size) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
    w_ih_ = &store.add(name + ".w_ih", uniform_tensor({3 * hidden_size, input_size}, bound, rng));
    w_hh_ = &store.add(name + ".w_hh", uniform_tensor({3 * hidden_size, hidden_size}, bound, rng));
    b_ih_ = &store.add(name + ".b_ih", uniform_tensor({3 * hidden_size}, bound, rng));
    b_hh_ = &store.add(name + ".b_hh", uniform_tensor({3 * hidden_size}, bound, rng));
}

std::vector<Var> Gru::operator()(const std::vector<Var>& sequence) const {
    const int H = hidden_;
    Var h = constant(Tensor({H}, 0.0));
    std::vector<Var> outputs;
    outputs.reserve(sequence.size());
    for (const auto& x : sequence) {
        Var gi = linear(x, w_ih_->var, b_ih_->var);
        Var gh = linear(h, w_hh_->var, b_hh_->var);
        Var r = sigmoid(add(slice(gi, 0, H), slice(gh, 0, H)));
        Var z = sigmoid(add(slice(gi, H, H), slice(gh, H, H)));
        Var n = nn::tanh(add(slice(gi, 2 * H, H), mul(r, slice(gh, 2 * H, H))));
        // h' = (1 - z) * n + z * h
        h = add(mul(affine(z, -1.0, 1.0), n), mul(z, h));
        outputs.push_back(h);
    }
    return outputs;
}

}  // namespace stdeep::nn

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "stdeep/nn/ops.hpp"

namespace stdeep::nn {

struct Parameter {
    std::string name;
    Var var;
    bool frozen = false;

    void set_frozen(bool value);
    const Tensor& value() const { return var->value; }
    /// Zero tensor when no gradient has been accumulated.
    Tensor gradient() const;
};

/// Owns the named parameters of one model; pointers stay valid for its lifetime.
class ParameterStore {
public:
    Parameter& add(std::string name, Tensor init);
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;

    std::vector<Parameter*> all();
    std::vector<const Parameter*> all() const;
    std::vector<Parameter*> with_prefix(const std::string& prefix);

    std::size_t scalar_count() const;
    void zero_grad();

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

/// Kaiming-normal weights (fan-in, ReLU gain).
Tensor kaiming_normal(Shape shape, int fan_in, Rng& rng);
Tensor uniform_tensor(Shape shape, double bound, Rng& rng);

class Conv3d {
public:
    Conv3d() = default;
    Conv3d(ParameterStore& store, const std::string& name, int in_channels, int out_channels, Triple kernel,
           Triple stride, Triple pad, Rng& rng, bool with_bias = true);

    Var operator()(const Var& x) const;
    int out_channels() const { return out_channels_; }

private:
    Parameter* weight_ = nullptr;
    Parameter* bias_ = nullptr;
    Triple stride_{1, 1, 1};
    Triple pad_{0, 0, 0};
    int out_channels_ = 0;
};

/// Group normalisation with per-channel affine; groups is the largest divisor of channels <= max_groups.
class GroupNorm {
public:
    GroupNorm() = default;
    GroupNorm(ParameterStore& store, const std::string& name, int channels, double gamma_init = 1.0,
              bool per_frame = false, int max_groups = 8);
    Var operator()(const Var& x) const;
    int groups() const { return groups_; }
    std::vector<Parameter*> parameters() const { return {gamma_, beta_}; }

private:
    Parameter* gamma_ = nullptr;
    Parameter* beta_ = nullptr;
    int groups_ = 1;
    bool per_frame_ = false;
};

class Linear {
public:
    Linear() = default;
    Linear(ParameterStore& store, const std::string& name, int in_features, int out_features, Rng& rng);

    Var operator()(const Var& x) const;

private:
    Parameter* weight_ = nullptr;
    Parameter* bias_ = nullptr;
};

/// Unidirectional LSTM layer, gate order (input, forget, cell, output).
class Lstm {
public:
    Lstm() = default;
    Lstm(ParameterStore& store, const std::string& name, int input_size, int hidden_size, Rng& rng);

    /// Returns the hidden state at every timestep.
    std::vector<Var> operator()(const std::vector<Var>& sequence) const;
    int hidden_size() const { return hidden_; }

private:
    Parameter* w_ih_ = nullptr;
    Parameter* w_hh_ = nullptr;
    Parameter* b_ = nullptr;
    int hidden_ = 0;
};

/// GRU layer with the reset gate applied to the projected hidden state.
class Gru {
public:
    Gru() = default;
    Gru(ParameterStore& store, const std::string& name, int input_size, int hidden_size, Rng& rng);

    /// Hidden state per timestep, in the order the sequence was consumed.
    std::vector<Var> operator()(const std::vector<Var>& sequence) const;
    int hidden_size() const { return hidden_; }

private:
    Parameter* w_ih_ = nullptr;
    Parameter* w_hh_ = nullptr;
    Parameter* b_ih_ = nullptr;
    Parameter* b_hh_ = nullptr;
    int hidden_ = 0;
};

}  // namespace stdeep::nn

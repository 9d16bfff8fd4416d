#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "stdeep/nn/tensor.hpp"

namespace stdeep::nn {

struct Node;
using Var = std::shared_ptr<Node>;

/**
 * One value in a recorded computation. Intermediate nodes are created by
 * the ops in ops.hpp and die with the last Var that references them;
 * parameter nodes are long-lived leaves whose gradient accumulates across
 * backward passes until cleared.
 *
 * backward_fn reads this node's grad and accumulates into the inputs'
 * grads. It must not capture the owning node (that would form a cycle).
 */
struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<Var> inputs;
    std::function<void(Node&)> backward_fn;

    /// Allocates a zero gradient of the value's shape if none exists yet.
    Tensor& ensure_grad();
};

Var constant(Tensor value);
Var leaf(Tensor value, bool requires_grad);

/// True when any input requires a gradient.
bool any_requires_grad(const std::vector<Var>& inputs);

/// Creates an op output node. The backward closure is dropped when no
/// input requires a gradient, so frozen sub-graphs cost nothing.
Var make_node(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn);

/**
 * Reverse-mode sweep from root. The root's gradient is seeded with
 * `seed` (broadcast over its elements); gradients accumulate into every
 * reachable node that requires one.
 */
void backward(const Var& root, double seed = 1.0);

/// Same as backward() with an explicit seed tensor of root's shape.
void backward(const Var& root, const Tensor& seed);

}  // namespace stdeep::nn

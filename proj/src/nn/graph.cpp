#include "stdeep/nn/graph.hpp"

#include <unordered_set>
#include <utility>

#include "stdeep/error.hpp"

namespace stdeep::nn {

Tensor& Node::ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor(value.shape(), 0.0);
    return grad;
}

Var constant(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    return n;
}

Var leaf(Tensor value, bool requires_grad) {
    auto n = constant(std::move(value));
    n->requires_grad = requires_grad;
    return n;
}

bool any_requires_grad(const std::vector<Var>& inputs) {
    for (const auto& v : inputs)
        if (v && v->requires_grad) return true;
    return false;
}

Var make_node(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    if (any_requires_grad(inputs)) {
        n->requires_grad = true;
        n->inputs = std::move(inputs);
        n->backward_fn = std::move(backward_fn);
    }
    return n;
}

namespace {

std::vector<Node*> topological_order(Node* root) {
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    // iterative post-order DFS
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child && child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;
}

void sweep(Node* root) {
    auto order = topological_order(root);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->grad.size() == n->value.size()) n->backward_fn(*n);
    }
}

}  // namespace

void backward(const Var& root, double seed) {
    if (!root->requires_grad) return;
    root->ensure_grad();
    for (double& g : root->grad.values()) g += seed;
    sweep(root.get());
}

void backward(const Var& root, const Tensor& seed) {
    if (!root->requires_grad) return;
    if (seed.size() != root->value.size()) throw Error(ErrorKind::ShapeMismatch, "backward seed shape");
    auto& g = root->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
    sweep(root.get());
}

}  // namespace stdeep::nn

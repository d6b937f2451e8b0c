#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "sgnv/core/tensor.hpp"

namespace sgnv {

// Reverse-mode tape. Each Node owns its value and, after backward(), the
// gradient of the root scalar w.r.t. that value. The graph is a DAG of
// shared_ptr edges; backward runs in reverse topological order.

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
  Tensor val;
  Tensor grad;  // allocated lazily on backward
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;  // accumulates into parents' grads

  explicit Node(Tensor v) : val(std::move(v)) {}

  void ensure_grad() {
    if (grad.size() != val.size()) grad = Tensor(val.shape());
  }
  void zero_grad() { grad = Tensor(); }
};

inline Var make_leaf(Tensor t, bool requires_grad = false) {
  auto n = std::make_shared<Node>(std::move(t));
  n->requires_grad = requires_grad;
  return n;
}

inline Var constant(Tensor t) { return make_leaf(std::move(t), false); }

/// Creates an interior node. requires_grad is inherited from parents.
inline Var make_op(Tensor val, std::vector<Var> parents,
                   std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>(std::move(val));
  bool rg = false;
  for (auto& p : parents) rg = rg || p->requires_grad;
  n->requires_grad = rg;
  if (rg) {
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward_fn);
  }
  return n;
}

/// Backpropagates from a scalar root. Seeds d(root)/d(root) = 1.
void backward(const Var& root);

}  // namespace sgnv

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace sarc::nn {

inline std::string shape_string(const std::vector<int>& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

// Dense row-major tensor participating in reverse-mode differentiation.
// A Tensor is a shared handle onto a graph node; copying it is cheap and the
// handle is safe to move between threads. Ops build the graph functionally,
// so there is no global tape and no shared mutable state between graphs.
template <class T>
class Tensor {
 public:
  struct Node {
    std::vector<int> shape;
    std::vector<T> data;
    std::vector<T> grad;  // allocated iff needs_grad
    bool needs_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward;  // accumulates into parents' grad

    int size() const { return static_cast<int>(data.size()); }
  };

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape, bool needs_grad = false) {
    return from_data(shape, std::vector<T>(count(shape), T(0)), needs_grad);
  }

  static Tensor constant(std::vector<int> shape, T value) {
    return from_data(shape, std::vector<T>(count(shape), value), false);
  }

  static Tensor from_data(std::vector<int> shape, std::vector<T> data, bool needs_grad = false) {
    if (data.size() != count(shape))
      throw std::invalid_argument("Tensor: data length " + std::to_string(data.size()) + " does not match shape " + shape_string(shape));
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->data = std::move(data);
    n->needs_grad = needs_grad;
    if (needs_grad) n->grad.assign(n->data.size(), T(0));
    Tensor t;
    t.n_ = std::move(n);
    return t;
  }

  // graph-node constructor used by every op; backward_fn may be empty for
  // ops that never propagate (all-constant parents)
  static Tensor make_op(std::vector<int> shape, std::vector<Tensor> parents, std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->data.assign(count(n->shape), T(0));
    for (auto& p : parents) {
      if (!p.defined()) throw std::invalid_argument("Tensor op: undefined parent");
      n->needs_grad = n->needs_grad || p.n_->needs_grad;
      n->parents.push_back(p.n_);
    }
    if (n->needs_grad) {
      n->grad.assign(n->data.size(), T(0));
      n->backward = std::move(backward_fn);
    }
    Tensor t;
    t.n_ = std::move(n);
    return t;
  }

  bool defined() const { return n_ != nullptr; }
  const std::vector<int>& shape() const { return node_ref().shape; }
  int rank() const { return static_cast<int>(shape().size()); }
  int dim(int i) const { return shape().at(static_cast<size_t>(i)); }
  int size() const { return node_ref().size(); }

  std::vector<T>& data() { return node_ref().data; }
  const std::vector<T>& data() const { return node_ref().data; }
  bool needs_grad() const { return node_ref().needs_grad; }

  std::vector<T>& grad() {
    if (!needs_grad()) throw std::logic_error("Tensor::grad: tensor does not track gradients");
    return node_ref().grad;
  }
  const std::vector<T>& grad() const {
    if (!needs_grad()) throw std::logic_error("Tensor::grad: tensor does not track gradients");
    return node_ref().grad;
  }

  void zero_grad() {
    if (needs_grad()) std::fill(node_ref().grad.begin(), node_ref().grad.end(), T(0));
  }

  T item() const {
    if (size() != 1) throw std::logic_error("Tensor::item: size is " + std::to_string(size()));
    return data()[0];
  }

  // Reverse pass from a scalar output: seeds d(out)/d(out)=1 and walks the
  // graph in reverse topological order, accumulating into every needs_grad
  // node it reaches. Call once per constructed graph.
  void backward() {
    Node* root = &node_ref();
    if (root->size() != 1) throw std::logic_error("Tensor::backward: output must be scalar, shape " + shape_string(root->shape));
    if (!root->needs_grad) return;

    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    struct Frame {
      Node* node;
      size_t next;
    };
    std::vector<Frame> stack{{root, 0}};
    visited.insert(root);
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < f.node->parents.size()) {
        Node* p = f.node->parents[f.next++].get();
        if (p->needs_grad && visited.insert(p).second) stack.push_back({p, 0});
      } else {
        order.push_back(f.node);
        stack.pop_back();
      }
    }

    root->grad[0] += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
      if ((*it)->backward) (*it)->backward(**it);
  }

  std::shared_ptr<Node> node() const { return n_; }

  bool same_node(const Tensor& other) const { return n_ == other.n_; }

 private:
  static size_t count(const std::vector<int>& shape) {
    size_t n = 1;
    for (int d : shape) {
      if (d < 0) throw std::invalid_argument("Tensor: negative dimension in shape " + shape_string(shape));
      n *= static_cast<size_t>(d);
    }
    return n;
  }

  Node& node_ref() const {
    if (!n_) throw std::logic_error("Tensor: use of default-constructed tensor");
    return *n_;
  }

  std::shared_ptr<Node> n_;
};

}  // namespace sarc::nn
